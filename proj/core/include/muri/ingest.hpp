// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "muri/record.hpp"
#include "muri/rng.hpp"

namespace muri {

enum class CorpusFormat { jsonl, wiki_extract, wikihow_json, task_json };

std::string_view to_string(CorpusFormat f);
std::optional<CorpusFormat> parse_corpus_format(std::string_view name);

/// Formats that hold raw documents for the reverse-instruction path. The
/// other formats feed the adapters.
constexpr bool is_document_format(CorpusFormat f) {
  return f == CorpusFormat::jsonl || f == CorpusFormat::wiki_extract;
}

struct ManifestEntry {
  std::filesystem::path path;
  CorpusFormat format = CorpusFormat::jsonl;
  std::optional<LanguageTag> lang;  // overrides per-row language
  Source source = Source::culturax;
};

/// How many documents to draw after the quality gate.
struct SamplingPlan {
  std::optional<std::size_t> total;             // single reservoir over everything
  std::optional<std::size_t> per_lang_default;  // quota for languages without an explicit one
  std::map<std::string, std::size_t> per_lang;  // tag -> quota

  bool stratified() const { return per_lang_default.has_value() || !per_lang.empty(); }
};

struct CorpusManifest {
  std::vector<ManifestEntry> entries;
  SamplingPlan sampling;

  /// Relative entry paths resolve against the manifest's directory. Every
  /// path must exist and be readable; otherwise std::runtime_error.
  static CorpusManifest load(const std::filesystem::path& path, const LanguageRegistry& registry);
  static CorpusManifest parse(std::string_view json, const std::filesystem::path& base_dir,
                              const LanguageRegistry& registry);
};

struct IngestStats {
  std::size_t documents = 0;     // yielded
  std::size_t malformed = 0;     // skipped rows (bad JSON, missing text, unknown language)
  std::size_t duplicate_ids = 0; // skipped rows whose content id was already seen
  std::vector<std::string> warnings;  // first few messages, for the run report

  std::size_t warning_count() const { return malformed + duplicate_ids; }
};

/// Streams documents file by file, line by line. Only document formats are
/// read; adapter formats in the manifest are ignored here.
class DocumentStream {
 public:
  DocumentStream(const CorpusManifest& manifest, const LanguageRegistry& registry);

  std::optional<SourceDocument> next();
  const IngestStats& stats() const { return stats_; }

 private:
  bool open_next_file();
  void warn(std::string message);

  const CorpusManifest& manifest_;
  const LanguageRegistry& registry_;
  std::size_t entry_ = 0;
  std::ifstream file_;
  const ManifestEntry* current_ = nullptr;
  std::size_t line_no_ = 0;
  std::unordered_set<std::uint64_t> seen_ids_;  // content hashes, 8 bytes per document
  IngestStats stats_;
};

/// Reads the whole stream into memory. Test and small-corpus convenience.
std::vector<SourceDocument> collect_documents(const CorpusManifest& manifest,
                                              const LanguageRegistry& registry,
                                              IngestStats* stats = nullptr);

/// Algorithm R reservoir over a stream of unknown length. The sample is
/// returned in arrival order.
template <typename T>
class ReservoirSampler {
 public:
  ReservoirSampler(std::size_t capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed) {
    slots_.reserve(std::min<std::size_t>(capacity, 4096));
  }

  void push(T item) {
    const std::uint64_t position = seen_++;
    if (capacity_ == 0) return;
    if (slots_.size() < capacity_) {
      slots_.push_back({position, std::move(item)});
      return;
    }
    const std::uint64_t j = rng_.below(seen_);
    if (j < capacity_) slots_[j] = {position, std::move(item)};
  }

  std::uint64_t seen() const { return seen_; }

  std::vector<T> take() && {
    std::sort(slots_.begin(), slots_.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<T> out;
    out.reserve(slots_.size());
    for (auto& s : slots_) out.push_back(std::move(s.second));
    return out;
  }

 private:
  std::size_t capacity_;
  Rng rng_;
  std::uint64_t seen_ = 0;
  std::vector<std::pair<std::uint64_t, T>> slots_;
};

/// Exactly min(n, stream length) distinct documents, a pure function of
/// (stream, n, seed).
std::vector<SourceDocument> sample_documents(DocumentStream& stream, std::size_t n,
                                             std::uint64_t seed);
std::vector<SourceDocument> sample_documents(std::vector<SourceDocument> docs, std::size_t n,
                                             std::uint64_t seed);

/// Streaming form of a SamplingPlan: one reservoir per language when
/// stratified, a single reservoir when only a total is set, otherwise
/// everything. The result is in arrival order.
class PlanSampler {
 public:
  PlanSampler(SamplingPlan plan, std::uint64_t seed);
  void push(SourceDocument doc);
  std::size_t seen() const { return seen_; }
  std::vector<SourceDocument> take() &&;

 private:
  using Reservoir = ReservoirSampler<std::pair<std::size_t, SourceDocument>>;
  SamplingPlan plan_;
  std::uint64_t seed_;
  std::size_t seen_ = 0;
  std::vector<SourceDocument> kept_;
  std::optional<ReservoirSampler<SourceDocument>> single_;
  std::map<std::string, Reservoir> per_lang_;
};

/// Applies a SamplingPlan: one reservoir per language when stratified,
/// otherwise a single reservoir (or everything when no total is given).
std::vector<SourceDocument> sample_with_plan(std::vector<SourceDocument> docs,
                                             const SamplingPlan& plan, std::uint64_t seed);

struct QualityGateConfig {
  std::size_t min_chars = 200;
  std::size_t max_chars = 20000;
  double min_alpha_ratio = 0.5;
  double max_line_dup_ratio = 0.3;
};

struct GateVerdict {
  bool pass = true;
  std::string reason;  // too_short, too_long, low_alpha, repetition

  explicit operator bool() const { return pass; }
};

struct QualityMeasures {
  std::size_t chars = 0;         // code points after trimming
  double alpha_ratio = 0.0;      // letters over non-space code points
  double line_dup_ratio = 0.0;   // repeated non-empty lines over non-empty lines
};

QualityMeasures measure_quality(std::string_view text);
GateVerdict quality_gate(const SourceDocument& doc, const QualityGateConfig& cfg = {});

}  // namespace muri
