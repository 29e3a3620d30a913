// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "muri/jsonl.hpp"
#include "muri/record.hpp"

namespace muri {

// ---------------------------------------------------------------------------
// Splits

struct SplitPlan {
  std::array<double, 3> ratios{0.90, 0.05, 0.05};  // train, validation, test
  bool by_source = true;
  bool by_lang = true;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument unless every ratio is positive and they
  /// sum to 1 within 1e-9.
  void validate() const;
};

/// Largest-remainder apportionment of m items over ratios. Ties in the
/// remainder go to the earlier split.
std::array<std::size_t, 3> apportion(std::size_t m, const std::array<double, 3>& ratios);

struct SplitReport {
  std::size_t strata = 0;
  std::size_t small_strata = 0;  // fewer than 3 records, all sent to train
  std::map<std::string, std::array<std::size_t, 3>> counts;  // stratum -> train/val/test
  std::vector<std::string> warnings;
};

std::string stratum_key(const InstructionRecord& rec, const SplitPlan& plan);

/// Assigns every record a split. Each stratum is shuffled with a seed derived
/// from (plan.seed, stratum key) and cut by apportion(). Throws
/// std::invalid_argument for a record whose trace carries a drop.
SplitReport assign_splits(std::vector<InstructionRecord>& records, const SplitPlan& plan);

// ---------------------------------------------------------------------------
// Composition statistics

struct DatasetStats {
  /// (source, lang tag) -> count. Rows from a count manifest without a
  /// language are stored under the empty tag.
  std::map<std::pair<Source, std::string>, std::size_t> cells;
  /// Language counts declared by a count manifest for sources without
  /// per-language rows.
  std::map<Source, std::size_t> declared_languages;

  std::size_t total() const;
  std::size_t count(Source s) const;
  /// Distinct languages of a source set; nullopt when some source only has
  /// a declared count (a union cannot be formed).
  std::optional<std::size_t> languages(std::span<const Source> sources) const;
};

DatasetStats compute_stats(std::span<const InstructionRecord> records);

/// Count manifest: {"counts":[{"source":"wikipedia","lang":"deu_Latn","count":12}, ...]}.
/// A row may omit "lang" and give "languages" (a declared language count)
/// instead. Throws std::invalid_argument on unknown sources or negative
/// counts.
DatasetStats stats_from_counts(std::string_view json);

/// Groups used by the rendered table.
struct SourceGroup {
  std::string label;
  std::vector<Source> members;
};
const std::vector<SourceGroup>& table_groups();
std::string_view display_name(Source s);

/// Fixed-width text table: group rows with member rows indented beneath,
/// then the total. Counts use thousands separators.
std::string render_stats_table(const DatasetStats& stats);
std::string stats_json(const DatasetStats& stats);

// ---------------------------------------------------------------------------
// Linguistic diversity

/// Shipped mapping tables. Every lookup misses to "unknown".
struct DiversityTables {
  std::map<std::string, int> resource_level;         // language code -> 0..5
  std::map<std::string, std::string> script_class;   // script code -> class
  std::map<std::string, std::string> word_order;     // language code -> class
  std::map<std::string, std::string> case_marking;   // language code -> class

  /// Reads resource_level.tsv, scripts.tsv, word_order.tsv and
  /// case_marking.tsv from dir. Malformed rows or unknown class values throw
  /// std::runtime_error naming file and line.
  static DiversityTables load(const std::filesystem::path& dir);
  static const DiversityTables& shipped();
};

inline constexpr std::string_view kUnknown = "unknown";

struct LanguageProfile {
  LanguageTag lang;
  std::size_t records = 0;
  std::string resource_level;  // "0".."5" or unknown
  std::string script;
  std::string word_order;
  std::string case_marking;
};

struct DiversityReport {
  std::vector<LanguageProfile> languages;  // tag order
  /// Histograms over languages: dimension -> class -> language count.
  std::map<std::string, std::map<std::string, std::size_t>> histograms;
  /// Same dimensions weighted by record count.
  std::map<std::string, std::map<std::string, std::size_t>> record_histograms;

  const LanguageProfile* find(const LanguageTag& tag) const;
};

DiversityReport compute_diversity(const std::map<LanguageTag, std::size_t>& counts,
                                  const DiversityTables& tables);
DiversityReport compute_diversity(std::span<const InstructionRecord> records,
                                  const DiversityTables& tables);
std::string diversity_json(const DiversityReport& report);

// ---------------------------------------------------------------------------
// Review sheets

inline constexpr std::array<std::string_view, 8> kReviewColumns{
    "instruction",           "output",
    "Alignment",             "InstructionFormat",
    "InstructionCorrectness", "OutputCorrectness",
    "InformationalSufficiency", "Notes"};

struct ReviewSheet {
  struct Row {
    std::string id;
    LanguageTag lang;
    std::string instruction;
    std::string output;
  };
  std::vector<Row> rows;
  std::vector<std::string> warnings;
};

/// For each language (all languages present when langs is empty), a seeded
/// uniform draw of up to per_lang records; a language with fewer records
/// contributes all of them and a warning.
ReviewSheet export_review_sheet(std::span<const InstructionRecord> records,
                                const std::vector<LanguageTag>& langs, std::size_t per_lang,
                                std::uint64_t seed);

/// Tab-separated, header line first, rating columns empty. Backslash, tab,
/// newline and carriage return inside cells are escaped as \\ \t \n \r.
std::string render_review_tsv(const ReviewSheet& sheet);
std::string escape_tsv_cell(std::string_view text);

// ---------------------------------------------------------------------------
// Release files

/// Writes train.jsonl, validation.jsonl and test.jsonl under dir (atomic
/// per file). Records keep their relative order.
void write_release(const std::filesystem::path& dir, std::span<const InstructionRecord> records,
                   SerializeOptions opts = {});

}  // namespace muri
