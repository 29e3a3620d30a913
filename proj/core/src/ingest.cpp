// SPDX-License-Identifier: Apache-2.0
#include "muri/ingest.hpp"

#include <algorithm>
#include <limits>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <unordered_map>

#include "muri/jsonl.hpp"
#include "muri/text.hpp"

namespace muri {

namespace {

using json = nlohmann::json;

constexpr std::array<std::string_view, 4> kFormatNames{"jsonl", "wiki-extract", "wikihow-json",
                                                       "task-json"};
constexpr std::size_t kMaxStoredWarnings = 20;

std::optional<std::string> string_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) return std::nullopt;
  return it->get<std::string>();
}

}  // namespace

std::string_view to_string(CorpusFormat f) { return kFormatNames[static_cast<std::size_t>(f)]; }

std::optional<CorpusFormat> parse_corpus_format(std::string_view name) {
  for (std::size_t i = 0; i < kFormatNames.size(); ++i)
    if (kFormatNames[i] == name) return static_cast<CorpusFormat>(i);
  return std::nullopt;
}

CorpusManifest CorpusManifest::load(const std::filesystem::path& path,
                                    const LanguageRegistry& registry) {
  return parse(read_file(path), path.parent_path(), registry);
}

CorpusManifest CorpusManifest::parse(std::string_view text, const std::filesystem::path& base_dir,
                                     const LanguageRegistry& registry) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("manifest: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::runtime_error("manifest: expected a JSON object");
  CorpusManifest m;
  const json entries = j.value("entries", json::array());
  if (!entries.is_array()) throw std::runtime_error("manifest: 'entries' must be an array");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const json& e = entries[i];
    const std::string where = "manifest entry " + std::to_string(i);
    if (!e.is_object()) throw std::runtime_error(where + ": expected an object");
    ManifestEntry entry;
    auto path = string_field(e, "path");
    if (!path) throw std::runtime_error(where + ": missing 'path'");
    entry.path = std::filesystem::path(*path);
    if (entry.path.is_relative()) entry.path = base_dir / entry.path;
    const std::string format = e.value("format", std::string("jsonl"));
    auto fmt = parse_corpus_format(format);
    if (!fmt) throw std::runtime_error(where + ": unknown format '" + format + "'");
    entry.format = *fmt;
    auto source = string_field(e, "source");
    if (!source) throw std::runtime_error(where + ": missing 'source'");
    auto src = parse_source(*source);
    if (!src) throw std::runtime_error(where + ": unknown source '" + *source + "'");
    entry.source = *src;
    if (auto lang = string_field(e, "lang")) {
      auto tag = LanguageTag::parse(*lang);
      if (!tag || !registry.contains(*tag))
        throw std::runtime_error(where + ": unknown language tag '" + *lang + "'");
      entry.lang = *tag;
    }
    std::ifstream probe(entry.path, std::ios::binary);
    if (!probe || std::filesystem::is_directory(entry.path))
      throw std::runtime_error(where + ": cannot read " + entry.path.string());
    m.entries.push_back(std::move(entry));
  }
  if (auto s = j.find("sample"); s != j.end()) {
    if (!s->is_object()) throw std::runtime_error("manifest: 'sample' must be an object");
    if (auto n = s->find("n"); n != s->end()) m.sampling.total = n->get<std::size_t>();
    if (auto d = s->find("per_lang_default"); d != s->end())
      m.sampling.per_lang_default = d->get<std::size_t>();
    if (auto pl = s->find("per_lang"); pl != s->end()) {
      for (auto it = pl->begin(); it != pl->end(); ++it) {
        auto tag = LanguageTag::parse(it.key());
        if (!tag || !registry.contains(*tag))
          throw std::runtime_error("manifest: unknown language in sample.per_lang: " + it.key());
        m.sampling.per_lang[tag->str()] = it->get<std::size_t>();
      }
    }
  }
  return m;
}

DocumentStream::DocumentStream(const CorpusManifest& manifest, const LanguageRegistry& registry)
    : manifest_(manifest), registry_(registry) {}

void DocumentStream::warn(std::string message) {
  if (stats_.warnings.size() < kMaxStoredWarnings) stats_.warnings.push_back(std::move(message));
}

bool DocumentStream::open_next_file() {
  file_.close();
  current_ = nullptr;
  while (entry_ < manifest_.entries.size()) {
    const ManifestEntry& e = manifest_.entries[entry_++];
    if (!is_document_format(e.format)) continue;
    file_.clear();
    file_.open(e.path, std::ios::binary);
    if (!file_) throw std::runtime_error("cannot read corpus file: " + e.path.string());
    current_ = &e;
    line_no_ = 0;
    return true;
  }
  return false;
}

std::optional<SourceDocument> DocumentStream::next() {
  std::string line;
  while (true) {
    if (!current_ && !open_next_file()) return std::nullopt;
    if (!std::getline(file_, line)) {
      if (file_.bad()) throw std::runtime_error("read error: " + current_->path.string());
      current_ = nullptr;
      continue;
    }
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    const std::string where = current_->path.filename().string() + ":" + std::to_string(line_no_);

    if (!text::is_valid_utf8(line)) {
      ++stats_.malformed;
      warn(where + ": invalid UTF-8");
      continue;
    }
    json row;
    try {
      row = json::parse(line);
    } catch (const json::parse_error&) {
      ++stats_.malformed;
      warn(where + ": malformed JSON");
      continue;
    }
    if (!row.is_object()) {
      ++stats_.malformed;
      warn(where + ": expected an object");
      continue;
    }
    auto body = string_field(row, "text");
    if (!body || text::trim(*body).empty()) {
      ++stats_.malformed;
      warn(where + ": missing or empty 'text'");
      continue;
    }
    std::optional<LanguageTag> lang = current_->lang;
    if (!lang) {
      if (auto l = string_field(row, "lang")) lang = registry_.resolve(*l);
    }
    if (!lang || !registry_.contains(*lang)) {
      ++stats_.malformed;
      warn(where + ": missing or unknown language");
      continue;
    }
    auto title = string_field(row, "title");
    if (current_->format == CorpusFormat::wiki_extract && !title) {
      ++stats_.malformed;
      warn(where + ": wiki-extract record without 'title'");
      continue;
    }

    SourceDocument doc;
    doc.lang = *lang;
    doc.text = std::move(*body);
    doc.source = current_->source;
    auto orig_id = string_field(row, "id");
    auto url = string_field(row, "url");
    if (orig_id) doc.meta["orig_id"] = *orig_id;
    if (url) doc.meta["url"] = *url;
    if (title) doc.meta["title"] = *title;
    if (auto license = string_field(row, "license")) doc.meta["license"] = *license;
    const std::string key = orig_id ? *orig_id : url.value_or("");
    const std::uint64_t hash = content_hash(doc.source, key, doc.text);
    doc.id = content_id(doc.source, key, doc.text);
    if (!seen_ids_.insert(hash).second) {
      ++stats_.duplicate_ids;
      warn(where + ": duplicate id " + doc.id);
      continue;
    }
    ++stats_.documents;
    return doc;
  }
}

std::vector<SourceDocument> collect_documents(const CorpusManifest& manifest,
                                              const LanguageRegistry& registry,
                                              IngestStats* stats) {
  DocumentStream stream(manifest, registry);
  std::vector<SourceDocument> out;
  while (auto d = stream.next()) out.push_back(std::move(*d));
  if (stats) *stats = stream.stats();
  return out;
}

std::vector<SourceDocument> sample_documents(DocumentStream& stream, std::size_t n,
                                             std::uint64_t seed) {
  ReservoirSampler<SourceDocument> sampler(n, seed);
  while (auto d = stream.next()) sampler.push(std::move(*d));
  return std::move(sampler).take();
}

std::vector<SourceDocument> sample_documents(std::vector<SourceDocument> docs, std::size_t n,
                                             std::uint64_t seed) {
  ReservoirSampler<SourceDocument> sampler(n, seed);
  for (auto& d : docs) sampler.push(std::move(d));
  return std::move(sampler).take();
}

PlanSampler::PlanSampler(SamplingPlan plan, std::uint64_t seed)
    : plan_(std::move(plan)), seed_(seed) {}

void PlanSampler::push(SourceDocument doc) {
  const std::size_t position = seen_++;
  if (!plan_.stratified()) {
    if (!plan_.total) {
      kept_.push_back(std::move(doc));
      return;
    }
    if (!single_) single_.emplace(*plan_.total, seed_);
    single_->push(std::move(doc));
    return;
  }
  const std::string tag = doc.lang.str();
  auto it = per_lang_.find(tag);
  if (it == per_lang_.end()) {
    std::size_t quota = std::numeric_limits<std::size_t>::max();
    if (auto q = plan_.per_lang.find(tag); q != plan_.per_lang.end())
      quota = q->second;
    else if (plan_.per_lang_default)
      quota = *plan_.per_lang_default;
    it = per_lang_.emplace(tag, Reservoir(quota, derive_seed(seed_, tag))).first;
  }
  it->second.push({position, std::move(doc)});
}

std::vector<SourceDocument> PlanSampler::take() && {
  if (!plan_.stratified()) {
    if (!plan_.total) return std::move(kept_);
    if (!single_) return {};
    return std::move(*single_).take();
  }
  // Merge the per-language samples back into arrival order.
  std::vector<std::pair<std::size_t, SourceDocument>> merged;
  for (auto& [tag, sampler] : per_lang_)
    for (auto& item : std::move(sampler).take()) merged.push_back(std::move(item));
  std::sort(merged.begin(), merged.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<SourceDocument> out;
  out.reserve(merged.size());
  for (auto& [pos, doc] : merged) out.push_back(std::move(doc));
  if (plan_.total && out.size() > *plan_.total)
    out = sample_documents(std::move(out), *plan_.total, seed_);
  return out;
}

std::vector<SourceDocument> sample_with_plan(std::vector<SourceDocument> docs,
                                             const SamplingPlan& plan, std::uint64_t seed) {
  PlanSampler sampler(plan, seed);
  for (auto& d : docs) sampler.push(std::move(d));
  return std::move(sampler).take();
}

QualityMeasures measure_quality(std::string_view raw) {
  QualityMeasures m;
  const std::string_view body = text::trim(raw);
  std::size_t pos = 0, letters = 0, visible = 0;
  while (pos < body.size()) {
    const char32_t cp = text::next_codepoint(body, pos);
    ++m.chars;
    if (text::is_space(cp)) continue;
    ++visible;
    if (text::is_alpha(cp)) ++letters;
  }
  m.alpha_ratio = visible == 0 ? 0.0 : static_cast<double>(letters) / static_cast<double>(visible);

  std::unordered_map<std::string_view, std::size_t> counts;
  std::size_t lines = 0;
  for (std::string_view line : text::split_lines(body)) {
    line = text::trim(line);
    if (line.empty()) continue;
    ++lines;
    ++counts[line];
  }
  if (lines > 0)
    m.line_dup_ratio =
        static_cast<double>(lines - counts.size()) / static_cast<double>(lines);
  return m;
}

GateVerdict quality_gate(const SourceDocument& doc, const QualityGateConfig& cfg) {
  const QualityMeasures m = measure_quality(doc.text);
  if (m.chars < cfg.min_chars) return {false, "too_short"};
  if (m.chars > cfg.max_chars) return {false, "too_long"};
  if (m.alpha_ratio < cfg.min_alpha_ratio) return {false, "low_alpha"};
  if (m.line_dup_ratio > cfg.max_line_dup_ratio) return {false, "repetition"};
  return {};
}

}  // namespace muri
