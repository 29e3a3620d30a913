// SPDX-License-Identifier: Apache-2.0
#include "muri/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "muri/ingest.hpp"
#include "muri/rng.hpp"
#include "muri/text.hpp"

namespace muri {

namespace {

using ojson = nlohmann::ordered_json;

constexpr std::array kSplits{Split::train, Split::validation, Split::test};

std::string with_thousands(std::size_t n) {
  std::string digits = std::to_string(n);
  std::string out;
  const std::size_t lead = digits.size() % 3;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i && (i % 3) == lead) out += ',';
    out += digits[i];
  }
  return out;
}

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    cells.emplace_back(line.substr(start, tab == std::string_view::npos ? tab : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return cells;
}

// Reads a two-or-more column TSV with '#' comments and a header row.
// Calls fn(cells, line_no) for each data row.
template <typename Fn>
void read_table(const std::filesystem::path& path, const std::vector<std::string>& header, Fn fn) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read mapping table " + path.string());
  std::string line;
  std::size_t line_no = 0;
  bool seen_header = false;
  auto fail = [&](const std::string& what) {
    throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty() || line.front() == '#') continue;
    auto cells = split_tabs(line);
    if (!seen_header) {
      if (cells != header) fail("unexpected header");
      seen_header = true;
      continue;
    }
    if (cells.size() != header.size())
      fail("expected " + std::to_string(header.size()) + " columns, found " +
           std::to_string(cells.size()));
    for (const auto& c : cells)
      if (text::trim(c).empty()) fail("empty cell");
    fn(cells, fail);
  }
  if (!seen_header) throw std::runtime_error(path.string() + ": missing header");
}

bool is_language_code(std::string_view s) {
  return s.size() == 3 && std::all_of(s.begin(), s.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

}  // namespace

// ---------------------------------------------------------------------------
// Splits

void SplitPlan::validate() const {
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0)) throw std::invalid_argument("split ratios must be positive");
    sum += r;
  }
  if (std::fabs(sum - 1.0) > 1e-9) throw std::invalid_argument("split ratios must sum to 1");
}

std::array<std::size_t, 3> apportion(std::size_t m, const std::array<double, 3>& ratios) {
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainders{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double quota = static_cast<double>(m) * ratios[i];
    // The epsilon keeps exact quotas like 100 * 0.05 from flooring to 4.
    counts[i] = static_cast<std::size_t>(std::floor(quota + 1e-9));
    remainders[i] = quota - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t i = 0; assigned < m; i = (i + 1) % 3, ++assigned) ++counts[order[i]];
  return counts;
}

std::string stratum_key(const InstructionRecord& rec, const SplitPlan& plan) {
  std::string key;
  if (plan.by_source) key += to_string(rec.source);
  if (plan.by_lang) {
    if (!key.empty()) key += '/';
    key += rec.lang.str();
  }
  return key.empty() ? std::string("all") : key;
}

SplitReport assign_splits(std::vector<InstructionRecord>& records, const SplitPlan& plan) {
  plan.validate();
  std::map<std::string, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].trace.dropped())
      throw std::invalid_argument("record " + records[i].id + " was dropped and cannot be split");
    strata[stratum_key(records[i], plan)].push_back(i);
  }

  SplitReport report;
  report.strata = strata.size();
  for (auto& [key, members] : strata) {
    std::array<std::size_t, 3> counts{members.size(), 0, 0};
    if (members.size() < 3) {
      ++report.small_strata;
      report.warnings.push_back("stratum " + key + " has " + std::to_string(members.size()) +
                                " record(s); all assigned to train");
    } else {
      counts = apportion(members.size(), plan.ratios);
      Rng rng(derive_seed(plan.seed, key));
      rng.shuffle(members);
    }
    std::size_t pos = 0;
    for (std::size_t s = 0; s < 3; ++s)
      for (std::size_t n = 0; n < counts[s]; ++n) records[members[pos++]].split = kSplits[s];
    report.counts[key] = counts;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Statistics

std::size_t DatasetStats::total() const {
  std::size_t sum = 0;
  for (const auto& [key, n] : cells) sum += n;
  return sum;
}

std::size_t DatasetStats::count(Source s) const {
  std::size_t sum = 0;
  for (const auto& [key, n] : cells)
    if (key.first == s) sum += n;
  return sum;
}

std::optional<std::size_t> DatasetStats::languages(std::span<const Source> sources) const {
  std::set<std::string> tags;
  std::optional<std::size_t> declared_only;
  std::size_t declared_sources = 0;
  for (Source s : sources) {
    bool has_tags = false;
    bool has_untagged = false;
    for (const auto& [key, n] : cells) {
      if (key.first != s || n == 0) continue;
      if (key.second.empty())
        has_untagged = true;
      else {
        tags.insert(key.second);
        has_tags = true;
      }
    }
    if (has_untagged || (!has_tags && declared_languages.count(s))) {
      auto it = declared_languages.find(s);
      if (it == declared_languages.end() || has_tags) return std::nullopt;
      declared_only = it->second;
      ++declared_sources;
    }
  }
  if (declared_sources == 0) return tags.size();
  if (declared_sources == 1 && tags.empty()) return declared_only;
  return std::nullopt;
}

DatasetStats compute_stats(std::span<const InstructionRecord> records) {
  DatasetStats stats;
  for (const auto& r : records) ++stats.cells[{r.source, r.lang.str()}];
  return stats;
}

DatasetStats stats_from_counts(std::string_view json_text) {
  ojson j;
  try {
    j = ojson::parse(json_text);
  } catch (const ojson::parse_error& e) {
    throw std::invalid_argument(std::string("count manifest: ") + e.what());
  }
  auto rows = j.find("counts");
  if (!j.is_object() || rows == j.end() || !rows->is_array())
    throw std::invalid_argument("count manifest: expected {\"counts\":[...]}");
  DatasetStats stats;
  for (const auto& row : *rows) {
    if (!row.is_object()) throw std::invalid_argument("count manifest: row is not an object");
    const auto src_name = row.value("source", std::string{});
    auto src = parse_source(src_name);
    if (!src) throw std::invalid_argument("count manifest: unknown source '" + src_name + "'");
    auto count = row.find("count");
    if (count == row.end() || !count->is_number_integer() || count->get<std::int64_t>() < 0)
      throw std::invalid_argument("count manifest: count must be a non-negative integer");
    std::string lang = row.value("lang", std::string{});
    if (!lang.empty() && !LanguageTag::parse(lang))
      throw std::invalid_argument("count manifest: malformed language tag '" + lang + "'");
    stats.cells[{*src, lang}] += count->get<std::size_t>();
    if (auto langs = row.find("languages"); langs != row.end()) {
      if (!langs->is_number_integer() || langs->get<std::int64_t>() < 0)
        throw std::invalid_argument("count manifest: languages must be a non-negative integer");
      stats.declared_languages[*src] = langs->get<std::size_t>();
    }
  }
  return stats;
}

const std::vector<SourceGroup>& table_groups() {
  static const std::vector<SourceGroup> groups{
      {"Multilingual Reverse Instructions", {Source::wikipedia, Source::culturax}},
      {"WikiHow", {Source::wikihow}},
      {"NLP Tasks", {Source::supnatinst, Source::xp3, Source::oasst, Source::flan}},
  };
  return groups;
}

std::string_view display_name(Source s) {
  switch (s) {
    case Source::culturax: return "CulturaX";
    case Source::wikipedia: return "Wikipedia";
    case Source::wikihow: return "WikiHow";
    case Source::supnatinst: return "SupNatInst-v2";
    case Source::xp3: return "xP3";
    case Source::oasst: return "OpenAssistant";
    case Source::flan: return "FLAN v2.0";
  }
  return "?";
}

std::string render_stats_table(const DatasetStats& stats) {
  constexpr int kLabel = 36;
  constexpr int kLangs = 13;
  constexpr int kExamples = 13;
  std::ostringstream out;
  auto row = [&](std::string_view label, const std::string& langs, const std::string& examples) {
    std::string line(label);
    line.resize(std::max<std::size_t>(line.size(), kLabel), ' ');
    std::string l(kLangs - std::min<std::size_t>(kLangs, langs.size()), ' ');
    std::string e(kExamples - std::min<std::size_t>(kExamples, examples.size()), ' ');
    out << line << l << langs << e << examples << '\n';
  };
  auto langs_cell = [&](std::span<const Source> sources) {
    auto n = stats.languages(sources);
    return n ? with_thousands(*n) : std::string("-");
  };
  const std::string rule(kLabel + kLangs + kExamples, '-');

  row("Source", "# Languages", "# Examples");
  out << rule << '\n';
  for (const auto& group : table_groups()) {
    std::size_t sum = 0;
    for (Source s : group.members) sum += stats.count(s);
    row(group.label, langs_cell(group.members), with_thousands(sum));
    if (group.members.size() > 1) {
      for (Source s : group.members) {
        const std::array one{s};
        row("  " + std::string(display_name(s)), langs_cell(one), with_thousands(stats.count(s)));
      }
    }
  }
  out << rule << '\n';
  row("Total", langs_cell(kAllSources), with_thousands(stats.total()));
  return out.str();
}

std::string stats_json(const DatasetStats& stats) {
  ojson j;
  j["total"] = stats.total();
  auto to_json_langs = [&](std::span<const Source> sources) -> ojson {
    auto n = stats.languages(sources);
    return n ? ojson(*n) : ojson(nullptr);
  };
  j["languages"] = to_json_langs(kAllSources);
  ojson groups = ojson::array();
  for (const auto& g : table_groups()) {
    std::size_t sum = 0;
    ojson members = ojson::array();
    for (Source s : g.members) {
      sum += stats.count(s);
      const std::array one{s};
      members.push_back({{"source", to_string(s)},
                         {"examples", stats.count(s)},
                         {"languages", to_json_langs(one)}});
    }
    groups.push_back({{"group", g.label},
                      {"examples", sum},
                      {"languages", to_json_langs(g.members)},
                      {"sources", std::move(members)}});
  }
  j["groups"] = std::move(groups);
  ojson cells = ojson::array();
  for (const auto& [key, n] : stats.cells) {
    ojson c{{"source", to_string(key.first)}};
    c["lang"] = key.second.empty() ? ojson(nullptr) : ojson(key.second);
    c["count"] = n;
    cells.push_back(std::move(c));
  }
  j["cells"] = std::move(cells);
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Diversity

DiversityTables DiversityTables::load(const std::filesystem::path& dir) {
  static const std::set<std::string> kOrders{"SOV", "SVO", "VSO", "VOS", "OVS", "OSV",
                                             "no-dominant"};
  static const std::set<std::string> kCases{"0",   "2",   "3",   "4",         "5",
                                            "6-7", "8-9", "10+", "borderline"};
  static const std::set<std::string> kScripts{"Latin", "Arabic", "Cyrillic", "Other"};
  DiversityTables t;

  read_table(dir / "resource_level.tsv", {"code", "level"}, [&](const auto& cells, auto fail) {
    if (!is_language_code(cells[0])) fail("bad language code '" + cells[0] + "'");
    if (cells[1].size() != 1 || cells[1][0] < '0' || cells[1][0] > '5')
      fail("resource level must be 0-5, got '" + cells[1] + "'");
    if (!t.resource_level.emplace(cells[0], cells[1][0] - '0').second)
      fail("duplicate code " + cells[0]);
  });
  read_table(dir / "scripts.tsv", {"script", "name", "class"}, [&](const auto& cells, auto fail) {
    if (!LanguageTag::parse("xxx_" + cells[0])) fail("bad script code '" + cells[0] + "'");
    if (!kScripts.count(cells[2])) fail("unknown script class '" + cells[2] + "'");
    if (!t.script_class.emplace(cells[0], cells[2]).second) fail("duplicate script " + cells[0]);
  });
  read_table(dir / "word_order.tsv", {"code", "order"}, [&](const auto& cells, auto fail) {
    if (!is_language_code(cells[0])) fail("bad language code '" + cells[0] + "'");
    if (!kOrders.count(cells[1])) fail("unknown word order '" + cells[1] + "'");
    if (!t.word_order.emplace(cells[0], cells[1]).second) fail("duplicate code " + cells[0]);
  });
  read_table(dir / "case_marking.tsv", {"code", "cases"}, [&](const auto& cells, auto fail) {
    if (!is_language_code(cells[0])) fail("bad language code '" + cells[0] + "'");
    if (!kCases.count(cells[1])) fail("unknown case class '" + cells[1] + "'");
    if (!t.case_marking.emplace(cells[0], cells[1]).second) fail("duplicate code " + cells[0]);
  });
  return t;
}

const DiversityTables& DiversityTables::shipped() {
  static const DiversityTables tables = load(default_data_dir());
  return tables;
}

const LanguageProfile* DiversityReport::find(const LanguageTag& tag) const {
  for (const auto& p : languages)
    if (p.lang == tag) return &p;
  return nullptr;
}

DiversityReport compute_diversity(const std::map<LanguageTag, std::size_t>& counts,
                                  const DiversityTables& tables) {
  auto lookup = [](const auto& map, const std::string& key) -> std::string {
    auto it = map.find(key);
    if (it == map.end()) return std::string(kUnknown);
    if constexpr (std::is_same_v<std::decay_t<decltype(it->second)>, int>)
      return std::to_string(it->second);
    else
      return it->second;
  };
  DiversityReport report;
  for (const auto& [tag, n] : counts) {
    LanguageProfile p;
    p.lang = tag;
    p.records = n;
    p.resource_level = lookup(tables.resource_level, tag.code);
    p.script = lookup(tables.script_class, tag.script);
    p.word_order = lookup(tables.word_order, tag.code);
    p.case_marking = lookup(tables.case_marking, tag.code);
    const std::pair<const char*, const std::string*> dims[] = {
        {"resource_level", &p.resource_level},
        {"script", &p.script},
        {"word_order", &p.word_order},
        {"case_marking", &p.case_marking}};
    for (const auto& [dim, cls] : dims) {
      ++report.histograms[dim][*cls];
      report.record_histograms[dim][*cls] += n;
    }
    report.languages.push_back(std::move(p));
  }
  return report;
}

DiversityReport compute_diversity(std::span<const InstructionRecord> records,
                                  const DiversityTables& tables) {
  std::map<LanguageTag, std::size_t> counts;
  for (const auto& r : records) ++counts[r.lang];
  return compute_diversity(counts, tables);
}

std::string diversity_json(const DiversityReport& report) {
  ojson j;
  ojson langs = ojson::array();
  for (const auto& p : report.languages)
    langs.push_back({{"lang", p.lang.str()},
                     {"records", p.records},
                     {"resource_level", p.resource_level},
                     {"script", p.script},
                     {"word_order", p.word_order},
                     {"case_marking", p.case_marking}});
  j["languages"] = std::move(langs);
  j["histograms"] = report.histograms;
  j["record_histograms"] = report.record_histograms;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Review sheets

ReviewSheet export_review_sheet(std::span<const InstructionRecord> records,
                                const std::vector<LanguageTag>& langs, std::size_t per_lang,
                                std::uint64_t seed) {
  std::map<LanguageTag, std::vector<std::size_t>> by_lang;
  for (std::size_t i = 0; i < records.size(); ++i) by_lang[records[i].lang].push_back(i);

  std::vector<LanguageTag> wanted = langs;
  if (wanted.empty())
    for (const auto& [tag, idx] : by_lang) wanted.push_back(tag);

  ReviewSheet sheet;
  for (const auto& tag : wanted) {
    const auto it = by_lang.find(tag);
    const std::size_t available = it == by_lang.end() ? 0 : it->second.size();
    if (available < per_lang)
      sheet.warnings.push_back(tag.str() + ": " + std::to_string(available) + " record(s), fewer than " +
                               std::to_string(per_lang));
    if (available == 0) continue;
    ReservoirSampler<std::size_t> sampler(per_lang, derive_seed(seed, tag.str()));
    for (std::size_t i : it->second) sampler.push(i);
    for (std::size_t i : std::move(sampler).take()) {
      const auto& r = records[i];
      sheet.rows.push_back({r.id, r.lang, r.instruction, r.output});
    }
  }
  return sheet;
}

std::string escape_tsv_cell(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string render_review_tsv(const ReviewSheet& sheet) {
  std::string out;
  for (std::size_t i = 0; i < kReviewColumns.size(); ++i) {
    if (i) out += '\t';
    out += kReviewColumns[i];
  }
  out += '\n';
  for (const auto& row : sheet.rows) {
    out += escape_tsv_cell(row.instruction);
    out += '\t';
    out += escape_tsv_cell(row.output);
    out += std::string(kReviewColumns.size() - 2, '\t');
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Release

void write_release(const std::filesystem::path& dir, std::span<const InstructionRecord> records,
                   SerializeOptions opts) {
  std::filesystem::create_directories(dir);
  std::array<std::string, 3> bodies;
  for (const auto& r : records) {
    if (r.split == Split::unassigned)
      throw std::invalid_argument("record " + r.id + " has no split");
    auto& body = bodies[static_cast<std::size_t>(r.split)];
    body += serialize_record(r, opts);
    body += '\n';
  }
  for (std::size_t s = 0; s < 3; ++s)
    write_file_atomic(dir / (std::string(to_string(kSplits[s])) + ".jsonl"), bodies[s]);
}

}  // namespace muri
