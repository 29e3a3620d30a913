// SPDX-License-Identifier: Apache-2.0
#include "muri/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "muri/adapters.hpp"
#include "muri/assembly.hpp"
#include "muri/dedup.hpp"
#include "muri/jsonl.hpp"
#include "muri/pipeline.hpp"

namespace muri::cli {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

/// Bad invocation or missing input; exit status 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool mock = false;
  std::optional<std::size_t> workers;
  std::string checkpoint_dir;

  std::uint64_t seed_or(std::uint64_t fallback) const { return seed.value_or(fallback); }
};

void require_files(const std::vector<std::string>& paths) {
  if (paths.empty()) throw UsageError("no input files given");
  for (const auto& p : paths)
    if (!fs::is_regular_file(p)) throw UsageError("input not found: " + p);
}

std::vector<InstructionRecord> read_all(const std::vector<std::string>& paths) {
  require_files(paths);
  std::vector<InstructionRecord> all;
  for (const auto& p : paths) {
    try {
      for (auto& r : read_records(p)) all.push_back(std::move(r));
    } catch (const JsonlError& e) {
      throw std::runtime_error(p + ": " + e.what());
    }
  }
  return all;
}

void emit(std::ostream& out, const std::string& path, const std::string& body) {
  if (path.empty() || path == "-")
    out << body;
  else
    write_file_atomic(path, body);
}

// ---------------------------------------------------------------------------

int cmd_run(const Globals& g, std::ostream& out, std::ostream& err) {
  if (g.config.empty()) throw UsageError("run: --config is required");
  RunConfig cfg = RunConfig::load(g.config);
  cfg.apply_env();
  if (g.mock) cfg.force_mock();
  if (g.seed) cfg.set_seed(*g.seed);
  if (g.workers) cfg.workers = *g.workers;
  if (!g.checkpoint_dir.empty()) cfg.checkpoint_dir = g.checkpoint_dir;
  PipelineHooks hooks;
  hooks.log = [&err](std::string_view msg) { err << "muri: " << msg << '\n'; };
  const RunReport report = run_pipeline(cfg, hooks);
  out << report.to_json() << '\n';
  return kOk;
}

struct StatsArgs {
  std::vector<std::string> inputs;
  std::string counts;
  bool table = false;
  std::string out;
};

int cmd_stats(const StatsArgs& a, std::ostream& out) {
  DatasetStats stats;
  if (!a.counts.empty()) {
    require_files({a.counts});
    try {
      stats = stats_from_counts(read_file(a.counts));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  } else {
    stats = compute_stats(read_all(a.inputs));
  }
  emit(out, a.out, a.table ? render_stats_table(stats) : stats_json(stats) + "\n");
  return kOk;
}

struct DiversityArgs {
  std::vector<std::string> inputs;
  std::string counts;
  std::string tables;
  std::string out;
};

int cmd_diversity(const DiversityArgs& a, std::ostream& out) {
  const DiversityTables tables =
      a.tables.empty() ? DiversityTables::shipped() : DiversityTables::load(a.tables);
  DiversityReport report;
  if (!a.counts.empty()) {
    require_files({a.counts});
    DatasetStats stats;
    try {
      stats = stats_from_counts(read_file(a.counts));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    std::map<LanguageTag, std::size_t> per_lang;
    for (const auto& [key, n] : stats.cells)
      if (!key.second.empty()) per_lang[LanguageTag::unchecked(key.second)] += n;
    report = compute_diversity(per_lang, tables);
  } else {
    report = compute_diversity(read_all(a.inputs), tables);
  }
  emit(out, a.out, diversity_json(report) + "\n");
  return kOk;
}

struct ReviewArgs {
  std::vector<std::string> inputs;
  std::vector<std::string> langs;
  std::size_t per_lang = 30;
  std::string out;
};

int cmd_review(const Globals& g, const ReviewArgs& a, std::ostream& out, std::ostream& err) {
  const auto records = read_all(a.inputs);
  std::vector<LanguageTag> langs;
  for (const auto& l : a.langs) {
    auto tag = default_registry().resolve(l);
    if (!tag) throw UsageError("unknown language: " + l);
    langs.push_back(*tag);
  }
  const ReviewSheet sheet = export_review_sheet(records, langs, a.per_lang, g.seed_or(0));
  for (const auto& w : sheet.warnings) err << "muri: review-sheet: " << w << '\n';
  const std::string tsv = render_review_tsv(sheet);
  if (a.out.empty() || a.out == "-") {
    out << tsv;
  } else {
    write_file_atomic(a.out, tsv);
    out << ojson{{"rows", sheet.rows.size()}, {"warnings", sheet.warnings}}.dump() << '\n';
  }
  return kOk;
}

struct DedupArgs {
  std::vector<std::string> inputs;
  double threshold = 0.85;
  std::size_t top_k = 16;
  std::size_t num_perm = 128;
  std::size_t shingle_k = 5;
  std::string out;
  std::string pairs;
};

int cmd_dedup(const Globals& g, const DedupArgs& a, std::ostream& out) {
  const auto records = read_all(a.inputs);
  DedupParams params;
  params.threshold = a.threshold;
  params.top_k = a.top_k;
  params.minhash.num_perm = a.num_perm;
  params.minhash.k = a.shingle_k;
  params.minhash.perm_seed = g.seed_or(params.minhash.perm_seed);
  params.workers = g.workers.value_or(1);
  if (!(params.threshold > 0.0 && params.threshold <= 1.0))
    throw UsageError("--threshold must be in (0, 1]");
  if (params.minhash.num_perm < params.num_trees)
    throw UsageError("--num-perm must be at least " + std::to_string(params.num_trees));
  const DedupResult result = deduplicate(records, params);

  ojson pairs = ojson::array();
  std::string pairs_body;
  for (const auto& p : result.dropped) {
    ojson row{{"kept_id", p.kept_id}, {"dropped_id", p.dropped_id}, {"estimate", p.estimate}};
    pairs_body += row.dump() + "\n";
    pairs.push_back(std::move(row));
  }
  if (!a.pairs.empty()) write_file_atomic(a.pairs, pairs_body);
  if (!a.out.empty()) {
    std::vector<InstructionRecord> kept;
    kept.reserve(result.retained.size());
    for (std::size_t i : result.retained) kept.push_back(records[i]);
    write_file_atomic(a.out, serialize_jsonl(kept));
  }
  ojson summary{{"input", records.size()},
                {"retained", result.retained.size()},
                {"dropped", result.dropped.size()},
                {"pairs", std::move(pairs)}};
  out << summary.dump() << '\n';
  return kOk;
}

struct AdaptArgs {
  std::string source;
  std::vector<std::string> inputs;
  std::string lang;
  std::string out;
};

int cmd_adapt(const Globals& g, const AdaptArgs& a, std::ostream& out, std::ostream& err) {
  const auto source = parse_source(a.source);
  if (!source || is_reverse_instruction_source(*source))
    throw UsageError("adapt: source must be one of wikihow, supnatinst, xp3, oasst, flan");
  require_files(a.inputs);
  CorpusManifest manifest;
  for (const auto& p : a.inputs) {
    ManifestEntry e;
    e.path = p;
    e.source = *source;
    e.format = *source == Source::wikihow ? CorpusFormat::wikihow_json : CorpusFormat::task_json;
    if (!a.lang.empty()) {
      e.lang = default_registry().resolve(a.lang);
      if (!e.lang) throw UsageError("unknown language: " + a.lang);
    }
    manifest.entries.push_back(std::move(e));
  }
  AdapterReport report;
  const auto records =
      adapt_manifest(manifest, default_registry(), g.seed_or(0), SupNatCaps{}, FlanQuotas{}, report);
  for (const auto& w : report.warnings) err << "muri: adapt: " << w << '\n';
  const std::string body = serialize_jsonl(records);
  if (a.out.empty() || a.out == "-") {
    out << body;
  } else {
    write_file_atomic(a.out, body);
    out << ojson{{"records", records.size()}, {"skipped", report.skipped}}.dump() << '\n';
  }
  return kOk;
}

int cmd_validate(const std::vector<std::string>& inputs, std::ostream& out) {
  require_files(inputs);
  ojson problems = ojson::array();
  std::size_t records = 0, invalid = 0;
  for (const auto& path : inputs) {
    try {
      for_each_line(path, [&](std::string_view line, std::size_t no) {
        if (line.empty()) return;
        ++records;
        const InstructionRecord rec = parse_record(line, no);
        const auto violations = validate_record(rec, default_registry());
        if (violations.empty()) return;
        ++invalid;
        for (const auto& v : violations)
          problems.push_back(
              {{"file", path}, {"line", no}, {"id", rec.id}, {"field", v.field}, {"rule", v.rule}});
      });
    } catch (const JsonlError& e) {
      ++invalid;
      problems.push_back({{"file", path}, {"line", e.line()}, {"error", e.what()}});
    }
  }
  out << ojson{{"records", records}, {"invalid", invalid}, {"violations", problems}}.dump(2)
      << '\n';
  return invalid == 0 ? kOk : kFailure;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multilingual reverse-instruction data pipeline", "muri"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config, "Run configuration (JSON)");
  app.add_option("--seed", g.seed, "Run seed");
  app.add_flag("--mock", g.mock, "Serve every model role with the in-process mock");
  app.add_option("--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--checkpoint-dir", g.checkpoint_dir, "Directory for stage checkpoints");

  auto* run = app.add_subcommand("run", "Run the full pipeline");

  StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "Composition statistics");
  stats_cmd->add_option("inputs", stats.inputs, "Record files (JSONL)");
  stats_cmd->add_option("--counts", stats.counts, "Count manifest instead of record files");
  stats_cmd->add_flag("--table", stats.table, "Render the text table instead of JSON");
  stats_cmd->add_option("--out", stats.out, "Output file (default stdout)");

  DiversityArgs div;
  auto* div_cmd = app.add_subcommand("diversity", "Linguistic diversity report");
  div_cmd->add_option("inputs", div.inputs, "Record files (JSONL)");
  div_cmd->add_option("--counts", div.counts, "Count manifest instead of record files");
  div_cmd->add_option("--tables", div.tables, "Directory of mapping tables");
  div_cmd->add_option("--out", div.out, "Output file (default stdout)");

  ReviewArgs review;
  auto* review_cmd = app.add_subcommand("review-sheet", "Per-language review sheet (TSV)");
  review_cmd->add_option("inputs", review.inputs, "Record files (JSONL)");
  review_cmd->add_option("--lang", review.langs, "Languages to sample (default: all)");
  review_cmd->add_option("--per-lang", review.per_lang, "Rows per language");
  review_cmd->add_option("--out", review.out, "Output file (default stdout)");

  DedupArgs dd;
  auto* dedup_cmd = app.add_subcommand("dedup-only", "Near-duplicate removal over record files");
  dedup_cmd->add_option("inputs", dd.inputs, "Record files (JSONL)");
  dedup_cmd->add_option("--threshold", dd.threshold, "Estimated Jaccard threshold");
  dedup_cmd->add_option("--top-k", dd.top_k, "Candidates per query");
  dedup_cmd->add_option("--num-perm", dd.num_perm, "MinHash permutations");
  dedup_cmd->add_option("--shingle-k", dd.shingle_k, "Shingle length in characters");
  dedup_cmd->add_option("--out", dd.out, "Retained records (JSONL)");
  dedup_cmd->add_option("--pairs", dd.pairs, "Dropped-pair report (JSONL)");

  AdaptArgs ad;
  auto* adapt_cmd = app.add_subcommand("adapt", "Convert an auxiliary source into records");
  adapt_cmd->add_option("source", ad.source, "wikihow, supnatinst, xp3, oasst or flan")->required();
  adapt_cmd->add_option("inputs", ad.inputs, "Input files");
  adapt_cmd->add_option("--lang", ad.lang, "Language override");
  adapt_cmd->add_option("--out", ad.out, "Output file (default stdout)");

  std::vector<std::string> validate_inputs;
  auto* validate_cmd = app.add_subcommand("validate", "Check record files against the schema rules");
  validate_cmd->add_option("inputs", validate_inputs, "Record files (JSONL)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(g, out, err);
    if (*stats_cmd) return cmd_stats(stats, out);
    if (*div_cmd) return cmd_diversity(div, out);
    if (*review_cmd) return cmd_review(g, review, out, err);
    if (*dedup_cmd) return cmd_dedup(g, dd, out);
    if (*adapt_cmd) return cmd_adapt(g, ad, out, err);
    if (*validate_cmd) return cmd_validate(validate_inputs, out);
  } catch (const UsageError& e) {
    err << "muri: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    err << "muri: config: " << e.what() << '\n';
    return kUsage;
  } catch (const BackendDown& e) {
    err << "muri: backend unavailable: " << e.what() << '\n';
    return kFailure;
  } catch (const std::exception& e) {
    err << "muri: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}

}  // namespace muri::cli
