// SPDX-License-Identifier: Apache-2.0
#include "muri/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <mutex>
#include <nlohmann/json.hpp>
#include <set>
#include <thread>

#include "muri/jsonl.hpp"
#include "muri/text.hpp"

namespace muri {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr std::array kRoles{ModelRole::translate, ModelRole::generate, ModelRole::lid,
                            ModelRole::screen};

// ---------------------------------------------------------------------------
// Config reading

class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  /// Fails on keys nobody asked for, which catches typos.
  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!used_.count(key)) throw ConfigError(path_ + ": unknown key '" + key + "'");
  }

  const json* find(const std::string& key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  std::optional<Section> section(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    return Section(*v, where(key));
  }

  void read(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) fail(key, "expected true or false");
      out = v->get<bool>();
    }
  }

  void read(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) fail(key, "expected a string");
      out = v->get<std::string>();
    }
  }

  void read(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) fail(key, "expected a number");
      out = v->get<double>();
    }
  }

  template <typename Int>
    requires std::is_integral_v<Int>
  void read(const std::string& key, Int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) fail(key, "expected an integer");
      if (std::is_unsigned_v<Int> && v->is_number_integer() && !v->is_number_unsigned() &&
          v->get<std::int64_t>() < 0)
        fail(key, "expected a non-negative integer");
      out = v->get<Int>();
    }
  }

  void read(const std::string& key, std::vector<std::string>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) fail(key, "expected a list of strings");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_string()) fail(key, "expected a list of strings");
        out.push_back(e.get<std::string>());
      }
    }
  }

  void read_path(const std::string& key, fs::path& out, const fs::path& base) {
    std::string s;
    read(key, s);
    if (!s.empty()) out = fs::path(s).is_absolute() ? fs::path(s) : base / s;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(where(key) + ": " + what);
  }

  std::string where(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

RoleEndpoint parse_endpoint(Section s) {
  RoleEndpoint ep;
  s.read("mock", ep.mock);
  InferenceEndpointConfig http;
  std::string url;
  s.read("base_url", url);
  s.read("timeout_ms", http.timeout_ms);
  s.read("max_in_flight", http.max_in_flight);
  s.read("api_key", http.api_key);
  if (auto retry = s.section("retry")) {
    retry->read("max_attempts", http.retry.max_attempts);
    retry->read("backoff_ms_base", http.retry.backoff_ms_base);
    retry->finish();
  }
  s.finish();
  if (!url.empty()) {
    http.base_url = url;
    ep.http = http;
  }
  return ep;
}

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool is_unavailable(std::string_view reason) {
  const std::string code = reason_code(reason);
  return code.size() > 12 && code.compare(code.size() - 12, 12, "_unavailable") == 0;
}

// ---------------------------------------------------------------------------
// Checkpoints

class Checkpoints {
 public:
  Checkpoints(fs::path dir, std::string fingerprint)
      : dir_(std::move(dir)), fingerprint_(std::move(fingerprint)) {
    fs::create_directories(dir_);
  }

  fs::path path(const std::string& file) const { return dir_ / file; }

  /// The stored report when the stage finished under the same fingerprint
  /// and all of its outputs still exist.
  std::optional<ojson> completed(const std::string& stage, const std::vector<fs::path>& outputs) const {
    const fs::path marker = path(stage + ".done.json");
    if (!fs::exists(marker)) return std::nullopt;
    ojson done;
    try {
      done = ojson::parse(read_file(marker));
    } catch (const std::exception&) {
      return std::nullopt;
    }
    if (done.value("fingerprint", std::string{}) != fingerprint_) return std::nullopt;
    for (const auto& out : outputs)
      if (!fs::exists(out)) return std::nullopt;
    return done;
  }

  void mark_done(const StageReport& report, const std::vector<std::string>& warnings) const {
    ojson done;
    done["stage"] = report.name;
    done["fingerprint"] = fingerprint_;
    done["input"] = report.input;
    done["output"] = report.output;
    done["drops"] = report.drops;
    done["warnings"] = warnings;
    done["completed_at"] = report.completed_at;
    write_file_atomic(path(report.name + ".done.json"), done.dump(2) + "\n");
  }

 private:
  fs::path dir_;
  std::string fingerprint_;
};

StageReport report_from(const std::string& name, const ojson& done, std::vector<std::string>& warnings) {
  StageReport r;
  r.name = name;
  r.skipped = true;
  r.input = done.value("input", std::size_t{0});
  r.output = done.value("output", std::size_t{0});
  if (auto d = done.find("drops"); d != done.end() && d->is_object())
    for (const auto& [k, v] : d->items()) r.drops[k] = v.get<std::size_t>();
  if (auto w = done.find("warnings"); w != done.end() && w->is_array())
    for (const auto& m : *w) warnings.push_back(m.get<std::string>());
  r.completed_at = done.value("completed_at", std::string{});
  return r;
}

std::string records_jsonl(const std::vector<InstructionRecord>& recs) {
  return serialize_jsonl(recs);
}

std::vector<InstructionRecord> load_records(const fs::path& p) { return read_records(p); }

std::vector<SourceDocument> load_documents(const fs::path& p) {
  std::vector<SourceDocument> docs;
  for_each_line(p, [&](std::string_view line, std::size_t no) {
    if (!text::trim(line).empty()) docs.push_back(parse_document(line, no));
  });
  return docs;
}

void count_drop(std::map<std::string, std::size_t>& drops, std::string_view reason) {
  ++drops[reason_code(reason)];
}

}  // namespace

// ---------------------------------------------------------------------------
// RunConfig

RunConfig RunConfig::parse(std::string_view text, const fs::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  Section top(j, "");
  top.read_path("manifest", cfg.manifest, base_dir);
  top.read("seed", cfg.seed);
  top.read("workers", cfg.workers);
  top.read_path("checkpoint_dir", cfg.checkpoint_dir, base_dir);
  fs::path out;
  top.read_path("output_dir", out, base_dir);
  if (!out.empty()) cfg.output_dir = out;
  top.read("strict", cfg.strict);
  top.read("strip_trace", cfg.strip_trace);
  fs::path few;
  top.read_path("few_shot", few, base_dir);
  if (!few.empty()) cfg.few_shot = few;

  if (auto eps = top.section("endpoints")) {
    for (ModelRole role : kRoles) {
      if (auto s = eps->section(std::string(to_string(role))))
        cfg.endpoints[role] = parse_endpoint(std::move(*s));
    }
    eps->finish();
  }
  if (auto m = top.section("mock")) {
    m->read("seed", cfg.mock.seed);
    m->read("screen_trigger", cfg.mock.screen_trigger);
    m->read("lid_fault_token", cfg.mock.lid_fault_token);
    m->read("mt_fail_token", cfg.mock.mt_fail_token);
    m->read("mt_empty_token", cfg.mock.mt_empty_token);
    m->read("generate_fail_token", cfg.mock.generate_fail_token);
    m->read("max_prompt_chars", cfg.mock.max_prompt_chars);
    std::vector<std::string> down;
    m->read("down_roles", down);
    for (const auto& name : down) {
      auto role = parse_model_role(name);
      if (!role) m->fail("down_roles", "unknown role '" + name + "'");
      cfg.mock.down_roles.insert(*role);
    }
    m->finish();
  }
  if (auto l = top.section("limits")) {
    l->read("max_prompt_chars", cfg.limits.max_prompt_chars);
    l->read("max_segment_chars", cfg.limits.max_segment_chars);
    l->finish();
  }
  if (auto q = top.section("quality_gate")) {
    q->read("min_chars", cfg.quality_gate.min_chars);
    q->read("max_chars", cfg.quality_gate.max_chars);
    q->read("min_alpha_ratio", cfg.quality_gate.min_alpha_ratio);
    q->read("max_line_dup_ratio", cfg.quality_gate.max_line_dup_ratio);
    q->finish();
  }
  if (auto m = top.section("muri")) {
    m->read("lid_min_confidence", cfg.muri.lid_min_confidence);
    m->read("prompt_budget_chars", cfg.muri.prompt_budget_chars);
    m->read("translate_top_p", cfg.muri.translate_top_p);
    std::string mode = "greedy";
    m->read("generate_mode", mode);
    if (mode == "greedy")
      cfg.muri.generate_decode.mode = DecodeMode::greedy;
    else if (mode == "top_p")
      cfg.muri.generate_decode.mode = DecodeMode::top_p;
    else
      m->fail("generate_mode", "expected greedy or top_p");
    m->read("generate_top_p", cfg.muri.generate_decode.top_p);
    m->finish();
  }
  if (auto f = top.section("filters")) {
    f->read("keyword_blocklist", cfg.filters.keyword_blocklist);
    f->read("screen_threshold", cfg.filters.screen_threshold);
    f->read("strict_screen", cfg.filters.strict_screen);
    f->read("noise_report", cfg.filters.noise_report);
    double noise = -1.0;
    f->read("noise_drop_threshold", noise);
    if (noise >= 0.0) cfg.filters.noise_drop_threshold = noise;
    f->finish();
  }
  if (auto d = top.section("dedup")) {
    d->read("threshold", cfg.dedup.threshold);
    d->read("top_k", cfg.dedup.top_k);
    d->read("shingle_k", cfg.dedup.minhash.k);
    d->read("num_perm", cfg.dedup.minhash.num_perm);
    d->read("perm_seed", cfg.dedup.minhash.perm_seed);
    d->read("num_trees", cfg.dedup.num_trees);
    d->finish();
  }
  bool split_seed_set = false;
  if (auto s = top.section("split")) {
    if (const json* r = s->find("ratios")) {
      if (!r->is_array() || r->size() != 3)
        s->fail("ratios", "expected [train, validation, test]");
      for (std::size_t i = 0; i < 3; ++i) {
        if (!(*r)[i].is_number()) s->fail("ratios", "expected numbers");
        cfg.split.ratios[i] = (*r)[i].get<double>();
      }
    }
    std::vector<std::string> keys{"source", "lang"};
    s->read("stratify_by", keys);
    cfg.split.by_source = cfg.split.by_lang = false;
    for (const auto& k : keys) {
      if (k == "source")
        cfg.split.by_source = true;
      else if (k == "lang")
        cfg.split.by_lang = true;
      else
        s->fail("stratify_by", "unknown key '" + k + "' (expected source or lang)");
    }
    if (s->find("seed")) {
      s->read("seed", cfg.split.seed);
      split_seed_set = true;
    }
    s->finish();
  }
  if (auto a = top.section("adapters")) {
    if (auto sn = a->section("supnatinst")) {
      sn->read("per_translation_task", cfg.supnatinst.per_translation_task);
      sn->read("per_task_type", cfg.supnatinst.per_task_type);
      sn->finish();
    }
    if (auto fl = a->section("flan")) {
      fl->read("main", cfg.flan.main);
      fl->read("cot", cfg.flan.cot);
      fl->finish();
    }
    a->finish();
  }
  top.finish();
  cfg.split_seed_explicit = split_seed_set;
  cfg.set_seed(cfg.seed);
  cfg.limits.screen_threshold = cfg.filters.screen_threshold;
  return cfg;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::string body;
  try {
    body = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return parse(body, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

void RunConfig::apply_env(
    const std::function<std::optional<std::string>(const std::string&)>& getenv) {
  const auto key = getenv("MURI_API_KEY");
  for (ModelRole role : kRoles) {
    auto it = endpoints.find(role);
    if (it == endpoints.end() || it->second.mock || !it->second.http) continue;
    std::string var = "MURI_" + text::to_lower_ascii(to_string(role));
    for (char& c : var) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (auto url = getenv(var + "_URL"); url && !url->empty()) it->second.http->base_url = *url;
    if (key && !key->empty()) it->second.http->api_key = *key;
  }
}

void RunConfig::apply_env() {
  apply_env([](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    return v ? std::optional<std::string>(v) : std::nullopt;
  });
}

void RunConfig::set_seed(std::uint64_t value) {
  seed = value;
  if (!split_seed_explicit) split.seed = derive_seed(seed, "split");
}

void RunConfig::force_mock() {
  for (ModelRole role : kRoles) endpoints[role] = RoleEndpoint{true, std::nullopt};
}

void RunConfig::validate() const {
  if (manifest.empty()) throw ConfigError("manifest: required");
  if (workers == 0) throw ConfigError("workers: must be at least 1");
  for (ModelRole role : kRoles) {
    const std::string name(to_string(role));
    auto it = endpoints.find(role);
    if (it == endpoints.end() || (!it->second.mock && !it->second.http))
      throw ConfigError("endpoints." + name + ": set either mock or base_url");
    if (it->second.mock && it->second.http)
      throw ConfigError("endpoints." + name + ": mock and base_url are mutually exclusive");
    if (it->second.http) {
      try {
        it->second.http->validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError("endpoints." + name + ": " + e.what());
      }
    }
  }
  try {
    filters.validate();
    split.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(dedup.threshold > 0.0 && dedup.threshold <= 1.0))
    throw ConfigError("dedup.threshold: must be in (0, 1]");
  if (dedup.top_k == 0) throw ConfigError("dedup.top_k: must be at least 1");
  if (dedup.minhash.k == 0) throw ConfigError("dedup.shingle_k: must be at least 1");
  if (dedup.num_trees == 0 || dedup.minhash.num_perm < dedup.num_trees)
    throw ConfigError("dedup: num_perm must be at least num_trees, and num_trees at least 1");
  if (!(muri.lid_min_confidence >= 0.0 && muri.lid_min_confidence <= 1.0))
    throw ConfigError("muri.lid_min_confidence: must be in [0, 1]");
  if (quality_gate.min_chars > quality_gate.max_chars)
    throw ConfigError("quality_gate: min_chars exceeds max_chars");
}

fs::path RunConfig::release_dir() const {
  return output_dir ? *output_dir : checkpoint_dir / "release";
}

std::string RunConfig::fingerprint() const {
  ojson j;
  j["seed"] = seed;
  // Inputs: manifest bytes plus the size of every referenced file.
  std::string manifest_body;
  std::error_code ec;
  if (fs::exists(manifest, ec)) manifest_body = read_file(manifest);
  j["manifest"] = to_hex(hash64(manifest_body));
  try {
    const auto m = CorpusManifest::parse(manifest_body, manifest.parent_path(), default_registry());
    ojson sizes = ojson::array();
    for (const auto& e : m.entries) sizes.push_back(fs::file_size(e.path, ec));
    j["inputs"] = sizes;
  } catch (const std::exception&) {
    j["inputs"] = nullptr;
  }
  ojson eps = ojson::object();
  for (const auto& [role, ep] : endpoints)
    eps[std::string(to_string(role))] = ep.mock ? std::string("mock") : ep.http->base_url;
  j["endpoints"] = eps;
  std::vector<std::string> down;
  for (ModelRole r : mock.down_roles) down.emplace_back(to_string(r));
  j["mock"] = {mock.seed, mock.screen_trigger, mock.lid_fault_token, mock.mt_fail_token,
               mock.mt_empty_token, mock.generate_fail_token, mock.max_prompt_chars, down};
  j["limits"] = {limits.max_prompt_chars, limits.max_segment_chars, limits.screen_threshold};
  j["gate"] = {quality_gate.min_chars, quality_gate.max_chars, quality_gate.min_alpha_ratio,
               quality_gate.max_line_dup_ratio};
  j["muri"] = {muri.lid_min_confidence, muri.prompt_budget_chars, muri.translate_top_p,
               static_cast<int>(muri.generate_decode.mode), muri.generate_decode.top_p};
  j["filters"] = {filters.keyword_blocklist, filters.screen_threshold, filters.strict_screen,
                  filters.noise_drop_threshold ? *filters.noise_drop_threshold : -1.0};
  j["dedup"] = {dedup.threshold, dedup.top_k, dedup.minhash.k, dedup.minhash.num_perm,
                dedup.minhash.perm_seed, dedup.num_trees};
  j["split"] = {split.ratios, split.by_source, split.by_lang, split.seed};
  j["adapters"] = {supnatinst.per_translation_task, supnatinst.per_task_type, flan.main, flan.cot};
  j["few_shot"] = few_shot && fs::exists(*few_shot, ec) ? to_hex(hash64(read_file(*few_shot)))
                                                         : std::string("shipped");
  j["strip_trace"] = strip_trace;
  j["release_dir"] = release_dir().lexically_normal().string();
  return to_hex(hash64(j.dump()));
}

RoleBackends make_backends(const RunConfig& cfg) {
  std::shared_ptr<InferenceBackend> mock;
  auto backend_for = [&](ModelRole role) -> std::shared_ptr<InferenceBackend> {
    const RoleEndpoint& ep = cfg.endpoints.at(role);
    if (ep.mock) {
      if (!mock) mock = std::make_shared<MockBackend>(cfg.mock);
      return mock;
    }
    return std::make_shared<HttpBackend>(*ep.http);
  };
  return {backend_for(ModelRole::translate), backend_for(ModelRole::generate),
          backend_for(ModelRole::lid), backend_for(ModelRole::screen)};
}

// ---------------------------------------------------------------------------
// Report

std::string reason_code(std::string_view reason) {
  const auto colon = reason.find(':');
  return std::string(text::trim(reason.substr(0, colon)));
}

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names{"ingest", "muri",  "filter",
                                              "adapt",  "dedup", "assemble"};
  return names;
}

std::size_t RunReport::dropped() const {
  std::size_t n = 0;
  for (const auto& [reason, count] : drops) n += count;
  return n;
}

std::string RunReport::to_json() const {
  ojson j;
  j["ingested"] = ingested();
  j["documents"] = documents;
  j["adapted"] = adapted;
  j["surviving"] = surviving;
  j["dropped"] = dropped();
  j["drops"] = drops;
  j["balanced"] = balanced();
  j["splits"] = {{"train", splits[0]}, {"validation", splits[1]}, {"test", splits[2]}};
  ojson stages_j = ojson::array();
  for (const auto& s : stages)
    stages_j.push_back({{"stage", s.name},
                        {"skipped", s.skipped},
                        {"input", s.input},
                        {"output", s.output},
                        {"drops", s.drops},
                        {"completed_at", s.completed_at}});
  j["stages"] = std::move(stages_j);
  j["warnings"] = warnings;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Worker pool

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        next.store(n);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Adapters over a manifest

std::vector<InstructionRecord> adapt_manifest(const CorpusManifest& manifest,
                                              const LanguageRegistry& registry,
                                              std::uint64_t seed, const SupNatCaps& caps,
                                              const FlanQuotas& quotas, AdapterReport& report) {
  std::vector<InstructionRecord> out;
  std::vector<SupNatTask> tasks;
  std::vector<TaskRow> flan_rows;

  for (const ManifestEntry& entry : manifest.entries) {
    if (is_document_format(entry.format)) continue;
    const std::string where = entry.path.string();
    std::vector<TaskRow> xp3_rows;
    for_each_line(entry.path, [&](std::string_view line, std::size_t no) {
      if (text::trim(line).empty()) return;
      const std::string at = where + ":" + std::to_string(no) + ": ";
      try {
        if (entry.format == CorpusFormat::wikihow_json) {
          WikiHowArticle a = parse_wikihow_article(line, registry);
          if (entry.lang) a.lang = *entry.lang;
          out.push_back(render_wikihow(a, seed));
          return;
        }
        switch (entry.source) {
          case Source::supnatinst: {
            SupNatTask t = parse_supnatinst_task(line, registry);
            if (!t.lang && entry.lang) t.lang = entry.lang;
            if (t.name.empty()) t.name = where + "#" + std::to_string(no);
            tasks.push_back(std::move(t));
            break;
          }
          case Source::oasst:
            for (auto& r : adapt_oasst(parse_chat_tree(line, registry))) {
              if (entry.lang) r.lang = *entry.lang;
              out.push_back(std::move(r));
            }
            break;
          case Source::xp3:
          case Source::flan: {
            TaskRow row = parse_task_row(line, registry);
            if (!row.lang && entry.lang) row.lang = entry.lang;
            (entry.source == Source::xp3 ? xp3_rows : flan_rows).push_back(std::move(row));
            break;
          }
          default:
            report.warn(at + "task-json entries need source supnatinst, xp3, oasst or flan");
        }
      } catch (const std::invalid_argument& e) {
        report.warn(at + e.what());
      }
    });
    if (!xp3_rows.empty())
      for (auto& r : adapt_xp3(xp3_rows, &report)) out.push_back(std::move(r));
  }
  for (auto& r : adapt_supnatinst(tasks, derive_seed(seed, "supnatinst"), caps, &report))
    out.push_back(std::move(r));
  for (auto& r : adapt_flan(flan_rows, derive_seed(seed, "flan"), quotas, &report))
    out.push_back(std::move(r));
  return out;
}

// ---------------------------------------------------------------------------
// Pipeline

RunReport run_pipeline(const RunConfig& cfg, const PipelineHooks& hooks) {
  cfg.validate();
  auto log = [&](const std::string& msg) {
    if (hooks.log) hooks.log(msg);
  };
  const LanguageRegistry& registry = default_registry();
  CorpusManifest manifest;
  try {
    manifest = CorpusManifest::load(cfg.manifest, registry);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("manifest: ") + e.what());
  }
  const PromptTemplate tmpl = cfg.few_shot ? PromptTemplate::load(*cfg.few_shot) : PromptTemplate::shipped();
  const RoleBackends backends = hooks.backends ? *hooks.backends : make_backends(cfg);
  const InferenceClient client(backends, cfg.limits);

  Checkpoints ckpt(cfg.checkpoint_dir, cfg.fingerprint());
  RunReport report;
  bool may_resume = true;

  // Each stage either resumes from its checkpoint or runs and records one.
  auto stage = [&](const std::string& name, const std::vector<fs::path>& outputs, auto&& load,
                   auto&& run) {
    if (may_resume) {
      if (auto done = ckpt.completed(name, outputs)) {
        log("stage " + name + ": resumed from checkpoint");
        StageReport r = report_from(name, *done, report.warnings);
        load();
        report.stages.push_back(std::move(r));
        return;
      }
    }
    may_resume = false;
    log("stage " + name + ": running");
    std::vector<std::string> warnings;
    StageReport r = run(warnings);
    r.name = name;
    r.completed_at = iso_now();
    ckpt.mark_done(r, warnings);
    for (auto& w : warnings) report.warnings.push_back(std::move(w));
    report.stages.push_back(std::move(r));
  };

  auto fail_if_down = [&](const std::vector<InstructionRecord>& recs, const std::string& name) {
    if (!cfg.strict) return;
    for (const auto& r : recs) {
      for (const auto& s : r.trace.stages) {
        if (s.reason && is_unavailable(*s.reason))
          throw BackendDown("stage " + name + ": " + *s.reason + " (record " + r.id + ")");
      }
    }
  };

  // ingest: stream, gate, sample
  std::vector<SourceDocument> docs;
  stage("ingest", {ckpt.path("ingest.jsonl")},
        [&] { docs = load_documents(ckpt.path("ingest.jsonl")); },
        [&](std::vector<std::string>& warnings) {
          StageReport r;
          DocumentStream stream(manifest, registry);
          PlanSampler sampler(manifest.sampling, derive_seed(cfg.seed, "sample"));
          std::string drops_body;
          std::size_t passed = 0;
          while (auto doc = stream.next()) {
            ++r.input;
            const GateVerdict v = quality_gate(*doc, cfg.quality_gate);
            if (!v) {
              count_drop(r.drops, v.reason);
              drops_body += ojson{{"id", doc->id}, {"reason", v.reason}}.dump() + "\n";
              continue;
            }
            ++passed;
            sampler.push(std::move(*doc));
          }
          docs = std::move(sampler).take();
          if (passed > docs.size()) r.drops["not_sampled"] = passed - docs.size();
          r.output = docs.size();
          const auto& st = stream.stats();
          if (st.warning_count() > 0)
            warnings.push_back("ingest: skipped " + std::to_string(st.malformed) +
                               " malformed row(s) and " + std::to_string(st.duplicate_ids) +
                               " duplicate(s)");
          for (const auto& w : st.warnings) warnings.push_back("ingest: " + w);
          std::string body;
          for (const auto& d : docs) body += serialize_document(d) + "\n";
          write_file_atomic(ckpt.path("ingest.drops.jsonl"), drops_body);
          write_file_atomic(ckpt.path("ingest.jsonl"), body);
          return r;
        });

  // muri: translate, generate, localize, check
  std::vector<InstructionRecord> muri_out;
  stage("muri", {ckpt.path("muri.jsonl")},
        [&] { muri_out = load_records(ckpt.path("muri.jsonl")); },
        [&](std::vector<std::string>&) {
          StageReport r;
          r.input = docs.size();
          std::vector<InstructionRecord> results(docs.size());
          parallel_for(docs.size(), cfg.workers, [&](std::size_t i) {
            results[i] = run_muri(docs[i], client, tmpl, cfg.muri, derive_seed(cfg.seed, docs[i].id));
          });
          fail_if_down(results, "muri");
          std::vector<InstructionRecord> dropped;
          for (auto& rec : results) {
            if (const auto* d = rec.trace.first_drop()) {
              count_drop(r.drops, d->reason.value_or("dropped"));
              dropped.push_back(std::move(rec));
            } else {
              muri_out.push_back(std::move(rec));
            }
          }
          r.output = muri_out.size();
          write_file_atomic(ckpt.path("muri.drops.jsonl"), records_jsonl(dropped));
          write_file_atomic(ckpt.path("muri.jsonl"), records_jsonl(muri_out));
          return r;
        });

  // filter: keyword blocklist, then content screen
  std::vector<InstructionRecord> filtered;
  stage("filter", {ckpt.path("filter.jsonl")},
        [&] { filtered = load_records(ckpt.path("filter.jsonl")); },
        [&](std::vector<std::string>& warnings) {
          StageReport r;
          r.input = muri_out.size();
          std::vector<InstructionRecord> results = muri_out;
          std::vector<double> noise(results.size(), 0.0);
          parallel_for(results.size(), cfg.workers, [&](std::size_t i) {
            InstructionRecord& rec = results[i];
            const std::string inst_en = rec.trace.inst_en.value_or(rec.instruction);
            const FilterVerdict kw = keyword_filter(inst_en, cfg.filters);
            if (!kw) {
              rec.trace.drop(Stage::keyword_filter, kw.reason + ":" + kw.matched_word);
              return;
            }
            rec.trace.pass(Stage::keyword_filter);
            const std::string doc_en = rec.trace.doc_en.value_or(rec.output);
            const FilterVerdict sc = content_screen(inst_en, doc_en, cfg.filters, client);
            std::optional<std::string> model =
                sc.model_id.empty() ? std::nullopt : std::optional(sc.model_id);
            if (!sc) {
              rec.trace.drop(Stage::content_screen, sc.reason, model);
              return;
            }
            if (cfg.filters.noise_report || cfg.filters.noise_drop_threshold)
              noise[i] = structural_noise_score(rec.output);
            if (cfg.filters.noise_drop_threshold && noise[i] >= *cfg.filters.noise_drop_threshold) {
              rec.trace.drop(Stage::content_screen, "structural_noise", model);
              return;
            }
            rec.trace.pass(Stage::content_screen, model,
                           sc.reason.empty() ? std::nullopt : std::optional(sc.reason));
          });
          fail_if_down(results, "filter");
          std::vector<InstructionRecord> dropped;
          std::size_t noisy = 0;
          for (std::size_t i = 0; i < results.size(); ++i) {
            if (noise[i] >= 0.5) ++noisy;
            if (const auto* d = results[i].trace.first_drop()) {
              count_drop(r.drops, d->reason.value_or("dropped"));
              dropped.push_back(std::move(results[i]));
            } else {
              filtered.push_back(std::move(results[i]));
            }
          }
          if (cfg.filters.noise_report && noisy > 0)
            warnings.push_back("filter: " + std::to_string(noisy) +
                               " output(s) with structural noise score >= 0.5 (report only)");
          r.output = filtered.size();
          write_file_atomic(ckpt.path("filter.drops.jsonl"), records_jsonl(dropped));
          write_file_atomic(ckpt.path("filter.jsonl"), records_jsonl(filtered));
          return r;
        });

  // adapt: auxiliary sources
  std::vector<InstructionRecord> adapted;
  stage("adapt", {ckpt.path("adapt.jsonl")},
        [&] { adapted = load_records(ckpt.path("adapt.jsonl")); },
        [&](std::vector<std::string>& warnings) {
          StageReport r;
          AdapterReport ar;
          adapted = adapt_manifest(manifest, registry, derive_seed(cfg.seed, "adapt"), cfg.supnatinst,
                                   cfg.flan, ar);
          if (ar.skipped > 0)
            warnings.push_back("adapt: skipped " + std::to_string(ar.skipped) + " input unit(s)");
          for (const auto& w : ar.warnings) warnings.push_back("adapt: " + w);
          r.input = r.output = adapted.size();
          write_file_atomic(ckpt.path("adapt.jsonl"), records_jsonl(adapted));
          return r;
        });
  report.adapted = report.stages.back().output;

  // dedup: one index over MURI and adapter records, keep-first
  std::vector<InstructionRecord> unique;
  stage("dedup", {ckpt.path("dedup.jsonl")},
        [&] { unique = load_records(ckpt.path("dedup.jsonl")); },
        [&](std::vector<std::string>&) {
          StageReport r;
          std::vector<InstructionRecord> merged = filtered;
          merged.insert(merged.end(), adapted.begin(), adapted.end());
          r.input = merged.size();
          DedupParams params = cfg.dedup;
          params.workers = cfg.workers;
          const DedupResult result = deduplicate(merged, params);
          std::vector<bool> keep(merged.size(), false);
          for (std::size_t i : result.retained) keep[i] = true;
          std::string pairs;
          for (const auto& p : result.dropped)
            pairs += ojson{{"kept_id", p.kept_id}, {"dropped_id", p.dropped_id}, {"estimate", p.estimate}}
                         .dump() +
                     "\n";
          std::vector<InstructionRecord> dropped;
          for (std::size_t i = 0; i < merged.size(); ++i) {
            if (keep[i]) {
              merged[i].trace.pass(Stage::dedup);
              unique.push_back(std::move(merged[i]));
            } else {
              merged[i].trace.drop(Stage::dedup, "near_duplicate");
              ++r.drops["near_duplicate"];
              dropped.push_back(std::move(merged[i]));
            }
          }
          r.output = unique.size();
          write_file_atomic(ckpt.path("dedup.pairs.jsonl"), pairs);
          write_file_atomic(ckpt.path("dedup.drops.jsonl"), records_jsonl(dropped));
          write_file_atomic(ckpt.path("dedup.jsonl"), records_jsonl(unique));
          return r;
        });

  // assemble: splits, release files, stats
  const fs::path release = cfg.release_dir();
  stage("assemble",
        {release / "train.jsonl", release / "validation.jsonl", release / "test.jsonl",
         release / "stats.json"},
        [&] {},
        [&](std::vector<std::string>& warnings) {
          StageReport r;
          r.input = unique.size();
          std::vector<InstructionRecord> final_records = unique;
          const SplitReport sr = assign_splits(final_records, cfg.split);
          for (const auto& w : sr.warnings) warnings.push_back("split: " + w);
          write_release(release, final_records, SerializeOptions{cfg.strip_trace});
          const DatasetStats stats = compute_stats(final_records);
          write_file_atomic(release / "stats.json", stats_json(stats) + "\n");
          write_file_atomic(release / "stats.txt", render_stats_table(stats));
          write_file_atomic(release / "diversity.json",
                            diversity_json(compute_diversity(final_records, DiversityTables::shipped())) +
                                "\n");
          r.output = final_records.size();
          return r;
        });

  report.documents = report.stages.front().input;
  report.surviving = report.stages.back().output;
  for (const auto& s : report.stages)
    for (const auto& [reason, n] : s.drops) report.drops[reason] += n;
  // Split sizes come from the release files so resumed runs report them too.
  const std::array<const char*, 3> files{"train.jsonl", "validation.jsonl", "test.jsonl"};
  for (std::size_t i = 0; i < 3; ++i) {
    std::size_t lines = 0;
    for_each_line(release / files[i], [&](std::string_view l, std::size_t) {
      if (!text::trim(l).empty()) ++lines;
    });
    report.splits[i] = lines;
  }
  write_file_atomic(cfg.checkpoint_dir / "report.json", report.to_json() + "\n");
  log("run complete: " + std::to_string(report.surviving) + " record(s) released");
  return report;
}

}  // namespace muri
