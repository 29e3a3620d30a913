#include <gtest/gtest.h>

#include <chrono>
#include <nlohmann/json.hpp>

#include "muri/jsonl.hpp"
#include "muri/pipeline.hpp"
#include "testkit.hpp"

namespace muri {
namespace {

using nlohmann::json;
using testkit::TempDir;
namespace fs = std::filesystem;

const char* kMockRoles = R"("endpoints":{"translate":{"mock":true},"generate":{"mock":true},
                             "lid":{"mock":true},"screen":{"mock":true}})";

RunConfig parse_with(std::string_view extra) {
  return RunConfig::parse(R"({"manifest":"corpus.json",)" + std::string(kMockRoles) +
                          std::string(extra) + "}");
}

RunConfig e2e_config(const testkit::E2eFixture& fx, const fs::path& ckpt, std::size_t workers = 2) {
  return RunConfig::parse(testkit::e2e_config(fx.manifest, ckpt, workers));
}

TEST(RunConfig, UnknownKeysAreErrors) {
  EXPECT_THROW(parse_with(R"(,"sed":1)"), ConfigError);
  EXPECT_THROW(parse_with(R"(,"dedup":{"treshold":0.8})"), ConfigError);
  EXPECT_THROW(RunConfig::parse("{"), ConfigError);
  EXPECT_NO_THROW(parse_with(R"(,"dedup":{"threshold":0.8})"));
}

TEST(RunConfig, MockAndRemoteAreExclusivePerRole) {
  auto both = RunConfig::parse(R"({"endpoints":{
      "translate":{"mock":true,"base_url":"http://127.0.0.1:9"},
      "generate":{"mock":true},"lid":{"mock":true},"screen":{"mock":true}}})");
  EXPECT_THROW(both.validate(), ConfigError);
  auto missing = RunConfig::parse(R"({"endpoints":{"translate":{"mock":true}}})");
  EXPECT_THROW(missing.validate(), ConfigError);
  EXPECT_NO_THROW(parse_with("").validate());
}

TEST(RunConfig, SectionInvariantsSurfaceAsConfigErrors) {
  EXPECT_THROW(parse_with(R"(,"split":{"ratios":[0.9,0.1,0.1]})").validate(), ConfigError);
  EXPECT_THROW(parse_with(R"(,"filters":{"keyword_blocklist":["Bad"]})").validate(), ConfigError);
  EXPECT_THROW(parse_with(R"(,"muri":{"generate_mode":"beam"})"), ConfigError);
  EXPECT_THROW(parse_with(R"(,"mock":{"down_roles":["tts"]})"), ConfigError);
}

TEST(RunConfig, EnvironmentOnlyTouchesRemoteRoles) {
  auto cfg = RunConfig::parse(R"({"manifest":"corpus.json","endpoints":{
      "translate":{"base_url":"http://old:1"},
      "generate":{"mock":true},"lid":{"mock":true},"screen":{"mock":true}}})");
  cfg.apply_env([](const std::string& k) -> std::optional<std::string> {
    if (k == "MURI_TRANSLATE_URL") return "http://new:2";
    if (k == "MURI_LID_URL") return "http://ignored:3";
    if (k == "MURI_API_KEY") return "tok";
    return std::nullopt;
  });
  EXPECT_EQ(cfg.endpoints.at(ModelRole::translate).http->base_url, "http://new:2");
  EXPECT_EQ(cfg.endpoints.at(ModelRole::translate).http->api_key, "tok");
  EXPECT_TRUE(cfg.endpoints.at(ModelRole::lid).mock);
  EXPECT_FALSE(cfg.endpoints.at(ModelRole::lid).http);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(RunConfig, SeedDrivesSplitSeedUnlessFixed) {
  auto cfg = parse_with("");
  cfg.set_seed(5);
  const auto derived = cfg.split.seed;
  cfg.set_seed(6);
  EXPECT_NE(cfg.split.seed, derived);
  auto fixed = parse_with(R"(,"split":{"seed":77})");
  fixed.set_seed(6);
  EXPECT_EQ(fixed.split.seed, 77u);
}

TEST(RunConfig, FingerprintIgnoresWorkersButNotSeed) {
  TempDir dir("fp");
  const auto fx = testkit::write_e2e_fixture(dir.path());
  auto a = e2e_config(fx, dir / "run", 1);
  auto b = e2e_config(fx, dir / "run", 4);
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  b.set_seed(a.seed + 1);
  EXPECT_NE(a.fingerprint(), b.fingerprint());
}

TEST(ParallelFor, CoversEveryIndexAndRethrows) {
  std::vector<std::atomic<int>> hits(100);
  parallel_for(100, 4, [&](std::size_t i) { ++hits[i]; });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(parallel_for(10, 3,
                            [](std::size_t i) {
                              if (i == 7) throw std::runtime_error("x");
                            }),
               std::runtime_error);
}

TEST(ReasonCode, StripsDetail) {
  EXPECT_EQ(reason_code("blocked_keyword:translate"), "blocked_keyword");
  EXPECT_EQ(reason_code("lid_mismatch"), "lid_mismatch");
}

TEST(Pipeline, EndToEndAccounting) {
  TempDir dir("e2e");
  const auto fx = testkit::write_e2e_fixture(dir.path());
  const auto started = std::chrono::steady_clock::now();
  const RunReport report = run_pipeline(e2e_config(fx, dir / "run"));
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  EXPECT_LT(seconds, 30.0);
  EXPECT_EQ(report.documents, 100u);
  EXPECT_EQ(report.adapted, 0u);
  EXPECT_TRUE(report.balanced());
  for (const auto& [reason, n] : fx.expected_drops) EXPECT_EQ(report.drops.at(reason), n) << reason;
  EXPECT_EQ(report.dropped(), 21u);
  EXPECT_EQ(report.surviving, 79u);
  EXPECT_EQ(report.splits[0] + report.splits[1] + report.splits[2], 79u);
  ASSERT_EQ(report.stages.size(), stage_names().size());

  const auto on_disk = json::parse(read_file(dir / "run" / "report.json"));
  EXPECT_EQ(on_disk["surviving"], 79);
  EXPECT_EQ(on_disk["balanced"], true);
}

TEST(Pipeline, OutputsAreSourceDocumentsVerbatim) {
  TempDir dir("immut");
  const auto fx = testkit::write_e2e_fixture(dir.path());
  const auto cfg = e2e_config(fx, dir / "run");
  run_pipeline(cfg);
  const auto docs = read_file(dir / "run" / "ingest.jsonl");
  std::map<std::string, std::string> text_by_id;
  for (std::size_t p = 0, q; (q = docs.find('\n', p)) != std::string::npos; p = q + 1) {
    const auto d = parse_document(std::string_view(docs).substr(p, q - p));
    text_by_id[d.id] = d.text;
  }
  std::size_t checked = 0;
  for (const char* f : {"train.jsonl", "validation.jsonl", "test.jsonl"}) {
    for (const auto& rec : read_records(cfg.release_dir() / f)) {
      ASSERT_TRUE(text_by_id.count(rec.id)) << rec.id;
      EXPECT_EQ(rec.output, text_by_id[rec.id]);
      EXPECT_TRUE(validate_record(rec, default_registry()).empty()) << rec.id;
      EXPECT_NE(rec.split, Split::unassigned);
      ++checked;
    }
  }
  EXPECT_EQ(checked, 79u);
}

TEST(Pipeline, DropRecordsCarryTheirReason) {
  TempDir dir("drops");
  const auto fx = testkit::write_e2e_fixture(dir.path());
  run_pipeline(e2e_config(fx, dir / "run"));
  const auto filter_drops = read_records(dir / "run" / "filter.drops.jsonl");
  std::size_t keyword = 0;
  for (const auto& r : filter_drops) {
    EXPECT_EQ(r.split, Split::unassigned);
    const auto* d = r.trace.first_drop();
    ASSERT_NE(d, nullptr);
    if (d->name == "keyword_filter") {
      ++keyword;
      EXPECT_TRUE(d->reason->starts_with("blocked_keyword:")) << *d->reason;
    }
  }
  EXPECT_EQ(keyword, 5u);
  const auto pairs = read_file(dir / "run" / "dedup.pairs.jsonl");
  EXPECT_EQ(std::count(pairs.begin(), pairs.end(), '\n'), 3);
}

StageReport stage_of(const RunReport& r, std::string_view name) {
  for (const auto& s : r.stages)
    if (s.name == name) return s;
  return {};
}

TEST(Pipeline, RerunAfterDeletingFinalOutputResumesAssemblyOnly) {
  TempDir dir("resume");
  const auto fx = testkit::write_e2e_fixture(dir.path());
  const auto cfg = e2e_config(fx, dir / "run");
  const RunReport first = run_pipeline(cfg);
  const std::string train = read_file(cfg.release_dir() / "train.jsonl");
  fs::remove(cfg.release_dir() / "train.jsonl");

  const RunReport second = run_pipeline(cfg);
  for (const auto& name : stage_names()) {
    const auto a = stage_of(first, name), b = stage_of(second, name);
    if (name == "assemble") {
      EXPECT_FALSE(b.skipped);
    } else {
      EXPECT_TRUE(b.skipped) << name;
      EXPECT_EQ(a.completed_at, b.completed_at) << name;
      EXPECT_EQ(a.drops, b.drops) << name;
    }
  }
  EXPECT_EQ(read_file(cfg.release_dir() / "train.jsonl"), train);
  EXPECT_EQ(second.drops, first.drops);
  EXPECT_TRUE(second.balanced());

  // A full rerun resumes everything.
  const RunReport third = run_pipeline(cfg);
  for (const auto& s : third.stages) EXPECT_TRUE(s.skipped) << s.name;
}

TEST(Pipeline, ChangedConfigInvalidatesCheckpoints) {
  TempDir dir("invalidate");
  const auto fx = testkit::write_e2e_fixture(dir.path());
  auto cfg = e2e_config(fx, dir / "run");
  run_pipeline(cfg);
  cfg.set_seed(cfg.seed + 1);
  for (const auto& s : run_pipeline(cfg).stages) EXPECT_FALSE(s.skipped) << s.name;
}

TEST(Pipeline, StrictModeAbortsWhenBackendDownAndKeepsCheckpoints) {
  TempDir dir("strict");
  const auto fx = testkit::write_e2e_fixture(dir.path());
  auto cfg = e2e_config(fx, dir / "run");
  cfg.mock.down_roles = {ModelRole::lid};
  cfg.strict = true;
  EXPECT_THROW(run_pipeline(cfg), BackendDown);
  EXPECT_TRUE(fs::exists(dir / "run" / "ingest.done.json"));
  EXPECT_FALSE(fs::exists(dir / "run" / "muri.done.json"));

  cfg.strict = false;
  const auto report = run_pipeline(cfg);
  EXPECT_EQ(report.drops.at("lid_unavailable"), 100u);
  EXPECT_EQ(report.surviving, 0u);
  EXPECT_TRUE(report.balanced());
}

TEST(Pipeline, ByteIdenticalReleaseAcrossRunsAndWorkerCounts) {
  TempDir dir("det");
  const auto fx = testkit::write_e2e_fixture(dir.path());
  const auto a = e2e_config(fx, dir / "a", 1);
  const auto b = e2e_config(fx, dir / "b", 4);
  run_pipeline(a);
  run_pipeline(b);
  for (const char* f : {"train.jsonl", "validation.jsonl", "test.jsonl", "stats.json"})
    EXPECT_EQ(read_file(a.release_dir() / f), read_file(b.release_dir() / f)) << f;
}

TEST(Pipeline, AdapterSourcesJoinAtDedup) {
  const fs::path mini = testkit::source_dir() / "fixtures" / "mini";
  TempDir dir("mini");
  auto cfg = RunConfig::load(mini / "config.json");
  cfg.checkpoint_dir = dir / "run";
  const auto report = run_pipeline(cfg);
  EXPECT_TRUE(report.balanced());
  EXPECT_EQ(report.documents, 13u);
  EXPECT_EQ(report.drops.at("too_short"), 1u);
  // 3 wikihow + 2 oasst + 3 xp3 + (5 + 4) supnatinst + (3 + 2) flan
  EXPECT_EQ(report.adapted, 22u);
  EXPECT_FALSE(report.warnings.empty());
  const auto stats = json::parse(read_file(cfg.release_dir() / "stats.json"));
  EXPECT_EQ(stats["total"], report.surviving);
}

TEST(Pipeline, MissingManifestIsConfigError) {
  TempDir dir("nomanifest");
  auto cfg = parse_with("");
  cfg.manifest = dir / "absent.json";
  cfg.checkpoint_dir = dir / "run";
  EXPECT_THROW(run_pipeline(cfg), ConfigError);
}

}  // namespace
}  // namespace muri
