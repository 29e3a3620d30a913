#include <gtest/gtest.h>

#include <nlohmann/json.hpp>
#include <sstream>

#include "muri/cli.hpp"
#include "muri/dedup.hpp"
#include "muri/jsonl.hpp"
#include "testkit.hpp"

namespace muri {
namespace {

using nlohmann::json;
using testkit::TempDir;
namespace fs = std::filesystem;

struct CliResult {
  int status;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "muri");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int status = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {status, out.str(), err.str()};
}

fs::path fixture(std::string_view name) { return testkit::source_dir() / "fixtures" / name; }

TEST(Cli, RunMockConfigOverHundredDocs) {
  TempDir dir("cli-run");
  const auto fx = testkit::write_e2e_fixture(dir.path());
  const auto r = cli({"--checkpoint-dir", (dir / "ck").string(), "run", "--config",
                      fx.config.string()});
  ASSERT_EQ(r.status, cli::kOk) << r.err;
  const auto report = json::parse(r.out);
  EXPECT_EQ(report["balanced"], true);
  EXPECT_EQ(report["ingested"].get<std::size_t>(),
            report["surviving"].get<std::size_t>() + report["dropped"].get<std::size_t>());
  EXPECT_EQ(report["ingested"], 100);
  EXPECT_TRUE(fs::exists(dir / "ck" / "release" / "train.jsonl"));
}

TEST(Cli, MockAndRemoteForSameRoleExitsTwo) {
  TempDir dir("cli-bad");
  const auto fx = testkit::write_e2e_fixture(dir.path());
  auto cfg = json::parse(testkit::e2e_config(fx.manifest, dir / "ck"));
  cfg["endpoints"]["translate"]["base_url"] = "http://127.0.0.1:9";
  testkit::write_text(dir / "bad.json", cfg.dump());
  const auto r = cli({"run", "--config", (dir / "bad.json").string()});
  EXPECT_EQ(r.status, cli::kUsage);
  EXPECT_NE(r.err.find("translate"), std::string::npos) << r.err;
}

TEST(Cli, MockFlagOverridesRemoteEndpoints) {
  TempDir dir("cli-mockflag");
  const auto fx = testkit::write_e2e_fixture(dir.path());
  auto cfg = json::parse(testkit::e2e_config(fx.manifest, dir / "ck"));
  for (const char* role : {"translate", "generate", "lid", "screen"})
    cfg["endpoints"][role] = {{"base_url", "http://127.0.0.1:9"}};
  testkit::write_text(dir / "remote.json", cfg.dump());
  const auto r = cli({"--mock", "run", "--config", (dir / "remote.json").string()});
  EXPECT_EQ(r.status, cli::kOk) << r.err;
}

TEST(Cli, StrictBackendDownExitsOne) {
  TempDir dir("cli-strict");
  const auto fx = testkit::write_e2e_fixture(dir.path());
  auto cfg = json::parse(testkit::e2e_config(fx.manifest, dir / "ck"));
  cfg["strict"] = true;
  cfg["mock"]["down_roles"] = {"translate"};
  testkit::write_text(dir / "strict.json", cfg.dump());
  const auto r = cli({"run", "--config", (dir / "strict.json").string()});
  EXPECT_EQ(r.status, cli::kFailure);
  EXPECT_TRUE(fs::exists(dir / "ck" / "ingest.jsonl"));
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({"run"}).status, cli::kUsage);
  EXPECT_EQ(cli({"frobnicate"}).status, cli::kUsage);
  EXPECT_EQ(cli({"stats", "/nonexistent/file.jsonl"}).status, cli::kUsage);
  EXPECT_EQ(cli({"--help"}).status, cli::kOk);
}

TEST(Cli, StatsOnEmptyFileIsZeroTable) {
  TempDir dir("cli-stats");
  testkit::write_text(dir / "empty.jsonl", "");
  const auto r = cli({"stats", (dir / "empty.jsonl").string(), "--table"});
  ASSERT_EQ(r.status, cli::kOk) << r.err;
  EXPECT_NE(r.out.find("Total"), std::string::npos);
  const auto j = cli({"stats", (dir / "empty.jsonl").string()});
  EXPECT_EQ(json::parse(j.out)["total"], 0);
}

TEST(Cli, StatsFromPublishedCounts) {
  const auto r = cli({"stats", "--counts", fixture("published_counts.json").string(), "--table"});
  ASSERT_EQ(r.status, cli::kOk) << r.err;
  EXPECT_EQ(r.out, read_file(testkit::source_dir() / "golden" / "published_stats.txt"));
}

TEST(Cli, AdaptWikiHowFixture) {
  TempDir dir("cli-adapt");
  const auto out = dir / "wikihow.jsonl";
  const auto r = cli({"--seed", "3", "adapt", "wikihow", fixture("wikihow_3.jsonl").string(),
                      "--out", out.string()});
  ASSERT_EQ(r.status, cli::kOk) << r.err;
  const auto recs = read_records(out);
  ASSERT_EQ(recs.size(), 3u);
  for (const auto& rec : recs) EXPECT_EQ(rec.source, Source::wikihow);
  EXPECT_EQ(cli({"validate", out.string()}).status, cli::kOk);
}

TEST(Cli, AdaptOtherSources) {
  for (auto [source, file, expected] :
       {std::tuple{"oasst", "oasst_tree.json", 2u}, std::tuple{"xp3", "xp3.jsonl", 3u},
        std::tuple{"supnatinst", "supnatinst_tasks.jsonl", 9u}, std::tuple{"flan", "flan.jsonl", 10u}}) {
    const auto r = cli({"adapt", source, fixture(file).string()});
    ASSERT_EQ(r.status, cli::kOk) << source << r.err;
    EXPECT_EQ(parse_jsonl(r.out).size(), expected) << source;
  }
}

TEST(Cli, DedupOnlyMatchesModuleOnPlantedSet) {
  TempDir dir("cli-dedup");
  const auto set = testkit::planted_near_duplicates(300, 30, 2024);
  std::vector<InstructionRecord> recs;
  for (std::size_t i = 0; i < set.texts.size(); ++i) {
    InstructionRecord r;
    r.id = set.ids[i];
    r.lang = kEnglish;
    r.instruction = "Passage";
    r.output = set.texts[i];
    r.source = Source::culturax;
    recs.push_back(std::move(r));
  }
  write_file_atomic(dir / "planted.jsonl", serialize_jsonl(recs));
  const auto r = cli({"dedup-only", (dir / "planted.jsonl").string(), "--out",
                      (dir / "kept.jsonl").string()});
  ASSERT_EQ(r.status, cli::kOk) << r.err;
  const auto summary = json::parse(r.out);
  const auto module = deduplicate(recs, DedupParams{});
  EXPECT_EQ(summary["retained"], module.retained.size());
  EXPECT_EQ(summary["dropped"], module.dropped.size());
  EXPECT_EQ(read_records(dir / "kept.jsonl").size(), module.retained.size());

  std::vector<std::string> texts;
  for (const auto& rec : recs) texts.push_back(dedup_text(rec));
  const auto oracle = testkit::oracle_duplicate_pairs(texts, 0.85);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < recs.size(); ++i) index[recs[i].id] = i;
  std::size_t hit = 0;
  for (const auto& p : summary["pairs"])
    hit += oracle.count({index[p["kept_id"]], index[p["dropped_id"]]});
  EXPECT_GE(static_cast<double>(hit) / oracle.size(), 0.95);
  EXPECT_GE(static_cast<double>(hit) / summary["pairs"].size(), 0.90);
}

TEST(Cli, ReviewSheetAndDiversity) {
  TempDir dir("cli-review");
  std::vector<InstructionRecord> recs;
  for (int i = 0; i < 100; ++i) {
    InstructionRecord r;
    r.id = "deu-" + std::to_string(i);
    r.lang = LanguageTag::unchecked("deu_Latn");
    r.instruction = "Frage\t" + std::to_string(i);
    r.output = "Antwort\n" + std::to_string(i);
    r.source = Source::wikipedia;
    r.split = Split::train;
    recs.push_back(std::move(r));
  }
  write_file_atomic(dir / "deu.jsonl", serialize_jsonl(recs));
  const auto r = cli({"review-sheet", (dir / "deu.jsonl").string(), "--lang", "deu_Latn"});
  ASSERT_EQ(r.status, cli::kOk) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 31);

  const auto d = cli({"diversity", (dir / "deu.jsonl").string()});
  ASSERT_EQ(d.status, cli::kOk) << d.err;
  const auto j = json::parse(d.out);
  EXPECT_TRUE(j.contains("languages"));
}

TEST(Cli, ValidateFlagsBadRecords) {
  TempDir dir("cli-validate");
  testkit::write_text(
      dir / "bad.jsonl",
      R"({"id":"x","lang":"EN","instruction":"","output":"o","source":"xp3","split":"train"})"
      "\n");
  const auto r = cli({"validate", (dir / "bad.jsonl").string()});
  EXPECT_EQ(r.status, cli::kFailure);
  EXPECT_EQ(json::parse(r.out)["invalid"], 1);
}

}  // namespace
}  // namespace muri
