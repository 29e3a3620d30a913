#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "muri/adapters.hpp"
#include "muri/jsonl.hpp"
#include "testkit.hpp"

namespace muri {
namespace {

using nlohmann::json;

WikiHowArticle article() {
  WikiHowArticle a;
  a.lang = kEnglish;
  a.title = "How to Repot a Houseplant";
  a.abstract = "Repotting gives roots room to grow.";
  a.steps = {{"Pick a pot.", "One size larger is enough."}, {"Loosen the roots.", "Use fingers."}};
  a.url = "https://www.wikihow.com/Repot-a-Houseplant";
  return a;
}

std::uint64_t seed_for(const std::string& url, bool abstract, bool full) {
  for (std::uint64_t s = 0;; ++s) {
    const auto l = draw_wikihow_layout(url, s);
    if (l.include_abstract == abstract && l.full_steps == full) return s;
  }
}

TEST(WikiHow, AbstractAndFullSteps) {
  const auto a = article();
  const auto rec = render_wikihow(a, seed_for(a.url, true, true));
  EXPECT_EQ(rec.instruction, a.title);
  EXPECT_EQ(rec.output,
            "Repotting gives roots room to grow.\n\n"
            "1. Pick a pot.\nOne size larger is enough.\n\n"
            "2. Loosen the roots.\nUse fingers.");
  EXPECT_EQ(rec.source, Source::wikihow);
  EXPECT_TRUE(validate_record(rec, default_registry()).empty());
}

TEST(WikiHow, TitlesOnly) {
  const auto a = article();
  const auto rec = render_wikihow(a, seed_for(a.url, false, false));
  EXPECT_EQ(rec.output, "1. Pick a pot.\n2. Loosen the roots.");
}

TEST(WikiHow, LayoutIsAPureFunctionOfUrlAndSeed) {
  const auto a = draw_wikihow_layout("u", 3), b = draw_wikihow_layout("u", 3);
  EXPECT_EQ(a.include_abstract, b.include_abstract);
  EXPECT_EQ(a.full_steps, b.full_steps);
  EXPECT_EQ(render_wikihow(article(), 9), render_wikihow(article(), 9));
}

TEST(WikiHow, TenThousandRendersAreBalanced) {
  std::size_t abstract = 0, full = 0, both = 0;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const auto l = draw_wikihow_layout(article().url, s);
    abstract += l.include_abstract;
    full += l.full_steps;
    both += l.include_abstract && l.full_steps;
  }
  EXPECT_GE(abstract, 4850u);
  EXPECT_LE(abstract, 5150u);
  EXPECT_GE(full, 4850u);
  EXPECT_LE(full, 5150u);
  // The two choices are independent.
  EXPECT_NEAR(static_cast<double>(both) / 10000, 0.25, 0.015);
}

TEST(WikiHow, ParseRejectsBadArticles) {
  const auto& reg = default_registry();
  EXPECT_THROW(parse_wikihow_article(R"({"lang":"eng_Latn","title":"","steps":[{"title":"a"}]})", reg),
               std::invalid_argument);
  EXPECT_THROW(parse_wikihow_article(R"({"lang":"eng_Latn","title":"T","steps":[]})", reg),
               std::invalid_argument);
  EXPECT_THROW(parse_wikihow_article("{", reg), std::invalid_argument);
  auto ok = parse_wikihow_article(
      R"({"lang":"es","title":"T","abstract":"A","steps":[{"title":"s","text":"x"}],"url":"u"})", reg);
  EXPECT_EQ(ok.lang.str(), "spa_Latn");
  EXPECT_EQ(ok.steps.size(), 1u);
}

TEST(WikiHow, FixtureHasThreeArticles) {
  std::size_t n = 0;
  for_each_line(testkit::source_dir() / "fixtures" / "wikihow_3.jsonl",
                [&](std::string_view line, std::size_t) {
                  auto rec = render_wikihow(parse_wikihow_article(line, default_registry()), 1);
                  EXPECT_TRUE(validate_record(rec, default_registry()).empty());
                  ++n;
                });
  EXPECT_EQ(n, 3u);
}

SupNatTask task(std::string name, std::string category, std::size_t instances,
                std::optional<LanguageTag> lang = kEnglish) {
  SupNatTask t;
  t.name = std::move(name);
  t.definition = "Definition of " + t.name + ".";
  t.categories = {std::move(category)};
  t.lang = lang;
  for (std::size_t i = 0; i < instances; ++i)
    t.instances.push_back({"input " + std::to_string(i), {"output " + std::to_string(i), "alt"}});
  return t;
}

TEST(SupNatInst, TranslationTaskCappedAt200) {
  auto recs = adapt_supnatinst({task("t1", "Translation", 300)}, 1);
  EXPECT_EQ(recs.size(), 200u);
  std::set<std::string> inputs;
  for (const auto& r : recs) {
    EXPECT_TRUE(r.instruction.starts_with("Definition of t1.\n\ninput "));
    EXPECT_TRUE(r.output.starts_with("output "));
    inputs.insert(r.instruction);
  }
  EXPECT_EQ(inputs.size(), 200u);
}

TEST(SupNatInst, BucketBelowCapKeepsAll) {
  EXPECT_EQ(adapt_supnatinst({task("qa", "Question Answering", 100)}, 1).size(), 100u);
}

TEST(SupNatInst, NonTranslationTasksPoolByType) {
  auto recs = adapt_supnatinst(
      {task("qa1", "Question Answering", 400), task("qa2", "Question Answering", 400),
       task("tr1", "Translation", 250), task("tr2", "Translation", 50)},
      5);
  EXPECT_EQ(recs.size(), 500u + 200u + 50u);
}

TEST(SupNatInst, DeterministicAndSkipsUnknownLanguage) {
  const std::vector<SupNatTask> tasks{task("a", "Translation", 300), task("b", "QA", 30),
                                      task("c", "QA", 10, std::nullopt)};
  AdapterReport report;
  auto one = adapt_supnatinst(tasks, 42, {}, &report);
  EXPECT_EQ(one, adapt_supnatinst(tasks, 42));
  EXPECT_NE(one, adapt_supnatinst(tasks, 43));
  EXPECT_EQ(one.size(), 230u);
  EXPECT_EQ(report.skipped, 1u);
  ASSERT_FALSE(report.warnings.empty());
}

TEST(SupNatInst, ParsesUpstreamLayout) {
  auto t = parse_supnatinst_task(
      R"({"name":"task1","Definition":["Translate it."],"Categories":["Translation"],
          "Output_language":["Turkish"],"Instances":[{"input":"a","output":["b"]}]})",
      default_registry());
  EXPECT_EQ(t.definition, "Translate it.");
  EXPECT_TRUE(t.is_translation());
  EXPECT_EQ(t.lang->str(), "tur_Latn");
  EXPECT_EQ(t.instances.at(0).outputs.at(0), "b");
}

ChatNode node(std::string id, std::optional<std::string> parent, ChatRole role, std::string text) {
  return ChatNode{std::move(id), std::move(parent), role, std::move(text), kEnglish};
}

TEST(Oasst, SingleTurn) {
  ChatTree t{{node("p", {}, ChatRole::prompter, "Hi?"), node("a", "p", ChatRole::assistant, "Hello.")}};
  auto recs = adapt_oasst(t);
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].instruction, "Hi?");
  EXPECT_EQ(recs[0].output, "Hello.");
}

TEST(Oasst, ThreeTurnChainYieldsDepthsZeroAndTwo) {
  ChatTree t{{node("p0", {}, ChatRole::prompter, "Q0"), node("a1", "p0", ChatRole::assistant, "A1"),
              node("p2", "a1", ChatRole::prompter, "Q2"), node("a3", "p2", ChatRole::assistant, "A3"),
              node("p4", "a3", ChatRole::prompter, "Q4"), node("a5", "p4", ChatRole::assistant, "A5")}};
  auto recs = adapt_oasst(t);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].instruction, "Q0");
  EXPECT_EQ(recs[1].instruction, "Q2");
  EXPECT_EQ(recs[1].output, "A3");
}

TEST(Oasst, PrompterWithoutTextOrReplyIsSkipped) {
  ChatTree empty_prompt{{node("p", {}, ChatRole::prompter, " "),
                         node("a", "p", ChatRole::assistant, "Reply")}};
  EXPECT_TRUE(adapt_oasst(empty_prompt).empty());
  ChatTree no_reply{{node("p", {}, ChatRole::prompter, "Q")}};
  EXPECT_TRUE(adapt_oasst(no_reply).empty());
}

TEST(Oasst, MalformedTreesThrow) {
  ChatTree two_roots{{node("a", {}, ChatRole::prompter, "x"), node("b", {}, ChatRole::prompter, "y")}};
  EXPECT_THROW(two_roots.validate(), std::invalid_argument);
  ChatTree orphan{{node("a", {}, ChatRole::prompter, "x"), node("b", "zz", ChatRole::assistant, "y")}};
  EXPECT_THROW(orphan.validate(), std::invalid_argument);
  ChatTree cycle{{node("r", {}, ChatRole::prompter, "x"), node("a", "b", ChatRole::assistant, "y"),
                  node("b", "a", ChatRole::prompter, "z")}};
  EXPECT_THROW(cycle.validate(), std::invalid_argument);
  EXPECT_THROW(adapt_oasst(cycle), std::invalid_argument);
}

TEST(Oasst, NestedFixtureTakesFirstAssistantReply) {
  const std::string line = read_file(testkit::source_dir() / "fixtures" / "oasst_tree.json");
  auto tree = parse_chat_tree(line, default_registry());
  EXPECT_EQ(tree.nodes.size(), 7u);
  auto recs = adapt_oasst(tree);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].output, "Python is a common choice because its syntax is readable.");
  EXPECT_EQ(recs[1].instruction, "Why is readability important for beginners?");
}

TEST(Xp3, FieldMappingAndEmpty) {
  TaskRow row{"Q", "A", kEnglish, ""};
  auto recs = adapt_xp3({row});
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].instruction, "Q");
  EXPECT_EQ(recs[0].output, "A");
  EXPECT_EQ(recs[0].lang, kEnglish);
  EXPECT_TRUE(adapt_xp3({}).empty());

  AdapterReport report;
  EXPECT_TRUE(adapt_xp3({TaskRow{"Q", std::nullopt, kEnglish, ""}}, &report).empty());
  EXPECT_EQ(report.skipped, 1u);
  auto parsed = parse_task_row(R"({"inputs":"Q","targets":"A","language":"sw"})", default_registry());
  EXPECT_EQ(parsed.lang->str(), "swh_Latn");
}

TEST(Flan, QuotasAreExact) {
  std::vector<TaskRow> rows;
  rows.reserve(120000);
  for (int i = 0; i < 60000; ++i) rows.push_back({"m" + std::to_string(i), "t", {}, "main"});
  for (int i = 0; i < 60000; ++i) rows.push_back({"c" + std::to_string(i), "t", {}, "cot"});
  auto recs = adapt_flan(rows, 8, FlanQuotas{50000, 50000});
  ASSERT_EQ(recs.size(), 100000u);
  std::size_t cot = 0;
  for (const auto& r : recs) cot += r.instruction[0] == 'c';
  EXPECT_EQ(cot, 50000u);
  EXPECT_EQ(recs.front().lang, kEnglish);
}

TEST(Flan, SmallSubsetsSaturate) {
  std::vector<TaskRow> rows{{"a", "b", {}, "main"}, {"c", "d", {}, "cot"}};
  EXPECT_EQ(adapt_flan(rows, 1).size(), 2u);
}

}  // namespace
}  // namespace muri
