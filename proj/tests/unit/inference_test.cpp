#include <gtest/gtest.h>

#include "muri/inference.hpp"
#include "muri/text.hpp"
#include "testkit.hpp"

namespace muri {
namespace {

const LanguageTag kSpa{"spa", "Latn"};
const LanguageTag kTur{"tur", "Latn"};

// Backend whose replies are set per test.
class ScriptedBackend final : public InferenceBackend {
 public:
  std::optional<Failure> fail;
  std::string translation = "translated";
  double screen_score = 0.0;

  Result<Completion> translate(std::string_view, const LanguageTag&, const LanguageTag&,
                               double) override {
    if (fail) return *fail;
    return Completion{translation, "scripted"};
  }
  Result<Completion> generate(std::string_view, const DecodeOptions&) override {
    if (fail) return *fail;
    return Completion{"What?", "scripted"};
  }
  Result<LidResult> identify_language(std::string_view) override {
    if (fail) return *fail;
    return LidResult{kEnglish, 1.0, "scripted"};
  }
  Result<ScreenScore> screen(std::string_view) override {
    if (fail) return *fail;
    return ScreenScore{screen_score, "scripted"};
  }
};

InferenceClient mock_client(ClientLimits limits = {}) {
  return InferenceClient(RoleBackends::all(std::make_shared<MockBackend>()), limits);
}

TEST(MockTranslate, TaggedIdentity) {
  auto r = mock_client().translate("hola", kSpa, kEnglish);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->text, "[MT:spa→eng] hola");
  EXPECT_EQ(r->model_id, "mock-translate");
}

TEST(MockTranslate, EmptyTextIsPreconditionError) {
  EXPECT_THROW(mock_client().translate("", kSpa, kEnglish), std::invalid_argument);
  EXPECT_THROW(mock_client().translate("  ", kSpa, kEnglish), std::invalid_argument);
  EXPECT_THROW(mock_client().translate("x", kSpa, kSpa), std::invalid_argument);
}

TEST(MockTranslate, EmptyBackendReplyDrops) {
  auto backend = std::make_shared<ScriptedBackend>();
  backend->translation = "";
  InferenceClient client(RoleBackends::all(backend));
  auto r = client.translate("hola", kSpa, kEnglish);
  ASSERT_FALSE(r);
  EXPECT_EQ(r.failure().reason, "empty_translation");

  auto mt_empty = mock_client().translate("hola MT_EMPTY", kSpa, kEnglish);
  EXPECT_EQ(mt_empty.failure().reason, "empty_translation");
  EXPECT_EQ(mock_client().translate("MT_FAIL", kSpa, kEnglish).failure().reason,
            "mt_unavailable");
}

TEST(MockTranslate, LongTextIsSegmentedAndReassembled) {
  ClientLimits limits;
  limits.max_segment_chars = 50;
  const std::string para = "Uno dos tres cuatro cinco seis siete ocho.";
  const std::string doc = para + "\n\n" + para + "\n" + para;
  auto r = mock_client(limits).translate(doc, kSpa, kEnglish);
  ASSERT_TRUE(r);
  const std::string tagged = "[MT:spa→eng] " + para;
  EXPECT_EQ(r->text, tagged + "\n\n" + tagged + "\n" + tagged);
}

// Property: segments respect the limit and concatenate back to the input.
TEST(Segmentation, ReassemblesExactly) {
  Rng rng(12);
  for (int round = 0; round < 50; ++round) {
    std::string doc;
    const std::size_t paras = 1 + rng.below(8);
    for (std::size_t p = 0; p < paras; ++p) {
      doc += testkit::prose(rng, 10 + rng.below(400));
      doc += rng.coin() ? "\n" : "\n\n";
    }
    const std::size_t limit = 40 + rng.below(200);
    std::string back;
    for (const auto& [seg, sep] : segment_for_translation(doc, limit)) {
      EXPECT_LE(text::codepoint_count(seg), limit);
      back += seg + sep;
    }
    EXPECT_EQ(back, doc);
  }
}

TEST(MockGenerate, AnswerMarker) {
  auto r = mock_client().generate("some text ANSWER:fracture more");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->text, "What is fracture?");
}

TEST(MockGenerate, GreedyIsDeterministic) {
  auto c = mock_client();
  const std::string p = "Answer: [MT:tur→eng] one two three four five six seven\n> What kind";
  EXPECT_EQ(c.generate(p)->text, c.generate(p)->text);
  EXPECT_EQ(c.generate(p)->text, "What is one two three four five six?");
}

TEST(MockGenerate, OversizedPromptDrops) {
  ClientLimits roomy;
  roomy.max_prompt_chars = 100000;
  auto c = mock_client(roomy);
  EXPECT_TRUE(c.generate(std::string(32000, 'a')));  // at the backend limit
  auto over = c.generate(std::string(32001, 'a'));
  ASSERT_FALSE(over);
  EXPECT_EQ(over.failure().reason, "prompt_too_long");
  // The client's own limit catches it before the backend.
  EXPECT_EQ(mock_client().generate(std::string(16001, 'a')).failure().reason, "prompt_too_long");
  EXPECT_EQ(mock_client().generate("GEN_FAIL").failure().reason, "generation_failed");
}

TEST(MockLid, TaggedAndUntagged) {
  auto tagged = mock_client().identify_language("[MT:eng→tur] Merhaba");
  ASSERT_TRUE(tagged);
  EXPECT_EQ(tagged->lang.str(), "tur_Latn");
  EXPECT_EQ(tagged->confidence, 1.0);
  auto plain = mock_client().identify_language("Merhaba");
  EXPECT_EQ(plain->lang, kEnglish);
  EXPECT_EQ(plain->confidence, 0.5);
}

TEST(Lid, BackendFailureMapsToLidUnavailable) {
  auto backend = std::make_shared<ScriptedBackend>();
  backend->fail = Failure{"unavailable", "HTTP 500"};
  InferenceClient client(RoleBackends::all(backend));
  EXPECT_EQ(client.identify_language("x").failure().reason, "lid_unavailable");
  EXPECT_EQ(client.screen("x").failure().reason, "screen_unavailable");
  EXPECT_EQ(client.translate("x", kSpa, kEnglish).failure().reason, "mt_unavailable");
  EXPECT_EQ(client.generate("x").failure().reason, "generation_failed");
}

TEST(MockScreen, TriggerAndThresholdBoundary) {
  auto flagged = mock_client().screen("text TRIGGER_HATE text");
  ASSERT_TRUE(flagged);
  EXPECT_TRUE(flagged->flagged());
  EXPECT_EQ(flagged->score, 0.99);
  auto plain = mock_client().screen("benign");
  EXPECT_FALSE(plain->flagged());
  EXPECT_EQ(plain->score, 0.01);

  auto backend = std::make_shared<ScriptedBackend>();
  backend->screen_score = 0.5;
  InferenceClient client(RoleBackends::all(backend));
  EXPECT_TRUE(client.screen("x")->flagged());
  EXPECT_TRUE(make_verdict(0.5, 0.5).flagged());
  EXPECT_FALSE(make_verdict(0.4999, 0.5).flagged());
}

TEST(MockBackend, DownRolesFailEveryCall) {
  MockConfig cfg;
  cfg.down_roles = {ModelRole::lid};
  InferenceClient client(RoleBackends::all(std::make_shared<MockBackend>(cfg)));
  EXPECT_EQ(client.identify_language("x").failure().reason, "lid_unavailable");
  EXPECT_TRUE(client.translate("x", kTur, kEnglish));
}

}  // namespace
}  // namespace muri
