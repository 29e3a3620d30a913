// SPDX-License-Identifier: Apache-2.0
#include "muri/reverse_instruction.hpp"

#include <nlohmann/json.hpp>
#include <stdexcept>

#include "muri/jsonl.hpp"
#include "muri/text.hpp"

namespace muri {

namespace {

constexpr std::string_view kIdentityModel = "identity";

void append_block(std::string& out, std::string_view answer, std::string_view instruction,
                  bool query) {
  out.append("Answer: ").append(answer).append("\n> ").append(PromptTemplate::kCue);
  out.append("\nInstruction:");
  if (!query) out.append(" ").append(instruction).append("\n\n");
}

bool is_sentence_end(char32_t cp) {
  switch (cp) {
    case '.': case '!': case '?':
    case 0x3002:  // ideographic full stop
    case 0xFF01: case 0xFF1F:
    case 0x0964:  // devanagari danda
    case 0x061F:  // arabic question mark
    case 0x06D4:  // arabic full stop
      return true;
    default:
      return false;
  }
}

}  // namespace

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  const auto j = nlohmann::json::parse(read_file(path));
  PromptTemplate t;
  for (const auto& e : j.at("examples")) {
    FewShotExample ex{e.at("answer").get<std::string>(), e.at("instruction").get<std::string>()};
    if (text::trim(ex.answer).empty() || text::trim(ex.instruction).empty())
      throw std::runtime_error(path.string() + ": few-shot example with empty text");
    t.examples.push_back(std::move(ex));
  }
  return t;
}

const PromptTemplate& PromptTemplate::shipped() {
  static const PromptTemplate t = load(default_data_dir() / "few_shot.json");
  return t;
}

std::string_view truncate_at_sentence(std::string_view t, std::size_t max_chars) {
  std::size_t pos = 0, count = 0;
  std::size_t sentence_cut = 0, word_cut = 0, hard_cut = 0;
  bool after_terminator = false;
  while (pos < t.size() && count < max_chars) {
    const std::size_t before = pos;
    const char32_t cp = text::next_codepoint(t, pos);
    ++count;
    if (text::is_space(cp)) {
      if (after_terminator) sentence_cut = before;
      word_cut = before;
    }
    after_terminator = is_sentence_end(cp);
    if (after_terminator) sentence_cut = pos;
    hard_cut = pos;
  }
  if (pos >= t.size() && count <= max_chars) return t;
  if (sentence_cut > 0) return t.substr(0, sentence_cut);
  if (word_cut > 0) return t.substr(0, word_cut);
  return t.substr(0, hard_cut);
}

BuiltPrompt build_prompt(std::string_view doc_en, const PromptTemplate& tmpl,
                         std::size_t budget_chars) {
  if (text::trim(doc_en).empty()) throw std::invalid_argument("build_prompt: doc_en is empty");
  std::string prefix;
  for (const auto& ex : tmpl.examples) append_block(prefix, ex.answer, ex.instruction, false);

  std::string shell = prefix;
  append_block(shell, "", "", true);
  const std::size_t fixed = text::codepoint_count(shell);
  if (fixed >= budget_chars)
    throw std::invalid_argument("build_prompt: template alone exceeds the prompt budget");

  BuiltPrompt out;
  std::string_view doc = doc_en;
  if (fixed + text::codepoint_count(doc) > budget_chars) {
    doc = text::trim(truncate_at_sentence(doc_en, budget_chars - fixed));
    if (doc.empty()) doc = text::utf8_prefix(doc_en, budget_chars - fixed);
    out.truncated = true;
  }
  out.text = std::move(prefix);
  append_block(out.text, doc, "", true);
  return out;
}

LanguageCheck check_language_consistency(std::string_view inst_src, const LanguageTag& expected,
                                         double min_conf, const InferenceClient& client) {
  LanguageCheck check;
  auto r = client.identify_language(inst_src);
  if (!r) {
    check.reason = r.failure().reason;
    return check;
  }
  check.detected = r->lang;
  check.confidence = r->confidence;
  check.model_id = r->model_id;
  check.pass = r->lang.code == expected.code && r->confidence >= min_conf;
  if (!check.pass) check.reason = "lid_mismatch";
  return check;
}

InstructionRecord run_muri(const SourceDocument& doc, const InferenceClient& client,
                           const PromptTemplate& tmpl, const MuriConfig& cfg,
                           std::uint64_t rng_seed) {
  InstructionRecord rec;
  rec.id = doc.id;
  rec.lang = doc.lang;
  rec.output = doc.text;
  rec.source = doc.source;
  rec.trace.rng_seed = rng_seed;
  StageTrace& trace = rec.trace;
  const bool english = doc.lang.code == kEnglish.code;

  // Step 2: English projection.
  if (english) {
    trace.doc_en = doc.text;
    trace.pass(Stage::translate_doc, std::string(kIdentityModel));
  } else {
    auto r = client.translate(doc.text, doc.lang, kEnglish, cfg.translate_top_p);
    if (!r) {
      trace.drop(Stage::translate_doc, r.failure().reason);
      return rec;
    }
    trace.doc_en = r->text;
    trace.pass(Stage::translate_doc, r->model_id);
  }

  // Step 3: reverse instruction from the English document only.
  BuiltPrompt prompt = build_prompt(*trace.doc_en, tmpl, cfg.prompt_budget_chars);
  trace.truncated = prompt.truncated;
  auto gen = client.generate(prompt.text, cfg.generate_decode);
  if (!gen) {
    trace.drop(Stage::generate_inst, gen.failure().reason);
    return rec;
  }
  trace.inst_en = std::string(text::trim(gen->text));
  trace.pass(Stage::generate_inst, gen->model_id,
             prompt.truncated ? std::optional<std::string>("doc_truncated") : std::nullopt);

  // Step 4: localization, then the language check.
  if (english) {
    rec.instruction = *trace.inst_en;
    trace.pass(Stage::localize_inst, std::string(kIdentityModel));
  } else {
    auto back = client.translate(*trace.inst_en, kEnglish, doc.lang, cfg.translate_top_p);
    if (!back) {
      trace.drop(Stage::localize_inst, back.failure().reason);
      return rec;
    }
    rec.instruction = std::string(text::trim(back->text));
    trace.pass(Stage::localize_inst, back->model_id);
  }

  const LanguageCheck check =
      check_language_consistency(rec.instruction, doc.lang, cfg.lid_min_confidence, client);
  if (!check.pass) {
    trace.drop(Stage::lid_check, check.reason,
               check.model_id.empty() ? std::nullopt : std::optional(check.model_id));
    return rec;
  }
  trace.pass(Stage::lid_check, check.model_id);
  return rec;
}

}  // namespace muri
