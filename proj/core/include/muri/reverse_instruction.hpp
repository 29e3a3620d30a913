// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "muri/inference.hpp"
#include "muri/record.hpp"

namespace muri {

struct FewShotExample {
  std::string answer;
  std::string instruction;
};

/// Few-shot scaffold for reverse-instruction generation. Each example and
/// the query slot render as
///
///   Answer: <text>
///   > What kind of instruction could this be the answer to?
///   Instruction: <instruction>
///
/// with blocks separated by a blank line; the query block ends at
/// "Instruction:".
struct PromptTemplate {
  static constexpr std::string_view kCue = "What kind of instruction could this be the answer to?";

  std::vector<FewShotExample> examples;

  /// Loads {"examples":[{"answer","instruction"}, ...]}.
  static PromptTemplate load(const std::filesystem::path& path);
  /// The shipped four-example bank.
  static const PromptTemplate& shipped();
};

struct BuiltPrompt {
  std::string text;
  bool truncated = false;
};

/// Byte-deterministic. When the prompt would exceed budget_chars code
/// points, doc_en is cut back to the last sentence boundary that fits.
BuiltPrompt build_prompt(std::string_view doc_en, const PromptTemplate& tmpl,
                         std::size_t budget_chars = 8000);

/// Longest prefix of at most max_chars code points ending at a sentence
/// boundary, falling back to a word boundary, then to a hard cut.
std::string_view truncate_at_sentence(std::string_view text, std::size_t max_chars);

struct LanguageCheck {
  bool pass = false;
  std::string reason;  // lid_mismatch or lid_unavailable when !pass
  LanguageTag detected;
  double confidence = 0.0;
  std::string model_id;
};

/// Passes iff the detected language code equals expected.code and the
/// confidence is at least min_conf. Scripts are not compared.
LanguageCheck check_language_consistency(std::string_view inst_src, const LanguageTag& expected,
                                         double min_conf, const InferenceClient& client);

struct MuriConfig {
  double lid_min_confidence = 0.5;
  std::size_t prompt_budget_chars = 8000;
  double translate_top_p = 1.0;
  DecodeOptions generate_decode{};  // greedy
};

/// Steps 2-4 for one document: English projection, reverse instruction,
/// localization and language check.
///
/// Always returns a record. On success the trace holds four passing stages
/// and output is doc.text byte for byte. On failure the trace ends in a drop
/// naming the failing stage and the instruction may be empty. English
/// documents skip both translations (recorded as identity passes).
InstructionRecord run_muri(const SourceDocument& doc, const InferenceClient& client,
                           const PromptTemplate& tmpl, const MuriConfig& cfg = {},
                           std::uint64_t rng_seed = 0);

}  // namespace muri
