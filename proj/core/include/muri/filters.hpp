// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "muri/inference.hpp"

namespace muri {

struct FilterConfig {
  std::vector<std::string> keyword_blocklist{"summarize", "translate"};
  double screen_threshold = 0.5;
  /// Strict: an unreachable screen drops the record. Permissive: the record
  /// passes with a screen_unavailable note.
  bool strict_screen = true;
  bool noise_report = true;
  /// Report-only unless set.
  std::optional<double> noise_drop_threshold;

  /// Throws std::invalid_argument on empty or non-lowercase blocklist
  /// entries or a threshold outside [0,1].
  void validate() const;
};

struct FilterVerdict {
  bool pass = true;
  std::string reason;  // drop code or pass note
  std::string matched;  // keyword_filter: the blocklist entry whose form matched
  std::string matched_word;  // keyword_filter: the word as it appears
  double score = 0.0;  // content_screen
  std::string model_id;

  explicit operator bool() const { return pass; }
};

/// Accepted word forms for a blocklist entry. summarize and translate use
/// a fixed inflection list; other entries get regular verb inflections.
std::vector<std::string> keyword_forms(std::string_view stem);

/// Lowercased words of text; a word is a maximal run of ASCII letters,
/// digits or non-ASCII bytes.
std::vector<std::string_view> words_of(std::string_view lowered);

/// Drops iff a word of lowercase(inst_en) equals a form of a blocklist entry.
/// Drop reason "blocked_keyword".
FilterVerdict keyword_filter(std::string_view inst_en, const FilterConfig& cfg);

/// Screens inst_en + "\n" + doc_en. Drop reason "screen_flagged" when the
/// score reaches the threshold, "screen_unavailable" in strict mode when the
/// classifier cannot be reached.
FilterVerdict content_screen(std::string_view inst_en, std::string_view doc_en,
                             const FilterConfig& cfg, const InferenceClient& client);

/// Score in [0,1] for boilerplate-like structure: URL density, navigation
/// runs (short items between separators like '|') and copyright notices,
/// combined as 1 - Π(1 - component).
double structural_noise_score(std::string_view text);

}  // namespace muri
