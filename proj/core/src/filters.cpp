// SPDX-License-Identifier: Apache-2.0
#include "muri/filters.hpp"

#include <algorithm>
#include <stdexcept>

#include "muri/text.hpp"

namespace muri {

void FilterConfig::validate() const {
  for (const auto& w : keyword_blocklist) {
    if (w.empty()) throw std::invalid_argument("filters: empty blocklist entry");
    if (text::to_lower_ascii(w) != w)
      throw std::invalid_argument("filters: blocklist entry '" + w + "' is not lowercase");
  }
  if (screen_threshold < 0.0 || screen_threshold > 1.0)
    throw std::invalid_argument("filters: screen_threshold outside [0,1]");
}

std::vector<std::string> keyword_forms(std::string_view stem) {
  const std::string s(stem);
  if (s == "summarize")
    return {"summarize", "summarizes", "summarized", "summarizing", "summarization"};
  if (s == "translate")
    return {"translate", "translates", "translated", "translating", "translation",
            "translations"};
  std::vector<std::string> forms{s, s + "s"};
  if (!s.empty() && s.back() == 'e') {
    forms.push_back(s + "d");
    forms.push_back(s.substr(0, s.size() - 1) + "ing");
  } else {
    forms.push_back(s + "es");
    forms.push_back(s + "ed");
    forms.push_back(s + "ing");
  }
  return forms;
}

std::vector<std::string_view> words_of(std::string_view lowered) {
  std::vector<std::string_view> words;
  auto is_word = [](unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
  };
  std::size_t i = 0;
  while (i < lowered.size()) {
    while (i < lowered.size() && !is_word(static_cast<unsigned char>(lowered[i]))) ++i;
    const std::size_t start = i;
    while (i < lowered.size() && is_word(static_cast<unsigned char>(lowered[i]))) ++i;
    if (i > start) words.push_back(lowered.substr(start, i - start));
  }
  return words;
}

FilterVerdict keyword_filter(std::string_view inst_en, const FilterConfig& cfg) {
  if (text::trim(inst_en).empty())
    throw std::invalid_argument("keyword_filter: instruction is empty");
  const std::string lowered = text::to_lower_ascii(inst_en);
  const auto words = words_of(lowered);
  for (const auto& stem : cfg.keyword_blocklist) {
    const auto forms = keyword_forms(stem);
    for (std::string_view w : words) {
      if (std::find(forms.begin(), forms.end(), w) != forms.end()) {
        FilterVerdict v;
        v.pass = false;
        v.reason = "blocked_keyword";
        v.matched = stem;
        v.matched_word = std::string(w);
        return v;
      }
    }
  }
  return {};
}

FilterVerdict content_screen(std::string_view inst_en, std::string_view doc_en,
                             const FilterConfig& cfg, const InferenceClient& client) {
  std::string pair;
  pair.reserve(inst_en.size() + doc_en.size() + 1);
  pair.append(inst_en).append("\n").append(doc_en);
  FilterVerdict v;
  auto r = client.screen(pair);
  if (!r) {
    v.pass = !cfg.strict_screen;
    v.reason = "screen_unavailable";
    return v;
  }
  v.score = r->score;
  v.model_id = r->model_id;
  if (r->score >= cfg.screen_threshold) {
    v.pass = false;
    v.reason = "screen_flagged";
  }
  return v;
}

namespace {

bool is_separator_token(std::string_view tok) {
  static constexpr std::string_view kSeps[] = {"|", "||", "/", "-", "\xE2\x80\x93", "\xE2\x80\x94",
                                              "\xC2\xB7", "\xE2\x80\xA2", "\xC2\xBB", "\xC2\xAB",
                                              "\xE2\x80\xBA", ">", "::", "\xE2\x94\x82"};
  return std::find(std::begin(kSeps), std::end(kSeps), tok) != std::end(kSeps);
}

bool is_url_token(std::string_view tok) {
  return tok.starts_with("http://") || tok.starts_with("https://") || tok.starts_with("www.") ||
         tok.find("://") != std::string_view::npos;
}

}  // namespace

double structural_noise_score(std::string_view t) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  auto ws = [](char c) { return c == ' ' || c == '\n' || c == '\t' || c == '\r' || c == '\f'; };
  while (i < t.size()) {
    while (i < t.size() && ws(t[i])) ++i;
    const std::size_t start = i;
    while (i < t.size() && !ws(t[i])) ++i;
    if (i > start) tokens.push_back(t.substr(start, i - start));
  }
  if (tokens.empty()) return 0.0;

  std::size_t words = 0, urls = 0, separators = 0;
  // Navigation runs: consecutive short items (<= 3 words) delimited by separators.
  std::size_t item_words = 0, run = 0, longest_run = 0;
  auto close_item = [&] {
    if (item_words == 0) return;
    run = item_words <= 3 ? run + 1 : 0;
    longest_run = std::max(longest_run, run);
    item_words = 0;
  };
  for (std::string_view tok : tokens) {
    if (is_separator_token(tok)) {
      ++separators;
      close_item();
      continue;
    }
    ++words;
    ++item_words;
    if (is_url_token(tok)) ++urls;
  }
  close_item();
  if (separators == 0) longest_run = 0;

  const double url_ratio = words == 0 ? 0.0 : static_cast<double>(urls) / static_cast<double>(words);
  const double url_score = std::min(1.0, url_ratio / 0.5);
  const double nav_score =
      longest_run < 3 ? 0.0 : std::min(1.0, static_cast<double>(longest_run - 2) / 8.0);

  const std::string lowered = text::to_lower_ascii(t);
  const bool copyright = t.find("\xC2\xA9") != std::string_view::npos ||
                         lowered.find("(c)") != std::string::npos ||
                         lowered.find("copyright") != std::string::npos ||
                         lowered.find("all rights reserved") != std::string::npos;
  const double copyright_score = copyright ? 0.5 : 0.0;

  return 1.0 - (1.0 - url_score) * (1.0 - nav_score) * (1.0 - copyright_score);
}

}  // namespace muri
