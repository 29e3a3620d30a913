// SPDX-License-Identifier: Apache-2.0
#include "muri/inference.hpp"

#include <stdexcept>

#include "muri/text.hpp"

namespace muri {

namespace {

constexpr std::string_view kArrow = "\xE2\x86\x92";  // U+2192
constexpr std::string_view kTagOpen = "[MT:";
constexpr std::string_view kAnswerMarker = "ANSWER:";
constexpr std::string_view kQuerySlot = "Answer: ";
constexpr std::string_view kCuePrefix = "\n> What kind of instruction";
constexpr std::size_t kMockWords = 6;

bool contains(std::string_view haystack, std::string_view needle) {
  return !needle.empty() && haystack.find(needle) != std::string_view::npos;
}

// Removes leading "[MT:...] " tags.
std::string_view strip_mt_tags(std::string_view s) {
  s = text::trim(s);
  while (s.starts_with(kTagOpen)) {
    const auto close = s.find(']');
    if (close == std::string_view::npos) break;
    s = text::trim(s.substr(close + 1));
  }
  return s;
}

// Target code of the first well-formed MT tag, if any.
std::optional<std::string> first_tag_target(std::string_view s) {
  std::size_t pos = 0;
  while ((pos = s.find(kTagOpen, pos)) != std::string_view::npos) {
    const auto close = s.find(']', pos);
    if (close == std::string_view::npos) return std::nullopt;
    std::string_view inner = s.substr(pos + kTagOpen.size(), close - pos - kTagOpen.size());
    const auto arrow = inner.find(kArrow);
    if (arrow != std::string_view::npos) {
      std::string_view tgt = inner.substr(arrow + kArrow.size());
      if (!tgt.empty()) return std::string(tgt);
    }
    pos = close;
  }
  return std::nullopt;
}

std::string first_words(std::string_view s, std::size_t n) {
  std::string out;
  std::size_t words = 0, pos = 0;
  while (pos < s.size() && words < n) {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\n' || s[pos] == '\t' || s[pos] == '\r'))
      ++pos;
    const std::size_t start = pos;
    while (pos < s.size() && s[pos] != ' ' && s[pos] != '\n' && s[pos] != '\t' && s[pos] != '\r')
      ++pos;
    if (pos > start) {
      if (!out.empty()) out.push_back(' ');
      out.append(s.substr(start, pos - start));
      ++words;
    }
  }
  return out;
}

Failure backend_failure(const Failure& f, std::string_view role_reason) {
  return {std::string(role_reason), f.reason + (f.detail.empty() ? "" : ": " + f.detail)};
}

void require_text(std::string_view t, const char* what) {
  if (text::trim(t).empty()) throw std::invalid_argument(std::string(what) + " must be nonempty");
}

}  // namespace

ScreenVerdict make_verdict(double score, double threshold, std::string model_id) {
  ScreenVerdict v;
  v.score = score;
  v.label = score >= threshold ? ScreenVerdict::Label::flagged : ScreenVerdict::Label::acceptable;
  v.model_id = std::move(model_id);
  return v;
}

std::string_view to_string(ModelRole r) {
  switch (r) {
    case ModelRole::translate: return "translate";
    case ModelRole::generate: return "generate";
    case ModelRole::lid: return "lid";
    case ModelRole::screen: return "screen";
  }
  return "unknown";
}

std::optional<ModelRole> parse_model_role(std::string_view name) {
  for (ModelRole r : {ModelRole::translate, ModelRole::generate, ModelRole::lid, ModelRole::screen})
    if (to_string(r) == name) return r;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// MockBackend

MockBackend::MockBackend(MockConfig config, const LanguageRegistry* registry)
    : config_(std::move(config)), registry_(registry) {}

Result<Completion> MockBackend::translate(std::string_view t, const LanguageTag& src,
                                          const LanguageTag& tgt, double) {
  if (config_.down_roles.count(ModelRole::translate))
    return Failure{"unavailable", "translate role down"};
  if (contains(t, config_.mt_fail_token)) return Failure{"unavailable", "injected MT failure"};
  if (contains(t, config_.mt_empty_token)) return Completion{"", std::string(kTranslateModel)};
  const std::string& out_code = contains(t, config_.lid_fault_token) ? src.code : tgt.code;
  std::string out;
  out.reserve(t.size() + 20);
  out.append(kTagOpen).append(src.code).append(kArrow).append(out_code).append("] ").append(t);
  return Completion{std::move(out), std::string(kTranslateModel)};
}

Result<Completion> MockBackend::generate(std::string_view prompt, const DecodeOptions&) {
  if (config_.down_roles.count(ModelRole::generate))
    return Failure{"unavailable", "generate role down"};
  if (text::codepoint_count(prompt) > config_.max_prompt_chars)
    return Failure{"too_long", "prompt exceeds mock limit"};
  if (contains(prompt, config_.generate_fail_token))
    return Failure{"unavailable", "injected generation failure"};

  std::string subject;
  if (auto m = prompt.rfind(kAnswerMarker); m != std::string_view::npos) {
    std::string_view rest = prompt.substr(m + kAnswerMarker.size());
    std::size_t end = 0;
    while (end < rest.size() && rest[end] != ' ' && rest[end] != '\n' && rest[end] != '\t' &&
           rest[end] != '\r')
      ++end;
    subject = std::string(rest.substr(0, end));
  } else {
    std::string_view doc = prompt;
    if (auto q = prompt.rfind(kQuerySlot); q != std::string_view::npos) {
      doc = prompt.substr(q + kQuerySlot.size());
      if (auto cue = doc.find(kCuePrefix); cue != std::string_view::npos) doc = doc.substr(0, cue);
    }
    subject = first_words(strip_mt_tags(doc), kMockWords);
  }
  if (subject.empty()) subject = "it";
  return Completion{"What is " + subject + "?", std::string(kGenerateModel)};
}

Result<LidResult> MockBackend::identify_language(std::string_view t) {
  if (config_.down_roles.count(ModelRole::lid)) return Failure{"unavailable", "lid role down"};
  if (auto code = first_tag_target(t)) {
    LanguageTag tag{*code, "Zzzz"};
    if (registry_)
      if (auto known = registry_->by_code(*code)) tag = *known;
    return LidResult{tag, 1.0, std::string(kLidModel)};
  }
  return LidResult{kEnglish, 0.5, std::string(kLidModel)};
}

Result<ScreenScore> MockBackend::screen(std::string_view t) {
  if (config_.down_roles.count(ModelRole::screen))
    return Failure{"unavailable", "screen role down"};
  return ScreenScore{contains(t, config_.screen_trigger) ? 0.99 : 0.01,
                     std::string(kScreenModel)};
}

// ---------------------------------------------------------------------------
// Segmentation

std::vector<std::pair<std::string, std::string>> segment_for_translation(std::string_view t,
                                                                         std::size_t max_chars) {
  if (max_chars == 0) throw std::invalid_argument("max_chars must be positive");
  // Paragraph pieces with the newline run that follows each.
  std::vector<std::pair<std::string_view, std::string_view>> pieces;
  std::size_t pos = 0;
  while (pos < t.size()) {
    std::size_t nl = t.find('\n', pos);
    if (nl == std::string_view::npos) {
      pieces.emplace_back(t.substr(pos), std::string_view{});
      break;
    }
    std::size_t sep_end = nl;
    while (sep_end < t.size() && (t[sep_end] == '\n' || t[sep_end] == '\r')) ++sep_end;
    pieces.emplace_back(t.substr(pos, nl - pos), t.substr(nl, sep_end - nl));
    pos = sep_end;
  }

  // Over-long paragraphs are cut at the last space before the limit.
  std::vector<std::pair<std::string_view, std::string_view>> units;
  for (auto [body, sep] : pieces) {
    while (text::codepoint_count(body) > max_chars) {
      std::size_t cut = 0, count = 0, p = 0, last_space = std::string_view::npos;
      while (p < body.size() && count < max_chars) {
        const std::size_t before = p;
        const char32_t cp = text::next_codepoint(body, p);
        if (cp == ' ' && before > 0) last_space = before;
        ++count;
        cut = p;
      }
      if (last_space != std::string_view::npos) {
        units.emplace_back(body.substr(0, last_space), body.substr(last_space, 1));
        body = body.substr(last_space + 1);
      } else {
        units.emplace_back(body.substr(0, cut), std::string_view{});
        body = body.substr(cut);
      }
    }
    units.emplace_back(body, sep);
  }

  std::vector<std::pair<std::string, std::string>> out;
  std::string current;
  std::string_view current_sep;
  std::size_t current_chars = 0;
  bool open = false;
  for (auto [body, sep] : units) {
    const std::size_t n = text::codepoint_count(body);
    if (open && current_chars + text::codepoint_count(current_sep) + n <= max_chars) {
      current.append(current_sep).append(body);
      current_chars += text::codepoint_count(current_sep) + n;
      current_sep = sep;
      continue;
    }
    if (open) out.emplace_back(std::move(current), std::string(current_sep));
    current.assign(body);
    current_chars = n;
    current_sep = sep;
    open = true;
  }
  if (open) out.emplace_back(std::move(current), std::string(current_sep));
  return out;
}

// ---------------------------------------------------------------------------
// InferenceClient

InferenceClient::InferenceClient(RoleBackends backends, ClientLimits limits)
    : backends_(std::move(backends)), limits_(limits) {
  if (!backends_.translate || !backends_.generate || !backends_.lid || !backends_.screen)
    throw std::invalid_argument("InferenceClient: every model role needs a backend");
}

Result<Completion> InferenceClient::translate(std::string_view t, const LanguageTag& src,
                                              const LanguageTag& tgt, double top_p) const {
  require_text(t, "translate: text");
  if (src == tgt) throw std::invalid_argument("translate: src and tgt must differ");

  std::string joined;
  std::string model_id;
  for (const auto& [segment, sep] : segment_for_translation(t, limits_.max_segment_chars)) {
    if (text::trim(segment).empty()) {
      joined.append(segment).append(sep);
      continue;
    }
    auto r = backends_.translate->translate(segment, src, tgt, top_p);
    if (!r) return backend_failure(r.failure(), "mt_unavailable");
    if (text::trim(r->text).empty()) return Failure{"empty_translation", "backend returned no text"};
    joined.append(r->text).append(sep);
    model_id = r->model_id;
  }
  return Completion{std::move(joined), std::move(model_id)};
}

Result<Completion> InferenceClient::generate(std::string_view prompt,
                                             const DecodeOptions& decode) const {
  require_text(prompt, "generate: prompt");
  if (text::codepoint_count(prompt) > limits_.max_prompt_chars)
    return Failure{"prompt_too_long", "prompt exceeds client limit"};
  auto r = backends_.generate->generate(prompt, decode);
  if (!r) {
    if (r.failure().reason == "too_long") return backend_failure(r.failure(), "prompt_too_long");
    return backend_failure(r.failure(), "generation_failed");
  }
  if (text::trim(r->text).empty()) return Failure{"generation_failed", "empty completion"};
  return r;
}

Result<LidResult> InferenceClient::identify_language(std::string_view t) const {
  require_text(t, "identify_language: text");
  auto r = backends_.lid->identify_language(t);
  if (!r) return backend_failure(r.failure(), "lid_unavailable");
  return r;
}

Result<ScreenVerdict> InferenceClient::screen(std::string_view t) const {
  require_text(t, "screen: text");
  auto r = backends_.screen->screen(t);
  if (!r) return backend_failure(r.failure(), "screen_unavailable");
  return make_verdict(r->score, limits_.screen_threshold, r->model_id);
}

}  // namespace muri
