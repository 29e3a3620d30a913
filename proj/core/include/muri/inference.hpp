// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

#include "muri/language.hpp"

namespace muri {

/// A per-call failure that degrades to a record drop. reason is one of the
/// drop-reason codes (mt_unavailable, empty_translation, ...) or, at the
/// backend layer, a transport code (unavailable, too_long, bad_request).
struct Failure {
  std::string reason;
  std::string detail;
};

template <typename T>
class Result {
 public:
  Result(T value) : v_(std::move(value)) {}
  Result(Failure f) : v_(std::move(f)) {}

  bool ok() const { return std::holds_alternative<T>(v_); }
  explicit operator bool() const { return ok(); }
  const T& value() const { return std::get<T>(v_); }
  T& value() { return std::get<T>(v_); }
  const T* operator->() const { return &value(); }
  const Failure& failure() const { return std::get<Failure>(v_); }

 private:
  std::variant<T, Failure> v_;
};

enum class DecodeMode { greedy, top_p };

struct DecodeOptions {
  DecodeMode mode = DecodeMode::greedy;
  double top_p = 1.0;
};

struct Completion {
  std::string text;
  std::string model_id;
};

struct LidResult {
  LanguageTag lang;
  double confidence = 0.0;
  std::string model_id;
};

struct ScreenScore {
  double score = 0.0;
  std::string model_id;
};

struct ScreenVerdict {
  enum class Label { acceptable, flagged };
  Label label = Label::acceptable;
  double score = 0.0;
  std::string model_id;

  bool flagged() const { return label == Label::flagged; }
};

/// Flagged iff score >= threshold.
ScreenVerdict make_verdict(double score, double threshold, std::string model_id = {});

enum class ModelRole { translate, generate, lid, screen };
std::string_view to_string(ModelRole r);
std::optional<ModelRole> parse_model_role(std::string_view name);

/// Raw model calls for the four roles. Implementations must be safe to call
/// from several threads at once.
class InferenceBackend {
 public:
  virtual ~InferenceBackend() = default;

  virtual Result<Completion> translate(std::string_view text, const LanguageTag& src,
                                       const LanguageTag& tgt, double top_p) = 0;
  virtual Result<Completion> generate(std::string_view prompt, const DecodeOptions& decode) = 0;
  virtual Result<LidResult> identify_language(std::string_view text) = 0;
  virtual Result<ScreenScore> screen(std::string_view text) = 0;
};

struct MockConfig {
  std::uint64_t seed = 0;
  std::string screen_trigger = "TRIGGER_HATE";
  /// Text containing this token is "translated" into its own source
  /// language, so a downstream language check sees a mismatch.
  std::string lid_fault_token = "LID_FAULT";
  std::string mt_fail_token = "MT_FAIL";
  std::string mt_empty_token = "MT_EMPTY";
  std::string generate_fail_token = "GEN_FAIL";
  std::size_t max_prompt_chars = 32000;
  /// Roles that fail every call, simulating a backend that is down.
  std::set<ModelRole> down_roles;
};

/// Deterministic in-process backend. Every call is a pure function of its
/// inputs and the config.
///
///   translate(t, src, tgt)  -> "[MT:src→tgt] " + t   (3-letter codes)
///   generate(p)             -> "What is x?"  where x follows the last
///                              "ANSWER:" marker in p, or else the first
///                              words of the prompt's query document
///   identify_language(t)    -> (target of the first MT tag, 1.0), or
///                              (eng_Latn, 0.5) for untagged text
///   screen(t)               -> 0.99 if t contains the trigger, else 0.01
class MockBackend final : public InferenceBackend {
 public:
  static constexpr std::string_view kTranslateModel = "mock-translate";
  static constexpr std::string_view kGenerateModel = "mock-generate";
  static constexpr std::string_view kLidModel = "mock-lid";
  static constexpr std::string_view kScreenModel = "mock-screen";

  explicit MockBackend(MockConfig config = {},
                       const LanguageRegistry* registry = &default_registry());

  Result<Completion> translate(std::string_view text, const LanguageTag& src,
                               const LanguageTag& tgt, double top_p) override;
  Result<Completion> generate(std::string_view prompt, const DecodeOptions& decode) override;
  Result<LidResult> identify_language(std::string_view text) override;
  Result<ScreenScore> screen(std::string_view text) override;

  const MockConfig& config() const { return config_; }

 private:
  MockConfig config_;
  const LanguageRegistry* registry_;
};

struct ClientLimits {
  std::size_t max_prompt_chars = 16000;
  std::size_t max_segment_chars = 4000;
  double screen_threshold = 0.5;
};

/// One backend per model role; the same object may serve several roles.
struct RoleBackends {
  std::shared_ptr<InferenceBackend> translate;
  std::shared_ptr<InferenceBackend> generate;
  std::shared_ptr<InferenceBackend> lid;
  std::shared_ptr<InferenceBackend> screen;

  static RoleBackends all(std::shared_ptr<InferenceBackend> backend) {
    return {backend, backend, backend, backend};
  }
};

/// Pipeline-facing façade. Checks preconditions (std::invalid_argument),
/// segments long texts for translation and maps backend failures to drop
/// reasons:
///   translate: mt_unavailable, empty_translation
///   generate:  generation_failed, prompt_too_long
///   lid:       lid_unavailable
///   screen:    screen_unavailable
class InferenceClient {
 public:
  InferenceClient(RoleBackends backends, ClientLimits limits = {});

  Result<Completion> translate(std::string_view text, const LanguageTag& src,
                               const LanguageTag& tgt, double top_p = 1.0) const;
  Result<Completion> generate(std::string_view prompt, const DecodeOptions& decode = {}) const;
  Result<LidResult> identify_language(std::string_view text) const;
  Result<ScreenVerdict> screen(std::string_view text) const;

  const ClientLimits& limits() const { return limits_; }

 private:
  RoleBackends backends_;
  ClientLimits limits_;
};

/// Splits text at newline boundaries into segments of at most max_chars code
/// points. Each segment is paired with the separator that followed it, so
/// concatenating segment + separator over all pieces reproduces the input.
std::vector<std::pair<std::string, std::string>> segment_for_translation(std::string_view text,
                                                                         std::size_t max_chars);

}  // namespace muri
