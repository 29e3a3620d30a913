// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <mutex>
#include <string>

#include "muri/inference.hpp"

namespace muri {

struct RetryPolicy {
  int max_attempts = 3;
  int backoff_ms_base = 200;  // the n-th retry waits base * 2^(n-1) ms
};

struct InferenceEndpointConfig {
  std::string base_url;  // scheme://host:port
  int timeout_ms = 60000;
  int max_in_flight = 8;
  RetryPolicy retry;
  std::string api_key;  // sent as a bearer token when set

  /// Throws std::invalid_argument when an invariant does not hold.
  void validate() const;
};

/// Counting gate bounding concurrent requests.
class InFlightGate {
 public:
  explicit InFlightGate(int limit) : available_(limit) {}
  void acquire();
  void release();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int available_;
};

/// Backend speaking the wire contract to a remote gateway. Transport errors,
/// timeouts, 429 and 5xx replies are retried with exponential backoff; other
/// 4xx replies fail immediately.
class HttpBackend final : public InferenceBackend {
 public:
  explicit HttpBackend(InferenceEndpointConfig config);

  Result<Completion> translate(std::string_view text, const LanguageTag& src,
                               const LanguageTag& tgt, double top_p) override;
  Result<Completion> generate(std::string_view prompt, const DecodeOptions& decode) override;
  Result<LidResult> identify_language(std::string_view text) override;
  Result<ScreenScore> screen(std::string_view text) override;

  /// HTTP attempts issued so far, retries included.
  std::size_t attempts() const { return attempts_.load(); }

 private:
  struct Response {
    bool ok = false;
    std::string body;
    Failure failure;
  };
  Response post(std::string_view path, const std::string& body);

  InferenceEndpointConfig config_;
  InFlightGate gate_;
  std::atomic<std::size_t> attempts_{0};
};

}  // namespace muri
