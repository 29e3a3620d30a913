// SPDX-License-Identifier: Apache-2.0
#include "muri/http_backend.hpp"

#include <chrono>
#include <stdexcept>
#include <thread>

#include "httplib.h"
#include "muri/wire.hpp"

namespace muri {

void InferenceEndpointConfig::validate() const {
  if (base_url.empty()) throw std::invalid_argument("endpoint: base_url is empty");
  if (timeout_ms <= 0) throw std::invalid_argument("endpoint: timeout_ms must be positive");
  if (max_in_flight < 1) throw std::invalid_argument("endpoint: max_in_flight must be >= 1");
  if (retry.max_attempts < 1) throw std::invalid_argument("endpoint: max_attempts must be >= 1");
  if (retry.backoff_ms_base < 0) throw std::invalid_argument("endpoint: backoff must be >= 0");
}

void InFlightGate::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return available_ > 0; });
  --available_;
}

void InFlightGate::release() {
  {
    std::lock_guard lock(mu_);
    ++available_;
  }
  cv_.notify_one();
}

HttpBackend::HttpBackend(InferenceEndpointConfig config)
    : config_((config.validate(), std::move(config))), gate_(config_.max_in_flight) {}

HttpBackend::Response HttpBackend::post(std::string_view path, const std::string& body) {
  gate_.acquire();
  struct Release {
    InFlightGate& g;
    ~Release() { g.release(); }
  } release{gate_};

  Response last;
  for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
    if (attempt > 1 && config_.retry.backoff_ms_base > 0) {
      const long long wait = static_cast<long long>(config_.retry.backoff_ms_base)
                             << std::min(attempt - 2, 16);
      std::this_thread::sleep_for(std::chrono::milliseconds(wait));
    }
    ++attempts_;
    httplib::Client client(config_.base_url);
    const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
    auto res = client.Post(std::string(path), headers, body, "application/json");
    if (!res) {
      last = {false, {}, {"unavailable", httplib::to_string(res.error())}};
      continue;
    }
    if (res->status >= 200 && res->status < 300) return {true, std::move(res->body), {}};
    const std::string code = wire::error_code(res->body);
    last = {false, {}, {code, "HTTP " + std::to_string(res->status)}};
    const bool retryable = res->status == 429 || res->status >= 500;
    if (!retryable) break;
  }
  return last;
}

Result<Completion> HttpBackend::translate(std::string_view text, const LanguageTag& src,
                                          const LanguageTag& tgt, double top_p) {
  auto r = post(wire::endpoint_path(ModelRole::translate),
                wire::translate_request(text, src, tgt, top_p));
  if (!r.ok) return r.failure;
  return wire::parse_completion(r.body);
}

Result<Completion> HttpBackend::generate(std::string_view prompt, const DecodeOptions& decode) {
  auto r = post(wire::endpoint_path(ModelRole::generate), wire::generate_request(prompt, decode));
  if (!r.ok) return r.failure;
  return wire::parse_completion(r.body);
}

Result<LidResult> HttpBackend::identify_language(std::string_view text) {
  auto r = post(wire::endpoint_path(ModelRole::lid), wire::lid_request(text));
  if (!r.ok) return r.failure;
  return wire::parse_lid(r.body);
}

Result<ScreenScore> HttpBackend::screen(std::string_view text) {
  auto r = post(wire::endpoint_path(ModelRole::screen), wire::screen_request(text));
  if (!r.ok) return r.failure;
  return wire::parse_screen(r.body);
}

}  // namespace muri
