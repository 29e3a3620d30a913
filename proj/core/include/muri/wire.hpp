// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

#include "muri/inference.hpp"

/// HTTP+JSON contract shared by every model role.
///
///   POST /v1/translate {"text","src","tgt","top_p"}      -> {"text","model"}
///   POST /v1/generate  {"prompt","mode","top_p"}         -> {"text","model"}
///   POST /v1/lid       {"text"}                          -> {"lang","confidence","model"}
///   POST /v1/screen    {"text"}                          -> {"label","score","model"}
///
/// Errors carry a non-2xx status and {"code","message"}; codes are
/// bad_request (400), too_long (413), unavailable (503), internal (500).
namespace muri::wire {

std::string_view endpoint_path(ModelRole role);

std::string translate_request(std::string_view text, const LanguageTag& src,
                              const LanguageTag& tgt, double top_p);
std::string generate_request(std::string_view prompt, const DecodeOptions& decode);
std::string lid_request(std::string_view text);
std::string screen_request(std::string_view text);

/// Response decoding; a body that does not follow the contract yields
/// Failure{"bad_response"}.
Result<Completion> parse_completion(std::string_view body);
Result<LidResult> parse_lid(std::string_view body);
Result<ScreenScore> parse_screen(std::string_view body);

std::string error_body(std::string_view code, std::string_view message);

/// Transport failure code carried by an error body; "unavailable" if the
/// body is not a contract error.
std::string error_code(std::string_view body);

struct Reply {
  int status = 200;
  std::string body;
};

/// Server side of the contract over an in-process backend. This is what a
/// mock-mode gateway must reproduce byte for byte.
Reply handle(InferenceBackend& backend, ModelRole role, std::string_view body,
             double screen_threshold = 0.5);

}  // namespace muri::wire
