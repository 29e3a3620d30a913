// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

namespace muri::cli {

/// Exit statuses: 0 success, 1 runtime failure (backend down in strict mode,
/// invalid records), 2 usage or configuration error (including missing
/// inputs).
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kUsage = 2;

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace muri::cli
