// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace muri::text {

bool is_valid_utf8(std::string_view bytes) noexcept;

/// Decodes one code point starting at bytes[pos] and advances pos.
/// Invalid sequences decode as U+FFFD consuming a single byte.
char32_t next_codepoint(std::string_view bytes, std::size_t& pos) noexcept;

std::size_t codepoint_count(std::string_view bytes) noexcept;

bool is_space(char32_t cp) noexcept;

/// Letter test good enough for ratio heuristics: ASCII letters plus any
/// non-ASCII code point outside the common digit, punctuation, symbol and
/// control blocks.
bool is_alpha(char32_t cp) noexcept;

std::string_view trim(std::string_view s) noexcept;

/// ASCII-only lowercase; other bytes pass through untouched.
std::string to_lower_ascii(std::string_view s);

/// Lowercases ASCII, collapses whitespace runs to one space, trims.
std::string normalize_for_shingles(std::string_view s);

std::vector<std::string_view> split_lines(std::string_view s);

/// Longest prefix of at most max_bytes that ends on a code point boundary.
std::string_view utf8_prefix(std::string_view s, std::size_t max_bytes) noexcept;

void append_utf8(std::string& out, char32_t cp);

}  // namespace muri::text
