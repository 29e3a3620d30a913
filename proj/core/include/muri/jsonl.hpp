// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "muri/record.hpp"

namespace muri {

/// Malformed JSONL input. line is 1-based.
class JsonlError : public std::runtime_error {
 public:
  JsonlError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Input bytes are not valid UTF-8. Always fatal.
class Utf8Error : public JsonlError {
 public:
  using JsonlError::JsonlError;
};

struct SerializeOptions {
  /// Omit the trace object for compact release files.
  bool strip_trace = false;
};

/// One JSON object, no trailing newline. Key order is fixed:
/// id, lang, instruction, output, source, trace, split.
std::string serialize_record(const InstructionRecord& rec, SerializeOptions opts = {});
InstructionRecord parse_record(std::string_view line, std::size_t line_no = 1);

std::string serialize_jsonl(std::span<const InstructionRecord> recs, SerializeOptions opts = {});
std::vector<InstructionRecord> parse_jsonl(std::string_view bytes);

void write_jsonl(std::ostream& out, std::span<const InstructionRecord> recs,
                 SerializeOptions opts = {});

/// Reads a record file; throws std::runtime_error naming the path if unreadable.
std::vector<InstructionRecord> read_records(const std::filesystem::path& path);

std::string serialize_document(const SourceDocument& doc);
SourceDocument parse_document(std::string_view line, std::size_t line_no = 1);

/// Calls fn(line, line_no) for each line of a file without loading it whole.
/// A final line without a newline is still delivered. Lines are checked for
/// valid UTF-8 before delivery (Utf8Error otherwise).
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::string_view, std::size_t)>& fn);

/// Writes content to a sibling temp file and renames it over path, so a
/// crash never leaves a partially written file under the final name.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

}  // namespace muri
