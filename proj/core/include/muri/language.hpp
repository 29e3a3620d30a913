// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace muri {

/// Combined `code_Script` language tag, e.g. `tur_Latn`.
///
/// A tag may hold a malformed value (it is what deserialization produced);
/// `well_formed()` and the registry decide whether it is acceptable.
struct LanguageTag {
  std::string code;
  std::string script;

  /// Strict parse; nullopt unless the text matches `^[a-z]{3}_[A-Z][a-z]{3}$`.
  static std::optional<LanguageTag> parse(std::string_view text);

  /// Splits on the first '_' without checking anything.
  static LanguageTag unchecked(std::string_view text);

  bool well_formed() const;
  std::string str() const;

  friend auto operator<=>(const LanguageTag&, const LanguageTag&) = default;
  friend bool operator==(const LanguageTag&, const LanguageTag&) = default;
};

/// English pivot language for translation and generation.
inline const LanguageTag kEnglish{"eng", "Latn"};

/// Registry of accepted tags, loaded from a TSV data file.
class LanguageRegistry {
 public:
  struct Entry {
    LanguageTag tag;
    std::string iso639_1;  // empty when the language has none
    std::string name;
  };

  LanguageRegistry() = default;

  /// Throws std::runtime_error naming the path and line on malformed input.
  static LanguageRegistry load(const std::filesystem::path& path);
  static LanguageRegistry parse(std::string_view tsv, std::string_view origin = "<memory>");

  bool contains(const LanguageTag& tag) const { return index_.count(tag.str()) != 0; }

  /// First registered tag carrying this 3-letter code.
  std::optional<LanguageTag> by_code(std::string_view code) const;

  /// Resolves a combined tag, a 3-letter code, an ISO 639-1 code or an
  /// English name (case-insensitive). Used by adapters whose inputs carry
  /// heterogeneous language metadata.
  std::optional<LanguageTag> resolve(std::string_view alias) const;

  const Entry* find(const LanguageTag& tag) const;
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;    // tag -> entry
  std::map<std::string, std::size_t, std::less<>> aliases_;  // lowercased alias -> entry
};

/// Directory holding the shipped data files. Resolution order: the
/// MURI_DATA_DIR environment variable, the source tree, the install prefix.
std::filesystem::path default_data_dir();

/// Registry loaded once from default_data_dir().
const LanguageRegistry& default_registry();

}  // namespace muri
