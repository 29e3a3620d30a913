// SPDX-License-Identifier: Apache-2.0
#include "muri/language.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "muri/text.hpp"

namespace muri {

namespace {

bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string_view::npos ? line.npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

}  // namespace

bool LanguageTag::well_formed() const {
  return code.size() == 3 && is_lower(code[0]) && is_lower(code[1]) && is_lower(code[2]) &&
         script.size() == 4 && is_upper(script[0]) && is_lower(script[1]) && is_lower(script[2]) &&
         is_lower(script[3]);
}

std::optional<LanguageTag> LanguageTag::parse(std::string_view text) {
  LanguageTag tag = unchecked(text);
  if (!tag.well_formed() || text.size() != 8) return std::nullopt;
  return tag;
}

LanguageTag LanguageTag::unchecked(std::string_view text) {
  const auto sep = text.find('_');
  if (sep == std::string_view::npos) return {std::string(text), {}};
  return {std::string(text.substr(0, sep)), std::string(text.substr(sep + 1))};
}

std::string LanguageTag::str() const {
  if (script.empty()) return code;
  return code + "_" + script;
}

LanguageRegistry LanguageRegistry::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read language registry: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

LanguageRegistry LanguageRegistry::parse(std::string_view tsv, std::string_view origin) {
  LanguageRegistry reg;
  std::size_t line_no = 0;
  bool header_seen = false;
  for (std::string_view line : text::split_lines(tsv)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    auto cols = split_tabs(line);
    if (!header_seen) {
      header_seen = true;
      if (cols.size() >= 1 && cols[0] == "tag") continue;
    }
    if (cols.size() != 3)
      throw std::runtime_error(std::string(origin) + ":" + std::to_string(line_no) +
                               ": expected 3 tab-separated columns");
    auto tag = LanguageTag::parse(cols[0]);
    if (!tag)
      throw std::runtime_error(std::string(origin) + ":" + std::to_string(line_no) +
                               ": malformed tag '" + std::string(cols[0]) + "'");
    const std::string key = tag->str();
    if (reg.index_.count(key))
      throw std::runtime_error(std::string(origin) + ":" + std::to_string(line_no) +
                               ": duplicate tag " + key);
    Entry e{*tag, cols[1] == "-" ? std::string() : std::string(cols[1]), std::string(cols[2])};
    const std::size_t idx = reg.entries_.size();
    reg.index_.emplace(key, idx);
    for (const std::string& alias :
         {text::to_lower_ascii(key), e.tag.code, text::to_lower_ascii(e.iso639_1),
          text::to_lower_ascii(e.name)}) {
      if (!alias.empty()) reg.aliases_.emplace(alias, idx);  // first wins
    }
    reg.entries_.push_back(std::move(e));
  }
  return reg;
}

std::optional<LanguageTag> LanguageRegistry::by_code(std::string_view code) const {
  auto it = aliases_.find(code);
  if (it == aliases_.end() || code.size() != 3) return std::nullopt;
  const Entry& e = entries_[it->second];
  if (e.tag.code != code) return std::nullopt;
  return e.tag;
}

std::optional<LanguageTag> LanguageRegistry::resolve(std::string_view alias) const {
  if (auto exact = index_.find(alias); exact != index_.end()) return entries_[exact->second].tag;
  auto it = aliases_.find(text::to_lower_ascii(text::trim(alias)));
  if (it == aliases_.end()) return std::nullopt;
  return entries_[it->second].tag;
}

const LanguageRegistry::Entry* LanguageRegistry::find(const LanguageTag& tag) const {
  auto it = index_.find(tag.str());
  return it == index_.end() ? nullptr : &entries_[it->second];
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("MURI_DATA_DIR"); env && *env) return env;
#ifdef MURI_SOURCE_DATA_DIR
  if (std::filesystem::exists(MURI_SOURCE_DATA_DIR)) return MURI_SOURCE_DATA_DIR;
#endif
#ifdef MURI_INSTALL_DATA_DIR
  return MURI_INSTALL_DATA_DIR;
#else
  return "data";
#endif
}

const LanguageRegistry& default_registry() {
  static const LanguageRegistry reg = LanguageRegistry::load(default_data_dir() / "languages.tsv");
  return reg;
}

}  // namespace muri
