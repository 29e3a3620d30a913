// SPDX-License-Identifier: Apache-2.0
#include "testkit.hpp"

#include <atomic>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <unistd.h>

namespace muri::testkit {

namespace {

constexpr std::array<std::string_view, 24> kSyllables{
    "ka", "lo", "mi", "ne", "ru", "ta", "vi", "zo", "be", "da", "fu", "go",
    "hi", "ja", "ku", "le", "mo", "na", "pe", "ri", "se", "tu", "wa", "yo"};

std::string normalize(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
  }
  return out;
}

std::vector<std::string> code_points(std::string_view s) {
  std::vector<std::string> cps;
  for (std::size_t i = 0; i < s.size();) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : 4;
    len = std::min(len, s.size() - i);
    cps.emplace_back(s.substr(i, len));
    i += len;
  }
  return cps;
}

}  // namespace

TempDir::TempDir(std::string_view label) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("muri-" + std::string(label) + "-" + std::to_string(::getpid()) + "-" +
           std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

fs::path source_dir() { return MURI_TEST_SOURCE_DIR; }

void write_text(const fs::path& path, std::string_view body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << body;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string pseudo_word(Rng& rng) {
  std::string w;
  const std::size_t n = 2 + rng.below(3);
  for (std::size_t i = 0; i < n; ++i) w += kSyllables[rng.below(kSyllables.size())];
  return w;
}

std::string prose(Rng& rng, std::size_t min_chars) {
  std::string out;
  while (out.size() < min_chars) {
    std::string sentence = pseudo_word(rng);
    sentence[0] = static_cast<char>(sentence[0] - 'a' + 'A');
    const std::size_t words = 6 + rng.below(8);
    for (std::size_t i = 1; i < words; ++i) sentence += " " + pseudo_word(rng);
    if (!out.empty()) out += ' ';
    out += sentence + ".";
  }
  return out;
}

std::string mutate_words(Rng& rng, std::string_view text, double fraction) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t end = std::min(text.find_first_of(" .", i), text.size());
    if (end > i) out += rng.unit() < fraction ? pseudo_word(rng) : std::string(text.substr(i, end - i));
    if (end < text.size()) out += text[end];
    i = end + 1;
  }
  return out;
}

std::set<std::string> oracle_shingles(std::string_view text, std::size_t k) {
  const auto cps = code_points(normalize(text));
  std::set<std::string> out;
  if (cps.size() < k) {
    std::string whole;
    for (const auto& c : cps) whole += c;
    out.insert(whole);
    return out;
  }
  for (std::size_t i = 0; i + k <= cps.size(); ++i) {
    std::string g;
    for (std::size_t j = i; j < i + k; ++j) g += cps[j];
    out.insert(std::move(g));
  }
  return out;
}

double oracle_jaccard(std::string_view a, std::string_view b, std::size_t k) {
  const auto sa = oracle_shingles(a, k);
  const auto sb = oracle_shingles(b, k);
  std::size_t inter = 0;
  for (const auto& s : sa) inter += sb.count(s);
  const std::size_t uni = sa.size() + sb.size() - inter;
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

PlantedSet planted_near_duplicates(std::size_t docs, std::size_t pairs, std::uint64_t seed,
                                   double min_jaccard) {
  if (2 * pairs > docs) throw std::invalid_argument("too many pairs");
  Rng rng(seed);
  PlantedSet set;
  set.texts.resize(docs);
  std::vector<bool> taken(docs, false);
  // Originals in the first half, copies in the second half.
  std::vector<std::size_t> firsts, seconds;
  const std::size_t half = docs / 2;
  while (firsts.size() < pairs) {
    const std::size_t i = rng.below(half);
    if (!taken[i]) taken[i] = true, firsts.push_back(i);
  }
  while (seconds.size() < pairs) {
    const std::size_t j = half + rng.below(docs - half);
    if (!taken[j]) taken[j] = true, seconds.push_back(j);
  }
  for (std::size_t i = 0; i < docs; ++i) set.texts[i] = prose(rng, 500);
  for (std::size_t p = 0; p < pairs; ++p) {
    const std::string& base = set.texts[firsts[p]];
    std::string copy;
    do {
      // Replace one word after the first few with a fresh pseudo-word.
      copy = base;
      std::size_t pos = 40 + rng.below(copy.size() - 80);
      pos = copy.find(' ', pos);
      const std::size_t end = copy.find_first_of(" .", pos + 1);
      copy.replace(pos + 1, end - pos - 1, pseudo_word(rng));
    } while (oracle_jaccard(base, copy) < min_jaccard);
    set.texts[seconds[p]] = copy;
    set.planted.emplace_back(firsts[p], seconds[p]);
  }
  for (std::size_t i = 0; i < docs; ++i) set.ids.push_back("doc-" + std::to_string(i));
  return set;
}

std::set<std::pair<std::size_t, std::size_t>> oracle_duplicate_pairs(
    const std::vector<std::string>& texts, double threshold, std::size_t k) {
  std::vector<std::set<std::string>> sh;
  sh.reserve(texts.size());
  for (const auto& t : texts) sh.push_back(oracle_shingles(t, k));
  std::set<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    for (std::size_t j = i + 1; j < texts.size(); ++j) {
      std::size_t inter = 0;
      for (const auto& s : sh[i]) inter += sh[j].count(s);
      const double jac =
          static_cast<double>(inter) / static_cast<double>(sh[i].size() + sh[j].size() - inter);
      if (jac >= threshold) out.emplace(i, j);
    }
  }
  return out;
}

E2eFixture write_e2e_fixture(const fs::path& dir, std::uint64_t seed) {
  const std::array<std::string_view, 5> langs{"tur_Latn", "deu_Latn", "spa_Latn", "swh_Latn",
                                              "fin_Latn"};
  const std::array<std::string_view, 5> keyword_forms{"summarize", "translate", "summarized",
                                                      "translation", "summarizing"};
  Rng rng(seed);
  std::vector<std::pair<std::string, std::string>> rows;  // (lang, text)
  for (std::size_t i = 0; i < 100; ++i) {
    std::string text = prose(rng, 320);
    if (i < 10) {
      text += " Nora ANSWER:LID_FAULT wakilo.";
    } else if (i < 15) {
      text += " Nora ANSWER:" + std::string(keyword_forms[i - 10]) + " wakilo.";
    } else if (i < 18) {
      text += " Nora TRIGGER_HATE wakilo.";
    }
    rows.emplace_back(std::string(langs[i % 5]), std::move(text));
  }
  // Documents 97..99 become near-copies of 20..22: one late word changed.
  for (std::size_t p = 0; p < 3; ++p) {
    auto [lang, text] = rows[20 + p];
    const std::size_t pos = text.rfind(' ', text.size() - 20);
    const std::size_t end = text.find_first_of(" .", pos + 1);
    text.replace(pos + 1, end - pos - 1, "zozozo");
    rows[97 + p] = {lang, text};
  }

  E2eFixture fx;
  fx.corpus = dir / "corpus.jsonl";
  std::string body;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string orig = "e2e-" + std::to_string(i);
    nlohmann::ordered_json j{{"id", orig}, {"lang", rows[i].first}, {"text", rows[i].second}};
    body += j.dump() + "\n";
    fx.text_by_orig_id[orig] = rows[i].second;
  }
  write_text(fx.corpus, body);
  fx.manifest = dir / "manifest.json";
  write_text(fx.manifest,
             R"({"entries":[{"path":"corpus.jsonl","format":"jsonl","source":"culturax"}]})");
  fx.config = dir / "config.json";
  write_text(fx.config, e2e_config(fx.manifest, dir / "run"));
  fx.documents = rows.size();
  fx.expected_drops = {
      {"lid_mismatch", 10}, {"blocked_keyword", 5}, {"screen_flagged", 3}, {"near_duplicate", 3}};
  return fx;
}

std::string e2e_config(const fs::path& manifest, const fs::path& checkpoint_dir,
                       std::size_t workers, std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["manifest"] = manifest.string();
  j["seed"] = seed;
  j["workers"] = workers;
  j["checkpoint_dir"] = checkpoint_dir.string();
  for (const char* role : {"translate", "generate", "lid", "screen"})
    j["endpoints"][role] = {{"mock", true}};
  return j.dump(2);
}

}  // namespace muri::testkit
