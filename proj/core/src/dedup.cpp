// SPDX-License-Identifier: Apache-2.0
#include "muri/dedup.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <stdexcept>
#include <thread>

#include "muri/hash.hpp"
#include "muri/rng.hpp"
#include "muri/text.hpp"

namespace muri {

namespace {

__extension__ using u128 = unsigned __int128;

constexpr std::uint64_t kMersenne61 = (std::uint64_t{1} << 61) - 1;

std::uint64_t mod_mersenne61(u128 x) {
  std::uint64_t lo = static_cast<std::uint64_t>(x & kMersenne61);
  std::uint64_t hi = static_cast<std::uint64_t>(x >> 61);
  std::uint64_t r = lo + hi;
  // hi can itself exceed 2^61 for 128-bit inputs; fold twice.
  r = (r & kMersenne61) + (r >> 61);
  if (r >= kMersenne61) r -= kMersenne61;
  return r;
}

}  // namespace

ShingleSet shingle(std::string_view raw, std::size_t k) {
  if (k == 0) throw std::invalid_argument("shingle: k must be positive");
  const std::string norm = text::normalize_for_shingles(raw);
  ShingleSet set;
  set.k = k;
  // Byte offsets of each code point start, plus the end.
  std::vector<std::size_t> starts;
  starts.reserve(norm.size() + 1);
  std::size_t pos = 0;
  while (pos < norm.size()) {
    starts.push_back(pos);
    text::next_codepoint(norm, pos);
  }
  starts.push_back(norm.size());
  const std::size_t cps = starts.size() - 1;
  if (cps < k) {
    set.shingles.push_back(hash64(norm));
    return set;
  }
  set.shingles.reserve(cps - k + 1);
  for (std::size_t i = 0; i + k <= cps; ++i)
    set.shingles.push_back(hash64(std::string_view(norm).substr(starts[i], starts[i + k] - starts[i])));
  std::sort(set.shingles.begin(), set.shingles.end());
  set.shingles.erase(std::unique(set.shingles.begin(), set.shingles.end()), set.shingles.end());
  return set;
}

MinHasher::MinHasher(MinHashParams params) : params_(params) {
  if (params_.num_perm == 0) throw std::invalid_argument("minhash: num_perm must be positive");
  Rng rng(derive_seed(params_.perm_seed, "minhash-permutations"));
  a_.resize(params_.num_perm);
  b_.resize(params_.num_perm);
  for (std::size_t i = 0; i < params_.num_perm; ++i) {
    a_[i] = 1 + rng.below(kMersenne61 - 1);
    b_[i] = rng.below(kMersenne61);
  }
}

MinHashSignature MinHasher::from_shingles(const ShingleSet& set) const {
  MinHashSignature sig;
  sig.num_perm = params_.num_perm;
  sig.perm_seed = params_.perm_seed;
  sig.values.assign(params_.num_perm, std::numeric_limits<std::uint64_t>::max());
  for (std::uint64_t h : set.shingles) {
    const std::uint64_t x = h % kMersenne61;
    for (std::size_t i = 0; i < params_.num_perm; ++i) {
      const std::uint64_t v =
          mod_mersenne61(static_cast<u128>(a_[i]) * x + b_[i]);
      if (v < sig.values[i]) sig.values[i] = v;
    }
  }
  return sig;
}

MinHashSignature MinHasher::operator()(std::string_view t) const {
  return from_shingles(shingle(t, params_.k));
}

MinHashSignature minhash(std::string_view t, std::size_t k, std::size_t num_perm,
                         std::uint64_t perm_seed) {
  if (text::trim(t).empty()) throw std::invalid_argument("minhash: text is empty");
  return MinHasher({k, num_perm, perm_seed})(t);
}

double estimate_jaccard(const MinHashSignature& a, const MinHashSignature& b) {
  if (a.num_perm != b.num_perm || a.perm_seed != b.perm_seed ||
      a.values.size() != b.values.size() || a.values.size() != a.num_perm)
    throw std::invalid_argument("estimate_jaccard: signatures built with different parameters");
  if (a.num_perm == 0) return 0.0;
  std::size_t equal = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) equal += a.values[i] == b.values[i];
  return static_cast<double>(equal) / static_cast<double>(a.num_perm);
}

// ---------------------------------------------------------------------------
// LshForest

LshForest::LshForest(std::size_t num_perm, std::size_t num_trees)
    : num_perm_(num_perm), depth_(num_trees == 0 ? 0 : num_perm / num_trees), trees_(num_trees) {
  if (num_trees == 0 || depth_ == 0)
    throw std::invalid_argument("LshForest: need 1 <= num_trees <= num_perm");
}

void LshForest::insert(std::string id, MinHashSignature sig) {
  if (sig.values.size() != num_perm_)
    throw std::invalid_argument("LshForest::insert: signature length mismatch");
  const std::size_t index = ids_.size();
  for (std::size_t t = 0; t < trees_.size(); ++t) {
    Band band(sig.values.begin() + static_cast<std::ptrdiff_t>(t * depth_),
              sig.values.begin() + static_cast<std::ptrdiff_t>((t + 1) * depth_));
    trees_[t].emplace(std::move(band), index);
  }
  ids_.push_back(std::move(id));
  sigs_.push_back(std::move(sig));
}

std::vector<LshForest::Match> LshForest::query_matches(const MinHashSignature& sig,
                                                       std::size_t k) const {
  if (sig.values.size() != num_perm_)
    throw std::invalid_argument("LshForest::query: signature length mismatch");
  std::set<std::size_t> candidates;
  if (k == 0 || ids_.empty()) return {};
  for (std::size_t r = depth_; r >= 1 && candidates.size() < k; --r) {
    for (std::size_t t = 0; t < trees_.size(); ++t) {
      const auto first = sig.values.begin() + static_cast<std::ptrdiff_t>(t * depth_);
      Band prefix(first, first + static_cast<std::ptrdiff_t>(r));
      for (auto it = trees_[t].lower_bound(prefix); it != trees_[t].end(); ++it) {
        if (!std::equal(prefix.begin(), prefix.end(), it->first.begin())) break;
        candidates.insert(it->second);
      }
    }
  }
  std::vector<Match> matches;
  matches.reserve(candidates.size());
  for (std::size_t idx : candidates) matches.push_back({idx, estimate_jaccard(sig, sigs_[idx])});
  std::stable_sort(matches.begin(), matches.end(),
                   [](const Match& a, const Match& b) { return a.estimate > b.estimate; });
  if (matches.size() > k) matches.resize(k);
  return matches;
}

std::vector<std::string> LshForest::query(const MinHashSignature& sig, std::size_t k) const {
  std::vector<std::string> out;
  for (const Match& m : query_matches(sig, k)) out.push_back(ids_[m.index]);
  return out;
}

// ---------------------------------------------------------------------------
// deduplicate

DedupResult deduplicate(std::span<const std::string> ids, std::span<const std::string> texts,
                        const DedupParams& params) {
  if (ids.size() != texts.size())
    throw std::invalid_argument("deduplicate: ids and texts differ in length");
  const MinHasher hasher(params.minhash);
  std::vector<MinHashSignature> sigs(texts.size());

  const std::size_t workers = std::max<std::size_t>(1, std::min(params.workers, texts.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < texts.size(); ++i) sigs[i] = hasher(texts[i]);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < texts.size(); i += workers) sigs[i] = hasher(texts[i]);
      });
    for (auto& th : pool) th.join();
  }

  DedupResult result;
  LshForest forest(params.minhash.num_perm, params.num_trees);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    auto matches = forest.query_matches(sigs[i], params.top_k);
    if (!matches.empty() && matches.front().estimate >= params.threshold) {
      result.dropped.push_back({forest.id(matches.front().index), ids[i], matches.front().estimate});
      continue;
    }
    result.retained.push_back(i);
    forest.insert(ids[i], std::move(sigs[i]));
  }
  return result;
}

std::string dedup_text(const InstructionRecord& rec) {
  if (rec.trace.inst_en && rec.trace.doc_en) return *rec.trace.inst_en + "\n" + *rec.trace.doc_en;
  return rec.instruction + "\n" + rec.output;
}

DedupResult deduplicate(std::span<const InstructionRecord> records, const DedupParams& params) {
  std::vector<std::string> ids, texts;
  ids.reserve(records.size());
  texts.reserve(records.size());
  for (const auto& r : records) {
    ids.push_back(r.id);
    texts.push_back(dedup_text(r));
  }
  return deduplicate(ids, texts, params);
}

}  // namespace muri
