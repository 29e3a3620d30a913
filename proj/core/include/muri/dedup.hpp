// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "muri/record.hpp"

namespace muri {

/// Hashed character k-grams of normalized text (ASCII-lowercased,
/// whitespace collapsed). Sorted, unique.
struct ShingleSet {
  std::size_t k = 5;
  std::vector<std::uint64_t> shingles;
};

/// Texts shorter than k code points yield the single whole-text shingle.
ShingleSet shingle(std::string_view text, std::size_t k = 5);

struct MinHashParams {
  std::size_t k = 5;
  std::size_t num_perm = 128;
  std::uint64_t perm_seed = 1;
};

struct MinHashSignature {
  std::size_t num_perm = 0;
  std::uint64_t perm_seed = 0;
  std::vector<std::uint64_t> values;

  friend bool operator==(const MinHashSignature&, const MinHashSignature&) = default;
};

/// Signature computer with a fixed family of num_perm universal hash
/// functions h(x) = (a*x + b) mod (2^61 - 1), drawn from perm_seed.
class MinHasher {
 public:
  explicit MinHasher(MinHashParams params = {});

  MinHashSignature operator()(std::string_view text) const;
  MinHashSignature from_shingles(const ShingleSet& set) const;
  const MinHashParams& params() const { return params_; }

 private:
  MinHashParams params_;
  std::vector<std::uint64_t> a_, b_;
};

MinHashSignature minhash(std::string_view text, std::size_t k = 5, std::size_t num_perm = 128,
                         std::uint64_t perm_seed = 1);

/// Fraction of equal slots. Throws std::invalid_argument if the signatures
/// were built with different num_perm or perm_seed.
double estimate_jaccard(const MinHashSignature& a, const MinHashSignature& b);

/// Prefix-tree index over signatures. The signature is cut into num_trees
/// bands; each tree is ordered on its band so a prefix of any length is a
/// contiguous range. Queries descend from the full band length to shorter
/// prefixes until enough candidates are found, then rank them by estimated
/// Jaccard.
class LshForest {
 public:
  explicit LshForest(std::size_t num_perm = 128, std::size_t num_trees = 8);

  void insert(std::string id, MinHashSignature sig);

  /// At most k ids, most similar first; ties go to the earlier insertion.
  std::vector<std::string> query(const MinHashSignature& sig, std::size_t k) const;

  struct Match {
    std::size_t index;  // insertion order
    double estimate;
  };
  std::vector<Match> query_matches(const MinHashSignature& sig, std::size_t k) const;

  const std::string& id(std::size_t index) const { return ids_[index]; }
  std::size_t size() const { return ids_.size(); }

 private:
  using Band = std::vector<std::uint64_t>;
  std::size_t num_perm_;
  std::size_t depth_;
  std::vector<std::multimap<Band, std::size_t>> trees_;
  std::vector<std::string> ids_;
  std::vector<MinHashSignature> sigs_;
};

struct DedupParams {
  double threshold = 0.85;
  std::size_t top_k = 16;
  MinHashParams minhash{};
  std::size_t num_trees = 8;
  std::size_t workers = 1;  // signature computation only
};

struct DuplicatePair {
  std::string kept_id;
  std::string dropped_id;
  double estimate = 0.0;
};

struct DedupResult {
  std::vector<std::size_t> retained;  // input positions, ascending
  std::vector<DuplicatePair> dropped;  // in input order of the dropped record
};

/// Single pass, keep-first: an item is dropped iff the index returns an
/// earlier retained item whose estimated Jaccard reaches the threshold.
DedupResult deduplicate(std::span<const std::string> ids, std::span<const std::string> texts,
                        const DedupParams& params = {});

/// English pair text (inst_en + "\n" + doc_en) when the trace carries it,
/// otherwise instruction + "\n" + output.
std::string dedup_text(const InstructionRecord& rec);

DedupResult deduplicate(std::span<const InstructionRecord> records, const DedupParams& params = {});

}  // namespace muri
