#pragma once

// Reference implementations written independently of the library code, used
// to cross-check metrics and fold planning.

#include <map>
#include <span>
#include <string>
#include <vector>

#include "fauxcheck/corpus.hpp"
#include "fauxcheck/eval.hpp"
#include "fauxcheck/text.hpp"

namespace fauxcheck::testing {

// Map-based counting with the formula evaluated term by term: raw count times
// ln((1 + n) / (1 + df)) + 1, then L2-normalized. Terms absent from `corpus`
// are dropped.
[[nodiscard]] std::map<std::string, double> oracle_tfidf(const std::vector<std::string>& doc,
                                                         const std::vector<text::TokenList>& corpus);

[[nodiscard]] double oracle_cosine(const std::map<std::string, double>& a, const std::map<std::string, double>& b);

[[nodiscard]] double oracle_accuracy(const std::vector<bool>& predictions, const std::vector<bool>& truth);

// Rank of item i is 1 + #{j : s_j > s_i, or s_j == s_i and j < i}; AP sums
// (#positives ranked at or above i) / rank(i) over positives.
[[nodiscard]] double oracle_ap_pairwise(std::span<const double> scores, const std::vector<bool>& truth);

// Walks every permutation of the items and scores the single one that is
// ordered by descending score with ties in index order. Size <= 8.
[[nodiscard]] double oracle_ap_permutations(std::span<const double> scores, const std::vector<bool>& truth);

// Everything wrong with `fold` as a plan for `spec.kind` over `pool`;
// empty when the fold honours the protocol contract.
[[nodiscard]] std::vector<std::string> fold_violations(std::span<const corpus::ImageClaimPair> pool,
                                                       std::size_t n_prior, const eval::ProtocolSpec& spec,
                                                       const eval::Fold& fold);

}  // namespace fauxcheck::testing
