// Conformal rank probabilities: for a test point inserted into a core group
// of n time-sorted points, the probability under the fitted Cox model that
// the test point's event falls at each of the n+1 insertion ranks.
//
// fast_log_rank_probs computes all n+1 log-probabilities in O(n) after the
// O(n d1) score pass: log r_1 by one pass over the core, then the ratio
// recursion r_{k+1}/r_k = (S_k + (1-delta_k) e^{s*}) / (S_{k+1} + e^{s*})
// where S_k is the suffix sum of core hazards.  All suffix sums are kept in
// log space (precomputed backward with log-add-exp, which never needs a
// subtraction), so scores of any magnitude are safe.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "coxsg/dataset.hpp"

namespace coxsg {

struct RankProbabilities {
  std::vector<double> log_r;  // n+1 unconditional log rank probabilities
  std::vector<double> crs;    // softmax of log_r; sums to 1
};

// O(n) recursion, log-space suffix sums.
RankProbabilities fast_log_rank_probs(std::span<const double> beta,
                                      const SurvivalDataset& core,
                                      std::span<const double> x_star);

// Literal product form of the unconditional rank probability, recomputing
// every denominator from scratch; O(n^3).  Kept as the reference the fast
// recursion is tested against, and for small cores where clarity wins.
RankProbabilities naive_log_rank_probs(std::span<const double> beta,
                                       const SurvivalDataset& core,
                                       std::span<const double> x_star);

struct TailScore {
  double tau = 0.0;        // min of the two rank tails (right tail only if censored)
  std::size_t rank = 0;    // insertion rank k*, 1-based; ties placed after equal core times
  bool censored = false;
};

// Both tails include rank k* itself.  For a censored test point only the
// right tail is a valid test and tau is that tail alone.
TailScore rank_tail_score(std::span<const double> beta,
                          const SurvivalDataset& core,
                          std::span<const double> x_star, double t_star,
                          bool event_star);

namespace detail {
// Raw-array versions used by the batch scoring paths: core arrays must be
// time-sorted; s are the core linear scores, s_star the test point's.
RankProbabilities rank_probs_from_scores(std::span<const double> s,
                                         std::span<const std::uint8_t> ev,
                                         double s_star);
TailScore rank_tail_from_scores(std::span<const double> s,
                                std::span<const double> times,
                                std::span<const std::uint8_t> ev,
                                double s_star, double t_star, bool event_star);
}  // namespace detail

}  // namespace coxsg
