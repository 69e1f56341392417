// Independent reference implementations used to cross-check the library.
// Everything here is transcribed directly from the definitions, favoring
// clarity over speed, and shares no code with src/.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "coxsg/dataset.hpp"

namespace coxsg::oracle {

// Literal O(n^2) expected prognostic error: mean over all rows i with an
// event of sum over rows j with t_j > t_i of log(1 + exp(s_j - s_i)),
// accumulated in long double in row order.
double epe_literal(std::span<const double> beta, const SurvivalDataset& data);

// Brute-force Harrell C: loop over all ordered pairs, comparable iff
// t_i < t_j and event_i = 1; concordant when s_i > s_j; score ties 1/2.
double c_index_brute(std::span<const double> beta, const SurvivalDataset& data);

// Naive Breslow log partial likelihood: for each event row, a fresh scan of
// the whole dataset for its risk set.
double log_pl_naive(std::span<const double> beta, const SurvivalDataset& data);

// Optimizer-free Cox fit: coordinate pattern search on log_pl_naive starting
// from 0 with step halving down to step_min.
std::vector<double> fit_cox_pattern(const SurvivalDataset& data,
                                    double step_min = 1e-7);

// Textbook two-group log-rank chi-square, recomputing at-risk counts by a
// full scan at every distinct event time.
double logrank_textbook(const SurvivalDataset& data,
                        const std::vector<std::uint8_t>& in_group);

// Literal transcription of the box-growing pseudocode, recomputing every
// directed infinity norm from scratch each iteration (no incremental state).
Region grow_box_sim(const Matrix& x, const std::vector<std::uint8_t>& rejected,
                    std::span<const double> center,
                    std::span<const double> speed_low,
                    std::span<const double> speed_high, const Region& bounds);

// Monte-Carlo region precision/recall/F1 against a truth box: sample points
// uniformly in bounds and count membership.  Standard error ~ 1/sqrt(samples).
struct PrfEstimate {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};
PrfEstimate region_prf_mc(const Region& estimate, const Region& truth,
                          const Region& bounds, std::size_t samples,
                          std::uint64_t seed);

}  // namespace coxsg::oracle
