// Model and region quality metrics.
#pragma once

#include <optional>
#include <span>

#include "coxsg/cox.hpp"
#include "coxsg/dataset.hpp"

namespace coxsg {

// Empirical expected prediction error: the mean over all (event i, strictly
// later j) pairs of -log of the model probability that i fails before j,
// i.e. mean of log(1 + exp(s_j - s_i)).  beta = 0 gives exactly log 2.
// Throws MetricError::NoComparablePairs when no event has a strictly later
// neighbor.
double empirical_epe(std::span<const double> beta, const SurvivalDataset& data);

// empirical_epe with an early exit: returns exactly empirical_epe(beta, data)
// whenever it completes, and nullopt only when the true value strictly
// exceeds bound.  All softplus terms are positive, so a running partial sum
// already above bound * pairs proves the final mean is above bound.  Throws
// the same NoComparablePairs as empirical_epe.
std::optional<double> empirical_epe_bounded(std::span<const double> beta,
                                            const SurvivalDataset& data,
                                            double bound);

// Harrell's concordance: pairs (i, j) with t_i < t_j and delta_i = 1;
// 1 for s_i > s_j, 0.5 for ties.  Throws NoComparablePairs when none.
double c_index(std::span<const double> beta, const SurvivalDataset& data);

// Fraction of points whose leave-one-out rank tail score against the other
// m-1 points falls below alpha.  Throws GroupTooSmall when m < 2.
double rejection_fraction(std::span<const double> beta,
                          const SurvivalDataset& data, double alpha);

// Volume-based region recovery scores; the estimate is clipped to bounds
// before volumes are taken.  Degenerate estimates (empty or zero volume)
// score 0.
struct RegionScore {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};
RegionScore region_f1(const Region& estimate, const Region& truth,
                      const Region& bounds);

}  // namespace coxsg
