// Subgroup discovery methods.  All of them take a training dataset and
// produce one axis-aligned Region per hyperparameter setting; the harness
// refits and scores the region afterwards.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coxsg/cox.hpp"
#include "coxsg/dataset.hpp"

namespace coxsg {

enum class Method {
  Base,
  Random,
  SurvivalTree,
  CoxTree,
  Prim,
  DDGroup,
  DDGroupCI,
  DDGroupPL,
  DDGroupNE,
};

const char* method_name(Method m);
std::optional<Method> method_from_name(const std::string& name);

// One hyperparameter setting; params are named doubles.
struct MethodConfig {
  Method method;
  std::map<std::string, double> params;
};

// The fixed sweep grid: 1 setting for Base, exactly 100 for everything else.
std::vector<MethodConfig> method_grid(Method m);

// --- Baselines ------------------------------------------------------------
// Whole-data bounding box.
Region base_method(const SurvivalDataset& data);

// Bounding box of 2*d2 distinct rows sampled without replacement.
Region random_method(const SurvivalDataset& data, std::uint64_t seed);
// The sampled row indices (exposed for testing the sampling contract).
std::vector<std::size_t> random_method_rows(std::size_t n, std::size_t d2,
                                            std::uint64_t seed);

// --- Trees -----------------------------------------------------------------
// Two-sample log-rank chi-square statistic for rows split by mask (1 = group
// A).  Zero when the variance term vanishes.
double two_sample_logrank(const SurvivalDataset& data,
                          const std::vector<std::uint8_t>& in_group);

struct TreeLeaf {
  Region region;                  // leaf box intersected with the data bounding box
  std::vector<std::size_t> rows;  // training rows in the leaf
};

// Greedy binary tree with candidate thresholds at midpoints of consecutive
// distinct sorted values.  survival_tree splits by maximal log-rank
// statistic; cox_tree by minimal size-weighted child EPE (each child refit),
// splitting only when that improves on the parent's own EPE.
std::vector<TreeLeaf> survival_tree(const SurvivalDataset& data, int max_depth,
                                    int min_leaf);
std::vector<TreeLeaf> cox_tree(const SurvivalDataset& data, int max_depth,
                               int min_leaf);

// --- PRIM -------------------------------------------------------------------
// Top-down peeling of alpha-quantile slices (2*d2 candidate faces per step,
// support floor beta0*n), then bottom-up pasting that re-admits the
// ceil(alpha * n_excluded) nearest excluded points per face while EPE improves.
Region prim(const SurvivalDataset& data, double alpha, double beta0);

// --- DDGroup family ----------------------------------------------------------
enum class CoreQuality { Epe, CIndex, PartialLikelihood };

struct CoreGroup {
  std::vector<std::size_t> rows;  // time-ordered stored-row indices
  CoxModel model;
  std::size_t center = 0;  // row whose neighborhood won
  double quality = 0.0;    // EPE, or negated c-index / log PL (lower is better)
};

// Per-center orderings of all rows by ascending standardized Euclidean
// distance (ties by row index).  Sharing one across core_group calls with
// different core_frac avoids re-sorting; prefixes of a row's order give its
// k nearest neighbors for every k.
struct NeighborOrder {
  std::vector<std::vector<std::int32_t>> order;
};
NeighborOrder neighbor_order(const SurvivalDataset& data);

// k = round(core_frac * n) clamped up to d1 + 2 nearest neighbors (self
// included, Euclidean distance in per-feature standardized x_subgp) of every
// point; fit a Cox model on each neighborhood and keep the best-scoring one
// (first encountered on ties).  Neighborhoods whose fit fails are skipped.
CoreGroup core_group(const SurvivalDataset& data, double core_frac,
                     CoreQuality quality);
CoreGroup core_group(const SurvivalDataset& data, double core_frac,
                     CoreQuality quality, const NeighborOrder& cache);

enum class RejectionScore { Crs, CIndex, PartialLikelihood };

// Per-point conformity score against the core group under beta.
double rejection_score(RejectionScore kind, std::span<const double> beta,
                       const SurvivalDataset& core, std::span<const double> x,
                       double t, bool event);

// Score of every row of data against the core (the threshold sweep reuses
// one score vector across many quantiles).
std::vector<double> rejection_scores(const SurvivalDataset& data,
                                     const SurvivalDataset& core,
                                     std::span<const double> beta,
                                     RejectionScore kind);

// Scores every row of data against the core, thresholds at the rej_quantile
// empirical quantile (linear interpolation) of the full score vector, and
// flags rows with score strictly below it.
std::vector<std::uint8_t> rejection_labels(const SurvivalDataset& data,
                                           const SurvivalDataset& core,
                                           std::span<const double> beta,
                                           RejectionScore kind,
                                           double rej_quantile);

// Directed box growth: starting from center, 2*d faces move outward with the
// given speeds; each step fixes the face first hit by a rejected point and
// drops the points that face cut away; faces never hit extend to bounds.
// The result is clipped to bounds.
Region grow_box(const Matrix& x, const std::vector<std::uint8_t>& rejected,
                std::span<const double> center,
                std::span<const double> speed_low,
                std::span<const double> speed_high, const Region& bounds);

enum class DDGroupVariant { Crs, CIndex, PartialLikelihood, NoExpand };

// Expansion phase on its own: grow_box over per-feature standardized
// coordinates with unit speeds, centered at the standardized core mean,
// bounded by the data bounding box; the result is mapped back to raw
// coordinates.
Region ddgroup_expand(const SurvivalDataset& data,
                      const std::vector<std::size_t>& core_rows,
                      const std::vector<std::uint8_t>& rejected);

// Full pipeline: core group (quality EPE for Crs/NoExpand, matching metric
// otherwise), rejection labels, then ddgroup_expand.  NoExpand returns the
// core bounding box directly.
Region ddgroup(const SurvivalDataset& data, double core_frac,
               double rej_quantile, DDGroupVariant variant);
Region ddgroup(const SurvivalDataset& data, double core_frac,
               double rej_quantile, DDGroupVariant variant,
               const NeighborOrder& cache);

// Empirical quantile with linear interpolation between order statistics.
double quantile_linear(std::vector<double> values, double q);

}  // namespace coxsg
