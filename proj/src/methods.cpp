#include "coxsg/methods.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "coxsg/crs.hpp"
#include "coxsg/errors.hpp"
#include "coxsg/metrics.hpp"
#include "coxsg/numerics.hpp"
#include "coxsg/synth.hpp"

namespace coxsg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Region box_of_rows(const SurvivalDataset& data,
                   const std::vector<std::size_t>& rows) {
  if (rows.empty()) throw std::invalid_argument("box_of_rows: no rows");
  const std::size_t d = data.d_subgp();
  Region r;
  r.lower.assign(d, kInf);
  r.upper.assign(d, -kInf);
  for (std::size_t i : rows)
    for (std::size_t j = 0; j < d; ++j) {
      const double v = data.x_subgp(i, j);
      r.lower[j] = std::min(r.lower[j], v);
      r.upper[j] = std::max(r.upper[j], v);
    }
  return r;
}

// Per-feature mean and standard deviation of x_subgp; constant features get
// sigma 1 so standardization is a no-op for them.
void feature_moments(const SurvivalDataset& data, std::vector<double>& mu,
                     std::vector<double>& sigma) {
  const std::size_t n = data.size(), d = data.d_subgp();
  mu.assign(d, 0.0);
  sigma.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mu[j] += data.x_subgp(i, j);
  for (std::size_t j = 0; j < d; ++j) mu[j] /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double dv = data.x_subgp(i, j) - mu[j];
      sigma[j] += dv * dv;
    }
  for (std::size_t j = 0; j < d; ++j) {
    sigma[j] = std::sqrt(sigma[j] / static_cast<double>(n));
    if (sigma[j] <= 0.0) sigma[j] = 1.0;
  }
}

Matrix standardized_subgp(const SurvivalDataset& data,
                          const std::vector<double>& mu,
                          const std::vector<double>& sigma) {
  const std::size_t n = data.size(), d = data.d_subgp();
  Matrix xs(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      xs(i, j) = (data.x_subgp(i, j) - mu[j]) / sigma[j];
  return xs;
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::Base: return "base";
    case Method::Random: return "random";
    case Method::SurvivalTree: return "survival_tree";
    case Method::CoxTree: return "cox_tree";
    case Method::Prim: return "prim";
    case Method::DDGroup: return "ddgroup";
    case Method::DDGroupCI: return "ddgroup_ci";
    case Method::DDGroupPL: return "ddgroup_pl";
    case Method::DDGroupNE: return "ddgroup_ne";
  }
  return "?";
}

std::optional<Method> method_from_name(const std::string& name) {
  static const std::pair<const char*, Method> table[] = {
      {"base", Method::Base},
      {"random", Method::Random},
      {"survival_tree", Method::SurvivalTree},
      {"cox_tree", Method::CoxTree},
      {"prim", Method::Prim},
      {"ddgroup", Method::DDGroup},
      {"ddgroup_ci", Method::DDGroupCI},
      {"ddgroup_pl", Method::DDGroupPL},
      {"ddgroup_ne", Method::DDGroupNE},
  };
  for (const auto& [key, m] : table)
    if (name == key) return m;
  return std::nullopt;
}

std::vector<MethodConfig> method_grid(Method m) {
  std::vector<MethodConfig> grid;
  switch (m) {
    case Method::Base:
      grid.push_back({m, {}});
      break;
    case Method::Random:
      for (int s = 0; s < 100; ++s)
        grid.push_back({m, {{"seed", static_cast<double>(s)}}});
      break;
    case Method::SurvivalTree:
    case Method::CoxTree:
      for (int leaf : {5, 10, 20, 40})
        for (int depth = 1; depth <= 25; ++depth)
          grid.push_back({m,
                          {{"max_depth", static_cast<double>(depth)},
                           {"min_leaf", static_cast<double>(leaf)}}});
      break;
    case Method::Prim:
      for (double b0 : {0.005, 0.01, 0.02, 0.04})
        for (int a = 1; a <= 25; ++a)
          grid.push_back(
              {m, {{"alpha", static_cast<double>(a) / 100.0}, {"beta0", b0}}});
      break;
    case Method::DDGroup:
    case Method::DDGroupCI:
    case Method::DDGroupPL:
      for (double cf : {0.05, 0.1})
        for (int q = 1; q <= 50; ++q)
          grid.push_back({m,
                          {{"core_frac", cf},
                           {"rej_quantile", static_cast<double>(q) / 100.0}}});
      break;
    case Method::DDGroupNE:
      for (int c = 1; c <= 100; ++c)
        grid.push_back({m, {{"core_frac", static_cast<double>(c) / 100.0}}});
      break;
  }
  return grid;
}

// --- Baselines ---------------------------------------------------------------

Region base_method(const SurvivalDataset& data) { return data.bounding_box(); }

std::vector<std::size_t> random_method_rows(std::size_t n, std::size_t d2,
                                            std::uint64_t seed) {
  const std::size_t k = 2 * d2;
  if (n < k) throw MethodError(MethodError::Code::TooFewPoints,
                               "random_method: need at least 2*d2 rows");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(derive_seed(seed, seed_tag::kData, 0));
  for (std::size_t i = 0; i < k; ++i)
    std::swap(idx[i], idx[i + rng.below(n - i)]);
  idx.resize(k);
  return idx;
}

Region random_method(const SurvivalDataset& data, std::uint64_t seed) {
  return box_of_rows(data,
                     random_method_rows(data.size(), data.d_subgp(), seed));
}

// --- Log-rank ----------------------------------------------------------------

double two_sample_logrank(const SurvivalDataset& data,
                          const std::vector<std::uint8_t>& in_group) {
  const std::size_t n = data.size();
  if (in_group.size() != n)
    throw std::invalid_argument("two_sample_logrank: mask size mismatch");
  std::vector<std::int32_t> first_tied, strict_after;
  tie_structure(data.times, first_tied, strict_after);

  // Suffix count of group-A members: rows are time-sorted, so everyone with
  // index >= i is at risk at time t_i.
  std::vector<std::int64_t> suffix_a(n + 1, 0);
  for (std::size_t i = n; i-- > 0;)
    suffix_a[i] = suffix_a[i + 1] + (in_group[i] ? 1 : 0);

  double o_minus_e = 0.0, var = 0.0;
  for (std::size_t i = 0; i < n;) {
    const std::size_t block_end = static_cast<std::size_t>(strict_after[i]);
    std::int64_t d = 0, d_a = 0;
    for (std::size_t j = i; j < block_end; ++j)
      if (data.events[j]) {
        ++d;
        if (in_group[j]) ++d_a;
      }
    if (d > 0) {
      const double at_risk = static_cast<double>(n - i);
      const double at_risk_a = static_cast<double>(suffix_a[i]);
      const double p = at_risk_a / at_risk;
      o_minus_e += static_cast<double>(d_a) - static_cast<double>(d) * p;
      if (n - i > 1)
        var += static_cast<double>(d) * p * (1.0 - p) *
               (at_risk - static_cast<double>(d)) / (at_risk - 1.0);
    }
    i = block_end;
  }
  if (var <= 0.0) return 0.0;
  return o_minus_e * o_minus_e / var;
}

// --- Trees -------------------------------------------------------------------

namespace {

struct TreeBuild {
  const SurvivalDataset& data;
  int max_depth;
  int min_leaf;
  bool epe_criterion;  // false: log-rank (survival tree), true: EPE (Cox tree)
  std::vector<TreeLeaf> leaves;
};

struct SplitChoice {
  std::size_t dim = 0;
  double threshold = 0.0;
  bool found = false;
};

// Candidate thresholds for one node feature: midpoints of consecutive
// distinct sorted values.
std::vector<double> midpoint_thresholds(std::vector<double> vals) {
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
  std::vector<double> out;
  out.reserve(vals.size());
  for (std::size_t i = 0; i + 1 < vals.size(); ++i)
    out.push_back(0.5 * (vals[i] + vals[i + 1]));
  return out;
}

SplitChoice pick_split(TreeBuild& tb, const SurvivalDataset& sub) {
  const std::size_t m = sub.size();
  SplitChoice best;
  // Log-rank: higher is better, must beat 0.  EPE: lower is better, must
  // beat the node's own EPE under its own fit.
  double best_score = 0.0;
  if (tb.epe_criterion) {
    try {
      const CoxModel parent = fit_cox(sub);
      best_score = empirical_epe(parent.beta, sub);
    } catch (const std::runtime_error&) {
      return best;  // unfittable node cannot be compared against
    }
  }

  std::vector<std::uint8_t> mask(m);
  std::vector<std::size_t> left_local, right_local;
  for (std::size_t j = 0; j < sub.d_subgp(); ++j) {
    std::vector<double> vals(m);
    for (std::size_t i = 0; i < m; ++i) vals[i] = sub.x_subgp(i, j);
    for (double thr : midpoint_thresholds(vals)) {
      std::size_t n_left = 0;
      for (std::size_t i = 0; i < m; ++i) {
        mask[i] = sub.x_subgp(i, j) <= thr ? 1 : 0;
        n_left += mask[i];
      }
      const std::size_t n_right = m - n_left;
      if (n_left < static_cast<std::size_t>(tb.min_leaf) ||
          n_right < static_cast<std::size_t>(tb.min_leaf))
        continue;

      if (!tb.epe_criterion) {
        const double stat = two_sample_logrank(sub, mask);
        if (stat > best_score) {
          best_score = stat;
          best = {j, thr, true};
        }
      } else {
        left_local.clear();
        right_local.clear();
        for (std::size_t i = 0; i < m; ++i)
          (mask[i] ? left_local : right_local).push_back(i);
        double impurity;
        try {
          const SurvivalDataset left = sub.subset(left_local);
          const SurvivalDataset right = sub.subset(right_local);
          const double epe_l = empirical_epe(fit_cox(left).beta, left);
          const double epe_r = empirical_epe(fit_cox(right).beta, right);
          impurity = (static_cast<double>(n_left) * epe_l +
                      static_cast<double>(n_right) * epe_r) /
                     static_cast<double>(m);
        } catch (const std::runtime_error&) {
          continue;  // a child that cannot be fit or scored disqualifies the split
        }
        if (impurity < best_score) {
          best_score = impurity;
          best = {j, thr, true};
        }
      }
    }
  }
  return best;
}

void build_node(TreeBuild& tb, const std::vector<std::size_t>& rows,
                const Region& region, int depth) {
  const auto leaf = [&] {
    // Leaves only survive if a Cox model can be fit on them.
    try {
      (void)fit_cox(tb.data.subset(rows));
    } catch (const std::runtime_error&) {
      return;
    }
    tb.leaves.push_back({region, rows});
  };

  if (depth >= tb.max_depth ||
      rows.size() < 2 * static_cast<std::size_t>(tb.min_leaf)) {
    leaf();
    return;
  }
  const SurvivalDataset sub = tb.data.subset(rows);
  const SplitChoice split = pick_split(tb, sub);
  if (!split.found) {
    leaf();
    return;
  }

  std::vector<std::size_t> left_rows, right_rows;
  for (std::size_t i = 0; i < rows.size(); ++i)
    (sub.x_subgp(i, split.dim) <= split.threshold ? left_rows : right_rows)
        .push_back(rows[i]);

  Region left = region, right = region;
  left.upper[split.dim] = std::min(left.upper[split.dim], split.threshold);
  right.lower[split.dim] = std::max(right.lower[split.dim], split.threshold);
  build_node(tb, left_rows, left, depth + 1);
  build_node(tb, right_rows, right, depth + 1);
}

std::vector<TreeLeaf> build_tree(const SurvivalDataset& data, int max_depth,
                                 int min_leaf, bool epe_criterion) {
  if (max_depth < 0 || min_leaf < 1)
    throw std::invalid_argument("tree: bad max_depth or min_leaf");
  TreeBuild tb{data, max_depth, min_leaf, epe_criterion, {}};
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  build_node(tb, all, data.bounding_box(), 0);
  if (tb.leaves.empty())
    throw MethodError(MethodError::Code::NoValidLeaf,
                      "tree: no leaf admits a Cox fit");
  return std::move(tb.leaves);
}

}  // namespace

std::vector<TreeLeaf> survival_tree(const SurvivalDataset& data, int max_depth,
                                    int min_leaf) {
  return build_tree(data, max_depth, min_leaf, /*epe_criterion=*/false);
}

std::vector<TreeLeaf> cox_tree(const SurvivalDataset& data, int max_depth,
                               int min_leaf) {
  return build_tree(data, max_depth, min_leaf, /*epe_criterion=*/true);
}

// --- PRIM --------------------------------------------------------------------

namespace {

// Training EPE of a Cox model refit on the given rows; +inf when refit or
// scoring is impossible (such candidates never win).
double refit_epe(const SurvivalDataset& data,
                 const std::vector<std::size_t>& rows) {
  try {
    const SurvivalDataset sub = data.subset(rows);
    return empirical_epe(fit_cox(sub).beta, sub);
  } catch (const std::runtime_error&) {
    return kInf;
  }
}

}  // namespace

Region prim(const SurvivalDataset& data, double alpha, double beta0) {
  const std::size_t n = data.size(), d = data.d_subgp();
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw std::invalid_argument("prim: alpha must be in (0, 1)");
  if (!(beta0 > 0.0) || beta0 * static_cast<double>(n) < 1.0)
    throw std::invalid_argument("prim: beta0*n must be at least 1");
  const double support = beta0 * static_cast<double>(n);

  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  Region region = data.bounding_box();

  double metric;
  try {
    const CoxModel init = fit_cox(data);
    metric = empirical_epe(init.beta, data);
  } catch (const std::runtime_error& e) {
    throw MethodError(MethodError::Code::NoValidRegion,
                      std::string("prim: initial fit failed: ") + e.what());
  }

  // Peeling: drop the alpha-quantile slice off the face that best reduces
  // the refit EPE; a peel may not push support below beta0*n.
  while (true) {
    double best_epe = kInf;
    std::vector<std::size_t> best_rows;
    Region best_region;
    for (std::size_t j = 0; j < d; ++j) {
      std::vector<double> vals(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i)
        vals[i] = data.x_subgp(rows[i], j);
      for (int side = 0; side < 2; ++side) {
        const bool low = side == 0;
        const double q =
            quantile_linear(vals, low ? alpha : 1.0 - alpha);
        std::vector<std::size_t> kept;
        kept.reserve(rows.size());
        for (std::size_t r : rows) {
          const double v = data.x_subgp(r, j);
          if (low ? v >= q : v <= q) kept.push_back(r);
        }
        if (kept.size() == rows.size()) continue;  // peel removed nothing
        if (static_cast<double>(kept.size()) < support) continue;
        const double epe = refit_epe(data, kept);
        if (epe < best_epe) {
          best_epe = epe;
          best_rows = std::move(kept);
          best_region = region;
          (low ? best_region.lower[j] : best_region.upper[j]) = q;
        }
      }
    }
    if (best_epe >= metric) break;
    metric = best_epe;
    rows = std::move(best_rows);
    region = std::move(best_region);
  }

  // Tighten to the bounding box of the surviving points (membership, and
  // hence the metric, is unchanged).
  region = box_of_rows(data, rows);

  // Pasting: re-extend one face far enough to re-admit ceil(alpha * m) of
  // the m excluded points nearest that face, while the refit EPE improves.
  std::vector<std::uint8_t> inside(n, 0);
  for (std::size_t r : rows) inside[r] = 1;
  while (true) {
    double best_epe = kInf;
    std::vector<std::size_t> best_rows;
    Region best_region;
    for (std::size_t j = 0; j < d; ++j) {
      for (int side = 0; side < 2; ++side) {
        const bool low = side == 0;
        // Candidates: points beyond this face that satisfy every other bound.
        std::vector<std::pair<double, std::size_t>> cands;
        for (std::size_t r = 0; r < n; ++r) {
          if (inside[r]) continue;
          const double v = data.x_subgp(r, j);
          if (low ? v >= region.lower[j] : v <= region.upper[j]) continue;
          bool fits_rest = true;
          for (std::size_t mdim = 0; mdim < d && fits_rest; ++mdim) {
            if (mdim == j) continue;
            const double w = data.x_subgp(r, mdim);
            fits_rest = w >= region.lower[mdim] && w <= region.upper[mdim];
          }
          if (fits_rest) cands.emplace_back(v, r);
        }
        if (cands.empty()) continue;
        const std::size_t take = std::min(
            cands.size(),
            static_cast<std::size_t>(std::ceil(
                alpha * static_cast<double>(cands.size()))));
        // Nearest to the face first: largest values for the lower face,
        // smallest for the upper; ties by row for determinism.
        std::sort(cands.begin(), cands.end(),
                  [low](const auto& a, const auto& b) {
                    if (a.first != b.first)
                      return low ? a.first > b.first : a.first < b.first;
                    return a.second < b.second;
                  });
        const double new_bound = cands[take - 1].first;
        std::vector<std::size_t> added = rows;
        for (const auto& [v, r] : cands)
          if (low ? v >= new_bound : v <= new_bound) added.push_back(r);
        std::sort(added.begin(), added.end());
        const double epe = refit_epe(data, added);
        if (epe < best_epe) {
          best_epe = epe;
          best_rows = std::move(added);
          best_region = region;
          (low ? best_region.lower[j] : best_region.upper[j]) = new_bound;
        }
      }
    }
    if (best_epe >= metric) break;
    metric = best_epe;
    rows = std::move(best_rows);
    region = std::move(best_region);
    inside.assign(n, 0);
    for (std::size_t r : rows) inside[r] = 1;
  }
  return region;
}

// --- Core group ---------------------------------------------------------------

NeighborOrder neighbor_order(const SurvivalDataset& data) {
  const std::size_t n = data.size(), d = data.d_subgp();
  std::vector<double> mu, sigma;
  feature_moments(data, mu, sigma);
  const Matrix xs = standardized_subgp(data, mu, sigma);

  NeighborOrder out;
  out.order.assign(n, {});
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(n); ++ci) {
    const std::size_t c = static_cast<std::size_t>(ci);
    std::vector<std::pair<double, std::int32_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double dv = xs(i, j) - xs(c, j);
        d2 += dv * dv;
      }
      dist[i] = {d2, static_cast<std::int32_t>(i)};
    }
    std::sort(dist.begin(), dist.end());
    auto& ord = out.order[c];
    ord.resize(n);
    for (std::size_t i = 0; i < n; ++i) ord[i] = dist[i].second;
  }
  return out;
}

namespace {

std::size_t core_size(const SurvivalDataset& data, double core_frac) {
  if (!(core_frac > 0.0) || core_frac > 1.0)
    throw std::invalid_argument("core_group: core_frac must be in (0, 1]");
  const std::size_t n = data.size();
  auto k = static_cast<std::size_t>(
      std::lround(core_frac * static_cast<double>(n)));
  k = std::max(k, data.d_adjust() + 2);
  return std::min(k, n);
}

// Quality of one fitted neighborhood, normalized so lower is better; +inf
// when the neighborhood cannot be scored.  For the EPE quality a finite
// bound lets the metric stop early once its value provably exceeds the best
// score seen so far; a center scored +inf this way can never win, so the
// result is unchanged.
double core_quality_score(CoreQuality quality, const CoxModel& model,
                          const SurvivalDataset& sub, double bound = kInf) {
  try {
    switch (quality) {
      case CoreQuality::Epe:
        return empirical_epe_bounded(model.beta, sub, bound).value_or(kInf);
      case CoreQuality::CIndex: return -c_index(model.beta, sub);
      case CoreQuality::PartialLikelihood: return -model.log_pl;
    }
  } catch (const std::runtime_error&) {
  }
  return kInf;
}

CoreGroup core_group_impl(const SurvivalDataset& data, double core_frac,
                          CoreQuality quality, const NeighborOrder* cache) {
  const std::size_t n = data.size();
  const std::size_t k = core_size(data, core_frac);

  std::vector<double> mu, sigma;
  Matrix xs(0, 0);
  if (cache == nullptr) {
    feature_moments(data, mu, sigma);
    xs = standardized_subgp(data, mu, sigma);
  } else if (cache->order.size() != n) {
    throw std::invalid_argument("core_group: cache size mismatch");
  }

  // Candidate centers.  Equal neighbor sets give bit-identical subsets, fits
  // and scores, so with the precomputed ordering each distinct set is scored
  // once through its smallest member — exactly the score and tie-rule result
  // of scanning every center (near k = n most sets coincide).  Without the
  // ordering only the k = n case collapses, where all sets trivially agree.
  std::vector<std::size_t> centers;
  if (cache != nullptr) {
    const std::size_t m = n - k;
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
    std::vector<std::vector<std::int32_t>> kept;  // sorted complement per kept
    centers.reserve(n);
    std::vector<std::int32_t> comp(m);
    for (std::size_t c = 0; c < n; ++c) {
      comp.assign(cache->order[c].begin() + static_cast<std::ptrdiff_t>(k),
                  cache->order[c].end());
      std::sort(comp.begin(), comp.end());
      std::uint64_t h = 1469598103934665603ull;
      for (std::int32_t v : comp)
        h = (h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(v))) *
            1099511628211ull;
      std::vector<std::size_t>& ids = buckets[h];
      bool dup = false;
      for (std::size_t id : ids)
        if (kept[id] == comp) {
          dup = true;
          break;
        }
      if (!dup) {
        ids.push_back(kept.size());
        kept.push_back(comp);
        centers.push_back(c);
      }
    }
  } else {
    centers.resize(k == n ? 1 : n);
    for (std::size_t c = 0; c < centers.size(); ++c) centers[c] = c;
  }
  const std::size_t n_centers = centers.size();

  struct Best {
    double score = kInf;
    std::size_t center = 0;
    bool valid = false;
  };
  std::vector<Best> best_per_center(n_centers);

  // Monotone upper bound on the winning score shared across threads; used
  // only to let the EPE quality stop early on centers that provably lose.
  double best_seen = kInf;

#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(n_centers);
       ++ci) {
    const std::size_t c = centers[static_cast<std::size_t>(ci)];
    std::vector<std::size_t> rows(k);
    if (cache != nullptr) {
      for (std::size_t i = 0; i < k; ++i)
        rows[i] = static_cast<std::size_t>(cache->order[c][i]);
    } else {
      std::vector<std::pair<double, std::int32_t>> dist(n);
      const std::size_t d = data.d_subgp();
      for (std::size_t i = 0; i < n; ++i) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double dv = xs(i, j) - xs(c, j);
          d2 += dv * dv;
        }
        dist[i] = {d2, static_cast<std::int32_t>(i)};
      }
      std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.end());
      std::sort(dist.begin(), dist.begin() + k);
      for (std::size_t i = 0; i < k; ++i)
        rows[i] = static_cast<std::size_t>(dist[i].second);
    }
    std::sort(rows.begin(), rows.end());
    double bound = kInf;
    if (quality == CoreQuality::Epe) {
#pragma omp atomic read
      bound = best_seen;
    }
    try {
      const SurvivalDataset sub = data.subset(rows);
      const CoxModel model = fit_cox(sub);
      const double score = core_quality_score(quality, model, sub, bound);
      if (std::isfinite(score)) {
        best_per_center[static_cast<std::size_t>(ci)] = {score, c, true};
#pragma omp critical(coxsg_core_group_best)
        if (score < best_seen) best_seen = score;
      }
    } catch (const std::runtime_error&) {
    }
  }

  // Deterministic reduction: lowest score, ties to the lowest center index
  // (candidates are in ascending center order).
  std::size_t win_ci = n_centers;
  for (std::size_t ci = 0; ci < n_centers; ++ci) {
    if (!best_per_center[ci].valid) continue;
    if (win_ci == n_centers ||
        best_per_center[ci].score < best_per_center[win_ci].score)
      win_ci = ci;
  }
  if (win_ci == n_centers)
    throw MethodError(MethodError::Code::NoValidCoreGroup,
                      "core_group: every neighborhood fit failed");
  const std::size_t win = best_per_center[win_ci].center;

  // Rebuild the winning neighborhood (cheaper than storing all of them).
  std::vector<std::size_t> rows(k);
  if (cache != nullptr) {
    for (std::size_t i = 0; i < k; ++i)
      rows[i] = static_cast<std::size_t>(cache->order[win][i]);
  } else {
    std::vector<std::pair<double, std::int32_t>> dist(n);
    const std::size_t d = data.d_subgp();
    for (std::size_t i = 0; i < n; ++i) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double dv = xs(i, j) - xs(win, j);
        d2 += dv * dv;
      }
      dist[i] = {d2, static_cast<std::int32_t>(i)};
    }
    std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.end());
    std::sort(dist.begin(), dist.begin() + k);
    for (std::size_t i = 0; i < k; ++i)
      rows[i] = static_cast<std::size_t>(dist[i].second);
  }
  std::sort(rows.begin(), rows.end());
  CoreGroup out;
  out.rows = std::move(rows);
  out.model = fit_cox(data.subset(out.rows));
  out.center = win;
  out.quality = best_per_center[win_ci].score;
  return out;
}

}  // namespace

CoreGroup core_group(const SurvivalDataset& data, double core_frac,
                     CoreQuality quality) {
  return core_group_impl(data, core_frac, quality, nullptr);
}

CoreGroup core_group(const SurvivalDataset& data, double core_frac,
                     CoreQuality quality, const NeighborOrder& cache) {
  return core_group_impl(data, core_frac, quality, &cache);
}

// --- Rejection scores ----------------------------------------------------------

double rejection_score(RejectionScore kind, std::span<const double> beta,
                       const SurvivalDataset& core, std::span<const double> x,
                       double t, bool event) {
  const std::size_t k = core.size();
  if (k == 0) throw std::invalid_argument("rejection_score: empty core");
  if (x.size() != core.d_adjust() || beta.size() != core.d_adjust())
    throw std::invalid_argument("rejection_score: dimension mismatch");

  double s_star = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) s_star += beta[j] * x[j];

  if (kind == RejectionScore::Crs)
    return rank_tail_score(beta, core, x, t, event).tau;

  const std::vector<double> s = risk_scores(beta, core);

  if (kind == RejectionScore::CIndex) {
    // Fraction of core points concordant with the test point: earlier core
    // events should out-score the test point; for an uncensored test point,
    // core points at risk at t should not.
    std::int64_t num = 0, den = 0;
    for (std::size_t i = 0; i < k; ++i) {
      if (core.times[i] < t && core.events[i]) {
        ++den;
        if (s[i] > s_star) ++num;
      } else if (event && core.times[i] >= t) {
        ++den;
        if (s[i] <= s_star) ++num;
      }
    }
    if (den == 0) return 1.0;  // vacuously concordant with every core point
    return static_cast<double>(num) / static_cast<double>(den);
  }

  // Partial-likelihood score.  Core rows are time-sorted; log_suffix[i] is
  // the log-sum-exp of core scores with index >= i.
  std::vector<double> log_suffix(k + 1, kNegInf);
  for (std::size_t i = k; i-- > 0;)
    log_suffix[i] = log_add_exp(s[i], log_suffix[i + 1]);
  const auto first_at_risk = static_cast<std::size_t>(
      std::lower_bound(core.times.begin(), core.times.end(), t) -
      core.times.begin());

  if (event) {
    if (first_at_risk == k) return 1.0;  // empty risk set beyond the test point
    return 1.0 / (1.0 + std::exp(log_suffix[first_at_risk] - s_star));
  }
  // Censored: sum the candidate partial-likelihood terms over core events at
  // or after t.  Each term's risk set {j : t_j >= t_i} starts at the first
  // row tied with t_i, not at i itself.
  std::vector<std::int32_t> first_tied, strict_after;
  tie_structure(core.times, first_tied, strict_after);
  double acc = 0.0;
  for (std::size_t i = first_at_risk; i < k; ++i)
    if (core.events[i])
      acc += 1.0 / (1.0 + std::exp(log_suffix[static_cast<std::size_t>(
                              first_tied[i])] -
                          s_star));
  return acc;
}

std::vector<double> rejection_scores(const SurvivalDataset& data,
                                     const SurvivalDataset& core,
                                     std::span<const double> beta,
                                     RejectionScore kind) {
  const std::size_t n = data.size();
  std::vector<double> scores(n);
#pragma omp parallel for schedule(dynamic, 32)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    scores[i] = rejection_score(kind, beta, core, data.x_adjust.row(i),
                                data.times[i], data.events[i] != 0);
  }
  return scores;
}

std::vector<std::uint8_t> rejection_labels(const SurvivalDataset& data,
                                           const SurvivalDataset& core,
                                           std::span<const double> beta,
                                           RejectionScore kind,
                                           double rej_quantile) {
  if (!(rej_quantile > 0.0) || rej_quantile > 0.5)
    throw std::invalid_argument("rejection_labels: quantile must be in (0, 0.5]");
  const std::vector<double> scores = rejection_scores(data, core, beta, kind);
  const double threshold = quantile_linear(scores, rej_quantile);
  std::vector<std::uint8_t> labels(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    labels[i] = scores[i] < threshold ? 1 : 0;
  return labels;
}

// --- GrowBox -------------------------------------------------------------------

Region grow_box(const Matrix& x, const std::vector<std::uint8_t>& rejected,
                std::span<const double> center,
                std::span<const double> speed_low,
                std::span<const double> speed_high, const Region& bounds) {
  const std::size_t n = x.rows(), d = x.cols();
  if (rejected.size() != n)
    throw std::invalid_argument("grow_box: rejected size mismatch");
  if (center.size() != d || speed_low.size() != d || speed_high.size() != d ||
      bounds.dim() != d)
    throw std::invalid_argument("grow_box: dimension mismatch");
  for (std::size_t j = 0; j < d; ++j) {
    if (!(speed_low[j] > 0.0) || !(speed_high[j] > 0.0))
      throw std::invalid_argument("grow_box: speeds must be positive");
    if (center[j] < bounds.lower[j] || center[j] > bounds.upper[j])
      throw std::invalid_argument("grow_box: center outside bounds");
  }

  // The 2d directions: index 2j is -speed_low[j]*e_j, index 2j+1 is
  // +speed_high[j]*e_j, so scanning ascending realizes the
  // dimension-then-sign tie-break order.
  std::vector<std::uint8_t> active(2 * d, 1);
  std::vector<double> face_offset(2 * d, kInf);  // a* of each fixed face
  std::vector<std::size_t> alive;
  for (std::size_t i = 0; i < n; ++i)
    if (rejected[i]) alive.push_back(i);

  // Directed value of a point along direction u: the time at which a face
  // leaving the center at that speed reaches the point's coordinate.
  const auto dir_value = [&](std::size_t point, std::size_t u) {
    const std::size_t j = u / 2;
    const double rel = x(point, j) - center[j];
    return u % 2 == 0 ? -rel / speed_low[j] : rel / speed_high[j];
  };

  std::size_t n_active = 2 * d;
  while (n_active > 0 && !alive.empty()) {
    // x* minimizes the directed norm over remaining points (ties: first in
    // row order); u* is its supporting direction (ties: lowest index).
    double best_norm = kInf;
    std::size_t best_dir = 0;
    for (std::size_t p : alive) {
      double norm = kNegInf;
      std::size_t arg = 0;
      for (std::size_t u = 0; u < 2 * d; ++u) {
        if (!active[u]) continue;
        const double v = dir_value(p, u);
        if (v > norm) {
          norm = v;
          arg = u;
        }
      }
      if (norm < best_norm) {
        best_norm = norm;
        best_dir = arg;
      }
    }
    active[best_dir] = 0;
    face_offset[best_dir] = best_norm;
    --n_active;
    // Drop every point at or beyond the fixed face; x* itself always goes.
    std::vector<std::size_t> kept;
    kept.reserve(alive.size());
    for (std::size_t p : alive)
      if (dir_value(p, best_dir) < best_norm) kept.push_back(p);
    alive = std::move(kept);
  }

  Region out;
  out.lower.resize(d);
  out.upper.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    out.lower[j] = active[2 * j] ? bounds.lower[j]
                                 : center[j] - face_offset[2 * j] * speed_low[j];
    out.upper[j] = active[2 * j + 1]
                       ? bounds.upper[j]
                       : center[j] + face_offset[2 * j + 1] * speed_high[j];
    out.lower[j] = std::max(out.lower[j], bounds.lower[j]);
    out.upper[j] = std::min(out.upper[j], bounds.upper[j]);
  }
  return out;
}

// --- DDGroup -------------------------------------------------------------------

Region ddgroup_expand(const SurvivalDataset& data,
                      const std::vector<std::size_t>& core_rows,
                      const std::vector<std::uint8_t>& rejected) {
  if (core_rows.empty())
    throw std::invalid_argument("ddgroup_expand: empty core");
  const std::size_t d = data.d_subgp();
  std::vector<double> mu, sigma;
  feature_moments(data, mu, sigma);
  const Matrix xs = standardized_subgp(data, mu, sigma);

  const Region raw_bounds = data.bounding_box();
  Region bounds;
  bounds.lower.resize(d);
  bounds.upper.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    bounds.lower[j] = (raw_bounds.lower[j] - mu[j]) / sigma[j];
    bounds.upper[j] = (raw_bounds.upper[j] - mu[j]) / sigma[j];
  }

  // Center: the core-group mean, standardized and clamped into bounds to
  // absorb round-off at the box edge.
  std::vector<double> center(d, 0.0);
  for (std::size_t r : core_rows)
    for (std::size_t j = 0; j < d; ++j) center[j] += data.x_subgp(r, j);
  for (std::size_t j = 0; j < d; ++j) {
    center[j] = (center[j] / static_cast<double>(core_rows.size()) - mu[j]) /
                sigma[j];
    center[j] = std::clamp(center[j], bounds.lower[j], bounds.upper[j]);
  }

  const std::vector<double> unit(d, 1.0);
  const Region grown = grow_box(xs, rejected, center, unit, unit, bounds);

  Region out;
  out.lower.resize(d);
  out.upper.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    out.lower[j] = std::max(mu[j] + sigma[j] * grown.lower[j],
                            raw_bounds.lower[j]);
    out.upper[j] = std::min(mu[j] + sigma[j] * grown.upper[j],
                            raw_bounds.upper[j]);
  }
  return out;
}

namespace {

Region ddgroup_impl(const SurvivalDataset& data, double core_frac,
                    double rej_quantile, DDGroupVariant variant,
                    const NeighborOrder* cache) {
  CoreQuality quality = CoreQuality::Epe;
  RejectionScore kind = RejectionScore::Crs;
  switch (variant) {
    case DDGroupVariant::Crs:
    case DDGroupVariant::NoExpand:
      break;
    case DDGroupVariant::CIndex:
      quality = CoreQuality::CIndex;
      kind = RejectionScore::CIndex;
      break;
    case DDGroupVariant::PartialLikelihood:
      quality = CoreQuality::PartialLikelihood;
      kind = RejectionScore::PartialLikelihood;
      break;
  }
  const CoreGroup core = cache == nullptr
                             ? core_group(data, core_frac, quality)
                             : core_group(data, core_frac, quality, *cache);
  if (variant == DDGroupVariant::NoExpand) return box_of_rows(data, core.rows);

  const SurvivalDataset core_data = data.subset(core.rows);
  const std::vector<std::uint8_t> labels =
      rejection_labels(data, core_data, core.model.beta, kind, rej_quantile);
  return ddgroup_expand(data, core.rows, labels);
}

}  // namespace

Region ddgroup(const SurvivalDataset& data, double core_frac,
               double rej_quantile, DDGroupVariant variant) {
  return ddgroup_impl(data, core_frac, rej_quantile, variant, nullptr);
}

Region ddgroup(const SurvivalDataset& data, double core_frac,
               double rej_quantile, DDGroupVariant variant,
               const NeighborOrder& cache) {
  return ddgroup_impl(data, core_frac, rej_quantile, variant, &cache);
}

// --- Quantile -------------------------------------------------------------------

double quantile_linear(std::vector<double> values, double q) {
  if (values.empty())
    throw std::invalid_argument("quantile_linear: empty sample");
  if (!(q >= 0.0) || !(q <= 1.0))
    throw std::invalid_argument("quantile_linear: q must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

}  // namespace coxsg
