#include "coxsg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "coxsg/crs.hpp"
#include "coxsg/errors.hpp"
#include "coxsg/kernels.hpp"
#include "coxsg/numerics.hpp"

namespace coxsg {

namespace {

std::vector<double> scores_of(std::span<const double> beta,
                              const SurvivalDataset& data, const char* who) {
  if (beta.size() != data.d_adjust())
    throw std::invalid_argument(std::string(who) + ": beta size mismatch");
  for (double b : beta)
    if (!std::isfinite(b))
      throw std::invalid_argument(std::string(who) + ": non-finite beta");
  const std::size_t n = data.size(), d = data.d_adjust();
  const double* x = data.x_adjust.data();
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = 0.0;
    for (std::size_t j = 0; j < d; ++j) v += x[i * d + j] * beta[j];
    s[i] = v;
  }
  return s;
}

}  // namespace

double empirical_epe(std::span<const double> beta, const SurvivalDataset& data) {
  const std::vector<double> s = scores_of(beta, data, "empirical_epe");
  const std::int32_t n = static_cast<std::int32_t>(data.size());
  std::vector<std::int32_t> first_tied, strict_after;
  tie_structure(data.times, first_tied, strict_after);

  long long pairs = 0;
  for (std::int32_t i = 0; i < n; ++i)
    if (data.events[i]) pairs += n - strict_after[i];
  if (pairs == 0)
    throw MetricError(MetricError::Code::NoComparablePairs,
                      "empirical_epe: no event has a strictly later point");

  std::vector<double> partials(n);
  kernels::epe_softplus_partials(s.data(), strict_after.data(),
                                 data.events.data(), n, partials.data());
  return pairwise_sum(partials) / static_cast<double>(pairs);
}

std::optional<double> empirical_epe_bounded(std::span<const double> beta,
                                            const SurvivalDataset& data,
                                            double bound) {
  const std::vector<double> s = scores_of(beta, data, "empirical_epe");
  const std::int32_t n = static_cast<std::int32_t>(data.size());
  std::vector<std::int32_t> first_tied, strict_after;
  tie_structure(data.times, first_tied, strict_after);

  long long pairs = 0;
  for (std::int32_t i = 0; i < n; ++i)
    if (data.events[i]) pairs += n - strict_after[i];
  if (pairs == 0)
    throw MetricError(MetricError::Code::NoComparablePairs,
                      "empirical_epe: no event has a strictly later point");

  std::vector<double> partials(n, 0.0);
  if (!(bound < std::numeric_limits<double>::infinity())) {
    kernels::epe_softplus_partials(s.data(), strict_after.data(),
                                   data.events.data(), n, partials.data());
    return pairwise_sum(partials) / static_cast<double>(pairs);
  }

  // The cutoff on the running sum carries a small relative margin so that the
  // difference between this sequential accumulation and the pairwise one used
  // for the final value can never trigger a spurious early exit.
  const double cutoff = bound * static_cast<double>(pairs) * (1.0 + 1e-9);
  constexpr std::int32_t kChunk = 256;
  double running = 0.0;
  for (std::int32_t begin = 0; begin < n; begin += kChunk) {
    const std::int32_t end = std::min(begin + kChunk, n);
    kernels::epe_softplus_partials_range(s.data(), strict_after.data(),
                                         data.events.data(), n, begin, end,
                                         partials.data());
    for (std::int32_t i = begin; i < end; ++i) running += partials[i];
    if (running > cutoff) return std::nullopt;
  }
  return pairwise_sum(partials) / static_cast<double>(pairs);
}

double c_index(std::span<const double> beta, const SurvivalDataset& data) {
  const std::vector<double> s = scores_of(beta, data, "c_index");
  const std::int32_t n = static_cast<std::int32_t>(data.size());
  std::vector<std::int32_t> first_tied, strict_after;
  tie_structure(data.times, first_tied, strict_after);

  long long comparable = 0, concordant = 0, tied = 0;
#pragma omp parallel for schedule(dynamic, 16) reduction(+ : comparable, concordant, tied)
  for (std::int32_t i = 0; i < n; ++i) {
    if (!data.events[i]) continue;
    const double si = s[i];
    long long conc = 0, tie = 0;
    for (std::int32_t j = strict_after[i]; j < n; ++j) {
      conc += si > s[j];
      tie += si == s[j];
    }
    comparable += n - strict_after[i];
    concordant += conc;
    tied += tie;
  }
  if (comparable == 0)
    throw MetricError(MetricError::Code::NoComparablePairs,
                      "c_index: no comparable pair");
  return (static_cast<double>(concordant) + 0.5 * static_cast<double>(tied)) /
         static_cast<double>(comparable);
}

double rejection_fraction(std::span<const double> beta,
                          const SurvivalDataset& data, double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw std::invalid_argument("rejection_fraction: alpha must be in (0, 1)");
  const std::int32_t m = static_cast<std::int32_t>(data.size());
  if (m < 2)
    throw MetricError(MetricError::Code::GroupTooSmall,
                      "rejection_fraction: need at least 2 points");
  const std::vector<double> s = scores_of(beta, data, "rejection_fraction");

  std::vector<std::uint8_t> rejected(m, 0);
#pragma omp parallel
  {
    std::vector<double> cs(m - 1), ct(m - 1);
    std::vector<std::uint8_t> ce(m - 1);
#pragma omp for schedule(dynamic, 8)
    for (std::int32_t i = 0; i < m; ++i) {
      for (std::int32_t j = 0, k = 0; j < m; ++j) {
        if (j == i) continue;
        cs[k] = s[j];
        ct[k] = data.times[j];
        ce[k] = data.events[j];
        ++k;
      }
      const TailScore tail = detail::rank_tail_from_scores(
          cs, ct, ce, s[i], data.times[i], data.events[i] != 0);
      rejected[i] = tail.tau < alpha;
    }
  }
  long long hits = 0;
  for (auto r : rejected) hits += r;
  return static_cast<double>(hits) / static_cast<double>(m);
}

RegionScore region_f1(const Region& estimate, const Region& truth,
                      const Region& bounds) {
  if (estimate.dim() != truth.dim() || estimate.dim() != bounds.dim())
    throw std::invalid_argument("region_f1: dimension mismatch");
  const Region clipped = estimate.intersect(bounds);
  RegionScore out;
  if (clipped.empty()) return out;
  const double ve = clipped.volume();
  const double vt = truth.volume();
  const double vi = clipped.intersect(truth).volume();
  if (!(vi > 0.0)) return out;
  out.precision = ve > 0.0 ? vi / ve : 0.0;
  out.recall = vt > 0.0 ? vi / vt : 0.0;
  if (out.precision + out.recall > 0.0)
    out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

}  // namespace coxsg
