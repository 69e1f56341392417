#include "coxsg/synth.hpp"

#include <cmath>
#include <stdexcept>

namespace coxsg {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag,
                          std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(master) ^ tag) ^ index);
}

namespace {

SurvivalDataset assemble(Matrix features, std::vector<double> times,
                         std::vector<std::uint8_t> events) {
  Matrix subgp = features;
  return make_dataset(std::move(features), std::move(subgp), std::move(times),
                      std::move(events));
}

}  // namespace

SyntheticData gen_counter(std::size_t n, double m, double b, double c,
                          std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("gen_counter: n must be positive");
  if (!std::isfinite(m) || !std::isfinite(b) || b < 0.0)
    throw std::invalid_argument("gen_counter: bad hazard parameters");
  if (!(c > 0.0) || !(c < 1.0))
    throw std::invalid_argument("gen_counter: c must be in (0, 1)");

  Matrix x(n, 1);
  Rng fr(derive_seed(seed, seed_tag::kFeature, 0));
  for (std::size_t i = 0; i < n; ++i) x(i, 0) = fr.u01();

  std::vector<double> times(n);
  std::vector<std::uint8_t> events(n, 1);
  Rng tr(derive_seed(seed, seed_tag::kTime, 0));
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x(i, 0);
    const double rate = std::exp(m * xi - (xi >= c ? b : 0.0));
    times[i] = tr.exp1() / rate;
  }

  SyntheticData out{assemble(std::move(x), std::move(times), std::move(events)),
                    Region{{c}, {1.0}}, true};
  return out;
}

SyntheticData gen_nonlinear(std::size_t n, std::size_t d, std::uint64_t seed) {
  if (n == 0 || d == 0)
    throw std::invalid_argument("gen_nonlinear: n and d must be positive");
  // Half-width 6^(-1/d): the truth cube holds exactly one sixth of the
  // feature volume in every dimension count.
  const double half = std::pow(6.0, -1.0 / static_cast<double>(d));

  Matrix x(n, d);
  for (std::size_t j = 0; j < d; ++j) {
    Rng fr(derive_seed(seed, seed_tag::kFeature, j));
    for (std::size_t i = 0; i < n; ++i) x(i, j) = 2.0 * fr.u01() - 1.0;
  }

  std::vector<double> times(n);
  std::vector<std::uint8_t> events(n, 1);
  Rng tr(derive_seed(seed, seed_tag::kTime, 0));
  for (std::size_t i = 0; i < n; ++i) {
    bool inside = true;
    for (std::size_t j = 0; j < d; ++j)
      if (std::abs(x(i, j)) > half) inside = false;
    double lin = 0.0;
    if (inside) {
      for (std::size_t j = 0; j < d; ++j) lin += 10.0 * x(i, j);
    } else {
      lin = 0.5 * 10.0 * std::sin(100.0 * x(i, 0) * x(i, 0));
      for (std::size_t j = 1; j < d; ++j) lin += 0.5 * x(i, j);
    }
    times[i] = tr.exp1() / std::exp(lin);
  }

  Region truth;
  truth.lower.assign(d, -half);
  truth.upper.assign(d, half);
  SyntheticData out{assemble(std::move(x), std::move(times), std::move(events)),
                    std::move(truth), true};
  return out;
}

SyntheticData gen_plain_cox(std::size_t n, std::span<const double> beta,
                            const Region& bounds, double censor_rate,
                            std::uint64_t seed) {
  const std::size_t d = beta.size();
  if (n == 0 || d == 0)
    throw std::invalid_argument("gen_plain_cox: n and d must be positive");
  if (bounds.dim() != d)
    throw std::invalid_argument("gen_plain_cox: bounds dimension mismatch");
  for (std::size_t j = 0; j < d; ++j)
    if (!std::isfinite(bounds.lower[j]) || !std::isfinite(bounds.upper[j]) ||
        bounds.lower[j] >= bounds.upper[j])
      throw std::invalid_argument("gen_plain_cox: bounds must be finite with lower < upper");
  if (!(censor_rate >= 0.0) || censor_rate >= 1.0)
    throw std::invalid_argument("gen_plain_cox: censor_rate must be in [0, 1)");

  Matrix x(n, d);
  for (std::size_t j = 0; j < d; ++j) {
    Rng fr(derive_seed(seed, seed_tag::kFeature, j));
    const double lo = bounds.lower[j], w = bounds.upper[j] - bounds.lower[j];
    for (std::size_t i = 0; i < n; ++i) x(i, j) = lo + w * fr.u01();
  }

  std::vector<double> rate(n);
  for (std::size_t i = 0; i < n; ++i) {
    double lin = 0.0;
    for (std::size_t j = 0; j < d; ++j) lin += beta[j] * x(i, j);
    rate[i] = std::exp(lin);
  }

  std::vector<double> times(n);
  std::vector<std::uint8_t> events(n, 1);
  Rng tr(derive_seed(seed, seed_tag::kTime, 0));
  for (std::size_t i = 0; i < n; ++i) times[i] = tr.exp1() / rate[i];

  if (censor_rate > 0.0) {
    // Expected censored fraction for censoring rate rc, averaged over the
    // realized features: mean of rc / (rc + rate_i).  Monotone in rc, so
    // bisection always brackets for censor_rate in (0, 1).
    auto expected = [&](double rc) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += rc / (rc + rate[i]);
      return acc / static_cast<double>(n);
    };
    double lo = 1e-12, hi = 1e12;
    if (expected(lo) > censor_rate || expected(hi) < censor_rate)
      throw std::invalid_argument("gen_plain_cox: censor_rate not bracketable");
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (expected(mid) < censor_rate ? lo : hi) = mid;
    }
    const double rc = 0.5 * (lo + hi);
    Rng cr(derive_seed(seed, seed_tag::kCensor, 0));
    for (std::size_t i = 0; i < n; ++i) {
      const double censor_t = cr.exp1() / rc;
      if (censor_t < times[i]) {
        times[i] = censor_t;
        events[i] = 0;
      }
    }
  }

  SyntheticData out{assemble(std::move(x), std::move(times), std::move(events)),
                    Region{}, false};
  return out;
}

}  // namespace coxsg
