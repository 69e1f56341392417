// Small helpers for building randomized test datasets.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "coxsg/dataset.hpp"
#include "coxsg/synth.hpp"

namespace coxsg::testutil {

// Random dataset with x_adjust == x_subgp ~ U[-1,1]^d, exponential-ish times,
// a controllable censored fraction, and (optionally) quantized times so tie
// blocks actually occur.  Guarantees at least d+2 events so Cox fits succeed.
inline SurvivalDataset random_dataset(std::uint64_t seed, std::size_t n,
                                      std::size_t d, double censor_frac,
                                      bool force_ties) {
  Rng rng(seed);
  Matrix x(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) x(i, j) = 2.0 * rng.u01() - 1.0;
  std::vector<double> times(n);
  std::vector<std::uint8_t> events(n);
  std::size_t n_events = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double t = rng.exp1() + 0.05;
    if (force_ties) t = std::ceil(t * 4.0) / 4.0;
    times[i] = t;
    events[i] = rng.u01() >= censor_frac ? 1 : 0;
    n_events += events[i];
  }
  for (std::size_t i = 0; i < n && n_events < d + 2; ++i) {
    if (!events[i]) {
      events[i] = 1;
      ++n_events;
    }
  }
  Matrix x_copy = x;
  return make_dataset(std::move(x), std::move(x_copy), std::move(times),
                      std::move(events));
}

}  // namespace coxsg::testutil
