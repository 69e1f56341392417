// Synthetic benchmark generators and the deterministic RNG scheme.
//
// Reproducibility contract: every draw comes from a std::mt19937_64 (fully
// specified by the standard, so byte-identical across platforms) seeded via
// derive_seed(master, tag, index).  Each column and each generation phase
// gets its own sub-stream: features use one stream per column, event times
// one stream, censoring times one stream, shuffles one stream per replicate.
// Uniforms are built from raw 64-bit draws ((x >> 11) * 2^-53), never from
// std::uniform_real_distribution, whose output is implementation-defined.
#pragma once

#include <cstdint>
#include <random>

#include "coxsg/dataset.hpp"

namespace coxsg {

// splitmix64 step; the standard way to decorrelate integer seeds.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag,
                          std::uint64_t index);

// Sub-stream tags used by the generators and the harness.
namespace seed_tag {
inline constexpr std::uint64_t kFeature = 1;  // index = column
inline constexpr std::uint64_t kTime = 2;
inline constexpr std::uint64_t kCensor = 3;
inline constexpr std::uint64_t kShuffle = 4;  // index = replicate
inline constexpr std::uint64_t kData = 5;
}  // namespace seed_tag

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  // Uniform on [0, 1), 53 random bits.
  double u01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  // Standard exponential by inversion.
  double exp1() { return -std::log1p(-u01()); }
  // Uniform integer in [0, n); n > 0.
  std::size_t below(std::size_t n) {
    return static_cast<std::size_t>(u01() * static_cast<double>(n));
  }

 private:
  std::mt19937_64 eng_;
};

struct SyntheticData {
  SurvivalDataset data;
  Region truth;  // empty vectors when the generator has no ground truth
  bool has_truth = false;
};

// Single covariate x ~ U[0,1]; T | x exponential with rate e^{m x} for
// x < c and e^{m x - b} for x >= c; fully uncensored.  The largest region
// where one Cox model holds with minimal error is [c, 1].
SyntheticData gen_counter(std::size_t n = 4000, double m = 10.0, double b = 2.0,
                          double c = 0.4, std::uint64_t seed = 0);

// x ~ U[-1,1]^d.  Inside the cube R* = [-6^{-1/d}, 6^{-1/d}]^d (one sixth of
// the volume for every d) the hazard is e^{10 1^T x}; outside, the first
// coordinate is warped to 10 sin(100 x_1^2) and the hazard is e^{0.5 1^T xt}.
// Baseline hazard 1 everywhere, fully uncensored.
SyntheticData gen_nonlinear(std::size_t n = 4000, std::size_t d = 2,
                            std::uint64_t seed = 0);

// Uniform features on the given box, T ~ Exp(e^{beta^T x}); independent
// exponential censoring with its rate chosen by bisection so the expected
// censored fraction (averaged over the realized features) equals
// censor_rate.  censor_rate = 0 means no censoring.
SyntheticData gen_plain_cox(std::size_t n, std::span<const double> beta,
                            const Region& bounds, double censor_rate,
                            std::uint64_t seed);

}  // namespace coxsg
