// Fast-math translation unit; see kernels.hpp for the contract.
//
// The softplus here is log(1 + exp(z)) evaluated directly: z is clamped at
// 37 before the exp (beyond that the result equals z in double precision,
// chosen by a blend), so exp never overflows and the whole loop vectorizes.
// Accumulation runs in fixed 512-wide blocks: block sums are added into the
// per-row partial one at a time, which caps the sequential rounding chain at
// ~512 terms regardless of row length.  Strict-code callers combine the
// per-row partials pairwise; nothing here depends on the thread count.
#include "coxsg/kernels.hpp"

#include <cmath>

namespace coxsg::kernels {

namespace {

inline double softplus_block(const double* s, double si, std::int32_t count) {
  double acc = 0.0;
  for (std::int32_t j = 0; j < count; ++j) {
    const double z = s[j] - si;
    const double zc = z < 37.0 ? z : 37.0;
    const double v = std::log(1.0 + std::exp(zc));
    acc += z > 37.0 ? z : v;
  }
  return acc;
}

}  // namespace

void epe_softplus_partials(const double* s, const std::int32_t* risk_begin,
                           const std::uint8_t* events, std::int32_t n,
                           double* partials) {
  epe_softplus_partials_range(s, risk_begin, events, n, 0, n, partials);
}

void epe_softplus_partials_range(const double* s,
                                 const std::int32_t* risk_begin,
                                 const std::uint8_t* events, std::int32_t n,
                                 std::int32_t row_begin, std::int32_t row_end,
                                 double* partials) {
  constexpr std::int32_t kBlock = 512;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int32_t i = row_begin; i < row_end; ++i) {
    if (!events[i] || risk_begin[i] >= n) {
      partials[i] = 0.0;
      continue;
    }
    const double si = s[i];
    double total = 0.0;
    std::int32_t j = risk_begin[i];
    while (j < n) {
      const std::int32_t count = n - j < kBlock ? n - j : kBlock;
      total += softplus_block(s + j, si, count);
      j += count;
    }
    partials[i] = total;
  }
}

}  // namespace coxsg::kernels
