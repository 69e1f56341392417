// Hot numeric kernels, compiled in their own translation unit with
// -ffast-math so gcc can vectorize exp/log via libmvec.  Each kernel writes
// per-row partial results; callers combine them in strict code.  Block sizes
// are fixed constants, never thread-count dependent, so results are
// bit-identical for any OpenMP thread count.
#pragma once

#include <cstdint>

namespace coxsg::kernels {

// partials[i] = sum_{j = risk_begin[i]}^{n-1} log(1 + exp(s[j] - s[i])) when
// events[i] != 0, else 0.  Inner sums are accumulated in fixed blocks of 512.
void epe_softplus_partials(const double* s, const std::int32_t* risk_begin,
                           const std::uint8_t* events, std::int32_t n,
                           double* partials);

// Same computation restricted to rows [row_begin, row_end); other entries of
// partials are untouched.  Row partials are independent, so evaluating them
// in chunks yields bit-identical values.
void epe_softplus_partials_range(const double* s,
                                 const std::int32_t* risk_begin,
                                 const std::uint8_t* events, std::int32_t n,
                                 std::int32_t row_begin, std::int32_t row_end,
                                 double* partials);

}  // namespace coxsg::kernels
