// Small numeric helpers shared across modules.  These live in strict
// (non-fast-math) translation units so their rounding behavior is exactly
// what the expressions say.
#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

namespace coxsg {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(e^a + e^b), safe for any mix of finite values and -inf.
inline double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = a > b ? a : b;
  const double d = a > b ? b - a : a - b;
  return m + std::log1p(std::exp(d));
}

// log(e^a - e^b) for a >= b; clamps to -inf when the difference underflows.
inline double log_diff_exp(double a, double b) {
  if (b == kNegInf) return a;
  const double d = b - a;  // <= 0
  const double r = -std::expm1(d);
  if (r <= 0.0) return kNegInf;
  return a + std::log(r);
}

// log(1 + e^z) without overflow at either end.
inline double softplus(double z) {
  if (z > 37.0) return z;
  if (z < -37.0) return std::exp(z);
  return std::log1p(std::exp(z));
}

// Recursive pairwise summation: error grows like log(n)*eps instead of n*eps.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

}  // namespace coxsg
