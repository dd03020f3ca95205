#pragma once

#include <cmath>
#include <limits>

// Helpers for base-2 log-domain arithmetic. All probabilities and rates that
// can reach magnitudes like 2^(2^(k^3)) are carried as their log2; only ever
// exponentiate when the result is known to fit a double.

namespace cmjsim {

inline constexpr double kLog2E = 1.4426950408889634074;  // log2(e)
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// 2^x with the usual saturation: underflows to 0, overflows to +inf.
inline double pow2(double x) { return std::exp2(x); }

// log2(1 - 2^e) for e <= 0, stable when 2^e is tiny (result -> -0) and when
// e -> 0 (result -> -inf). e == -inf gives exactly 0.
inline double log2_one_minus_pow2(double e) {
  return std::log1p(-std::exp2(e)) * kLog2E;
}

// log2(2^a + 2^b).
inline double log2_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double hi = a > b ? a : b;
  double lo = a > b ? b : a;
  return hi + std::log1p(std::exp2(lo - hi)) * kLog2E;
}

}  // namespace cmjsim
