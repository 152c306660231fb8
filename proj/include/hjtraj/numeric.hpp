#pragma once

#include <cmath>

namespace hjtraj::numeric {

/// Arguments above this threshold switch to exponential-difference forms so
/// hyperbolic ratios stay finite while sinh/cosh themselves would overflow.
inline constexpr double kLargePhase = 30.0;

/// sinh(a)/sinh(b) for 0 <= a <= b, stable for arbitrarily large b.
inline double sinh_ratio(double a, double b) {
  if (b <= kLargePhase) return std::sinh(a) / std::sinh(b);
  return std::exp(a - b) * (1.0 - std::exp(-2.0 * a)) / (1.0 - std::exp(-2.0 * b));
}

/// cosh(a)/sinh(b) for 0 <= a <= b, stable for arbitrarily large b.
inline double cosh_ratio(double a, double b) {
  if (b <= kLargePhase) return std::cosh(a) / std::sinh(b);
  return std::exp(a - b) * (1.0 + std::exp(-2.0 * a)) / (1.0 - std::exp(-2.0 * b));
}

/// 1/sinh(x) for x > 0, stable for arbitrarily large x.
inline double inv_sinh(double x) {
  if (x <= kLargePhase) return 1.0 / std::sinh(x);
  return 2.0 * std::exp(-x) / (1.0 - std::exp(-2.0 * x));
}

/// cosh(x)/sinh(x); odd, diverges at 0 (callers guard the pole).
inline double coth(double x) { return 1.0 / std::tanh(x); }

inline double sign(double x) { return (x > 0.0) - (x < 0.0); }

/// Relative discrepancy between two vectors or scalars, ||x-y||/min(||x||,||y||).
/// Falls back to the larger magnitude (floored to 1e-12) when one side vanishes,
/// so rest states do not divide by zero.
inline double discrepancy(double nx, double ny, double ndiff) {
  double denom = std::min(nx, ny);
  if (denom < 1e-12) denom = std::max({nx, ny, 1e-12});
  return ndiff / denom;
}

}  // namespace hjtraj::numeric
