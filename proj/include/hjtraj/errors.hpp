#pragma once

#include <stdexcept>
#include <string>

namespace hjtraj {

/// Base class for every error raised by the library.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Trigonometric boundary-value problem at a conjugate point: sin(omega*dt) ~ 0.
struct SingularPeriodError : Error {
  using Error::Error;
};

/// Evaluation time outside the arc's [t_start, t_end] window.
struct OutOfDomainError : Error {
  using Error::Error;
};

/// The equal-traffic set of two phases is empty or collapses to a point.
struct DegenerateInterfaceError : Error {
  using Error::Error;
};

/// Projection target coincides with a circle center.
struct ProjectionAmbiguousError : Error {
  using Error::Error;
};

/// Crossing time outside the open planning window (t0, T).
struct OutOfWindowError : Error {
  using Error::Error;
};

/// Geometric non-convexity ratio undefined (midpoint of centered endpoints is zero).
struct UndefinedRatioError : Error {
  using Error::Error;
};

/// Operation requires hotspot (hyperbolic) phases.
struct UnsupportedPhaseError : Error {
  using Error::Error;
};

/// Bisection bracket endpoints map to the same zone.
struct NoSignChangeError : Error {
  using Error::Error;
};

/// h(tau) evaluated at a pole (tau equal to t0 or T).
struct PoleError : Error {
  using Error::Error;
};

struct EmptyInputError : Error {
  using Error::Error;
};

struct TooFewSamplesError : Error {
  using Error::Error;
};

struct ConstantFieldError : Error {
  using Error::Error;
};

/// Least-squares quadratic fit has vanishing curvature or a rank-deficient system.
struct DegenerateFitError : Error {
  using Error::Error;
};

/// Malformed input file (CSV or JSON); message carries the offending line.
struct ParseError : Error {
  using Error::Error;
};

/// File could not be opened for reading or writing.
struct IoError : Error {
  using Error::Error;
};

}  // namespace hjtraj
