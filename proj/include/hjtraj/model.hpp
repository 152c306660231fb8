#pragma once

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "hjtraj/errors.hpp"
#include "hjtraj/geometry.hpp"
#include "hjtraj/numeric.hpp"

namespace hjtraj {

/// One quadratic traffic landscape: traffic(z) = curvature/2 * |z-center|^2 + offset.
/// Negative curvature models a hotspot (repulsor dynamics), positive a traffic hole
/// (attractor). Zero curvature is disallowed.
struct QuadraticPhase {
  Vec2 center;       ///< hotspot/hole location
  double curvature;  ///< traffic per squared distance, nonzero
  double offset;     ///< traffic level at the center

  bool is_hotspot() const { return curvature < 0.0; }
};

enum class DynamicsKind { Hyperbolic, Trigonometric };

/// Dynamic regime of a phase for a given velocity-cost mass:
/// pulsation^2 = |curvature| / mass; hotspots give sinh/cosh arcs, holes sin/cos.
struct PhaseDynamics {
  double pulsation;  ///< omega, 1/time
  DynamicsKind kind;

  static PhaseDynamics of(const QuadraticPhase& phase, double mass) {
    return {std::sqrt(std::fabs(phase.curvature) / mass),
            phase.curvature < 0.0 ? DynamicsKind::Hyperbolic : DynamicsKind::Trigonometric};
  }

  /// Temporal phase accumulated over a duration.
  double temporal_phase(double dt) const { return pulsation * dt; }
};

/// A planning problem: travel from z_start at t_start to z_end at t_end across
/// one or two quadratic phases.
struct Instance {
  double mass;  ///< velocity-cost constant K > 0
  double t_start;
  double t_end;
  Vec2 z_start;
  Vec2 z_end;
  std::vector<QuadraticPhase> phases;  ///< one or two entries

  double duration() const { return t_end - t_start; }
  bool bi_phase() const { return phases.size() == 2; }
};

/// Impulsion and pulsation-scaled centered position, the pair propagated through
/// a hyperbolic phase by the exchange operator.
struct StateVector {
  Vec2 impulsion;        ///< p = mass * velocity
  Vec2 scaled_position;  ///< omega * (z - center)
};

/// Traffic intensity of one phase at a point.
inline double traffic_at(const QuadraticPhase& phase, const Vec2& z) {
  return 0.5 * phase.curvature * (z - phase.center).norm2() + phase.offset;
}

/// Running cost: kinetic term minus served traffic.
inline double lagrangian(double mass, const QuadraticPhase& phase, const Vec2& z,
                         const Vec2& velocity) {
  return 0.5 * mass * velocity.norm2() - traffic_at(phase, z);
}

/// Conserved energy along optimal arcs of a time-independent phase.
inline double hamiltonian(double mass, const QuadraticPhase& phase, const Vec2& z,
                          const Vec2& impulsion) {
  return impulsion.norm2() / (2.0 * mass) + traffic_at(phase, z);
}

/// Collapses a sum of quadratic terms curvature_i/2 * |z-center_i|^2 + offset_i with
/// nonzero total curvature into the single equivalent phase centered at the
/// curvature-weighted barycenter of the centers.
inline QuadraticPhase equivalent_phase(std::span<const QuadraticPhase> terms) {
  double total = 0.0;
  Vec2 weighted{0.0, 0.0};
  for (const auto& t : terms) {
    total += t.curvature;
    weighted += t.curvature * t.center;
  }
  if (std::fabs(total) < 1e-300) throw Error("equivalent_phase: total curvature is zero");
  const Vec2 barycenter = weighted / total;
  double offset = 0.0;
  for (const auto& t : terms)
    offset += t.offset + 0.5 * t.curvature * t.center.norm2();
  offset -= 0.5 * total * barycenter.norm2();
  return {barycenter, total, offset};
}

/// Relative discrepancy g between two impulsions (stop-criterion metric).
inline double discrepancy(const Vec2& a, const Vec2& b) {
  return numeric::discrepancy(a.norm(), b.norm(), (a - b).norm());
}

/// Relative discrepancy g between two Hamiltonian values.
inline double discrepancy(double a, double b) {
  return numeric::discrepancy(std::fabs(a), std::fabs(b), std::fabs(a - b));
}

}  // namespace hjtraj
