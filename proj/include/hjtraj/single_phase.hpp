#pragma once

#include <cmath>
#include <utility>

#include "hjtraj/errors.hpp"
#include "hjtraj/model.hpp"
#include "hjtraj/numeric.hpp"

namespace hjtraj {

/// Closed-form optimal arc between two fixed space-time endpoints inside one
/// quadratic phase. Boundary conditions hold by construction; every quantity
/// (position, velocity, impulsion, action) is evaluable analytically.
struct TrajectoryArc {
  QuadraticPhase phase;
  PhaseDynamics dynamics;
  double mass;
  double t_start;
  double t_end;
  Vec2 z_start;
  Vec2 z_end;

  double duration() const { return t_end - t_start; }
  double temporal_phase() const { return dynamics.temporal_phase(duration()); }
  Vec2 centered_start() const { return z_start - phase.center; }
  Vec2 centered_end() const { return z_end - phase.center; }
};

/// Position and velocity of an arc at one time.
struct ArcState {
  Vec2 position;
  Vec2 velocity;
};

/// Tolerance below which sin(omega*dt) is treated as a conjugate-point
/// degeneracy: the trigonometric boundary-value problem has no or infinitely
/// many solutions there.
inline constexpr double kSingularPeriodTolerance = 1e-9;

/// Solves the two-point boundary-value problem for one quadratic phase.
/// Throws SingularPeriodError for a trigonometric phase at a conjugate point.
inline TrajectoryArc solve_arc(double mass, const QuadraticPhase& phase, double t_start,
                               const Vec2& z_start, double t_end, const Vec2& z_end) {
  if (!(t_end > t_start)) throw Error("solve_arc: requires t_end > t_start");
  if (!(mass > 0.0)) throw Error("solve_arc: requires positive mass");
  if (phase.curvature == 0.0) throw Error("solve_arc: zero curvature phase");
  const PhaseDynamics dyn = PhaseDynamics::of(phase, mass);
  if (dyn.kind == DynamicsKind::Trigonometric) {
    const double phi = dyn.temporal_phase(t_end - t_start);
    if (std::fabs(std::sin(phi)) < kSingularPeriodTolerance)
      throw SingularPeriodError("solve_arc: sin(omega*dt) ~ 0, conjugate-point degeneracy");
  }
  return {phase, dyn, mass, t_start, t_end, z_start, z_end};
}

/// Position and velocity at time t in [t_start, t_end].
inline ArcState evaluate(const TrajectoryArc& arc, double t) {
  const double slack = 1e-9 * arc.duration();
  if (t < arc.t_start - slack || t > arc.t_end + slack)
    throw OutOfDomainError("evaluate: time outside arc window");
  t = std::min(std::max(t, arc.t_start), arc.t_end);

  const double omega = arc.dynamics.pulsation;
  const double phi = arc.temporal_phase();
  const double a = omega * (t - arc.t_start);
  const double b = omega * (arc.t_end - t);
  const Vec2 x1 = arc.centered_start();
  const Vec2 x2 = arc.centered_end();

  if (arc.dynamics.kind == DynamicsKind::Hyperbolic) {
    const Vec2 pos = x2 * numeric::sinh_ratio(a, phi) + x1 * numeric::sinh_ratio(b, phi);
    const Vec2 vel = (x2 * numeric::cosh_ratio(a, phi) - x1 * numeric::cosh_ratio(b, phi)) * omega;
    return {arc.phase.center + pos, vel};
  }
  const double s = std::sin(phi);
  const Vec2 pos = (x2 * std::sin(a) + x1 * std::sin(b)) / s;
  const Vec2 vel = (x2 * std::cos(a) - x1 * std::cos(b)) * (omega / s);
  return {arc.phase.center + pos, vel};
}

/// Impulsions mass*velocity at the two arc endpoints.
inline std::pair<Vec2, Vec2> endpoint_impulsions(const TrajectoryArc& arc) {
  const double omega = arc.dynamics.pulsation;
  const double phi = arc.temporal_phase();
  const Vec2 x1 = arc.centered_start();
  const Vec2 x2 = arc.centered_end();
  const double komega = arc.mass * omega;
  if (arc.dynamics.kind == DynamicsKind::Hyperbolic) {
    const double inv = numeric::inv_sinh(phi);
    const double ct = numeric::coth(phi);
    const Vec2 p1 = (x2 * inv - x1 * ct) * komega;
    const Vec2 p2 = (x2 * ct - x1 * inv) * komega;
    return {p1, p2};
  }
  const double s = std::sin(phi);
  const double c = std::cos(phi);
  const Vec2 p1 = (x2 - x1 * c) * (komega / s);
  const Vec2 p2 = (x2 * c - x1) * (komega / s);
  return {p1, p2};
}

/// Closed-form action of the arc, including the -offset*duration correction of
/// the shifted quadratic.
inline double value(const TrajectoryArc& arc) {
  const double omega = arc.dynamics.pulsation;
  const double phi = arc.temporal_phase();
  const Vec2 x1 = arc.centered_start();
  const Vec2 x2 = arc.centered_end();
  const double quad = x1.norm2() + x2.norm2();
  const double cross = 2.0 * x1.dot(x2);
  double core;
  if (arc.dynamics.kind == DynamicsKind::Hyperbolic) {
    core = quad * numeric::coth(phi) - cross * numeric::inv_sinh(phi);
  } else {
    const double s = std::sin(phi);
    core = (quad * std::cos(phi) - cross) / s;
  }
  return 0.5 * arc.mass * omega * core - arc.phase.offset * arc.duration();
}

/// Propagates (impulsion, omega*(z-center)) through a hyperbolic phase by the
/// closed-form exponential of the exchange operator A(u,v)=(v,u):
/// exp(A*phi) = cosh(phi)*I + sinh(phi)*A. The impulsion component carries the
/// mass, so the two rows scale by mass and 1/mass respectively.
inline StateVector propagate_state(const StateVector& state, double phi, double mass) {
  const double c = std::cosh(phi);
  const double s = std::sinh(phi);
  return {state.impulsion * c + state.scaled_position * (s * mass),
          state.impulsion * (s / mass) + state.scaled_position * c};
}

/// State vector of an arc at time t (impulsion and scaled centered position).
inline StateVector arc_state(const TrajectoryArc& arc, double t) {
  const ArcState st = evaluate(arc, t);
  return {st.velocity * arc.mass, (st.position - arc.phase.center) * arc.dynamics.pulsation};
}

}  // namespace hjtraj
