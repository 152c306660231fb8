#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <variant>

#include "hjtraj/errors.hpp"
#include "hjtraj/model.hpp"
#include "hjtraj/numeric.hpp"
#include "hjtraj/single_phase.hpp"

namespace hjtraj {

/// Straight equal-traffic interface. Zone 2 is the open half-plane
/// normal . z > offset; the unit normal points from zone 1 into zone 2.
struct LineInterface {
  Vec2 normal;  ///< unit length
  double offset;
};

/// Circular equal-traffic interface. The zone-2 side (inside or outside) is
/// fixed at construction so the oriented normal is well defined.
struct CircleInterface {
  Vec2 center;
  double radius;  ///< > 0
  bool zone2_outside;
};

/// Equal-traffic curve separating the two phases of a bi-phase landscape:
/// a line when the curvatures match, otherwise a circle.
struct Interface {
  std::variant<LineInterface, CircleInterface> geometry;

  bool is_line() const { return std::holds_alternative<LineInterface>(geometry); }

  /// Unit normal at a point, oriented from zone 1 toward zone 2.
  Vec2 normal_at(const Vec2& z) const {
    if (const auto* line = std::get_if<LineInterface>(&geometry)) return line->normal;
    const auto& circle = std::get<CircleInterface>(geometry);
    const Vec2 radial = z - circle.center;
    const double r = radial.norm();
    if (r < 1e-300) throw ProjectionAmbiguousError("normal_at: point at circle center");
    return circle.zone2_outside ? radial / r : radial / -r;
  }

  /// Signed offset along the oriented normal; positive strictly inside zone 2.
  double zone2_excess(const Vec2& z) const {
    if (const auto* line = std::get_if<LineInterface>(&geometry))
      return line->normal.dot(z) - line->offset;
    const auto& circle = std::get<CircleInterface>(geometry);
    const double d = (z - circle.center).norm() - circle.radius;
    return circle.zone2_outside ? d : -d;
  }

  bool zone2_contains(const Vec2& z) const { return zone2_excess(z) > 0.0; }
};

/// Zone predicate of the B-curve bisection: true iff phase 2 serves strictly
/// more traffic than phase 1 at z. Ties count as zone 1.
inline bool in_zone2(const QuadraticPhase& phase1, const QuadraticPhase& phase2, const Vec2& z) {
  return traffic_at(phase2, z) > traffic_at(phase1, z);
}

/// Builds the equal-traffic interface of two distinct phases. Equal curvatures
/// give the weighted bisector line; distinct curvatures give the circle of the
/// completed-square quadratic difference. Throws DegenerateInterfaceError when
/// one phase dominates everywhere or the circle collapses.
inline Interface interface_from_phases(const QuadraticPhase& phase1, const QuadraticPhase& phase2) {
  const double d = phase1.curvature - phase2.curvature;
  if (d == 0.0) {
    // traffic2 - traffic1 is affine: grad . z + base.
    const Vec2 grad = (phase2.center - phase1.center) * -phase1.curvature;
    const double base = 0.5 * phase1.curvature * (phase2.center.norm2() - phase1.center.norm2()) +
                        phase2.offset - phase1.offset;
    const double g = grad.norm();
    if (g < 1e-300)
      throw DegenerateInterfaceError("interface_from_phases: no equal-traffic line");
    return Interface{LineInterface{grad / g, -base / g}};
  }
  const Vec2 center = (phase1.curvature * phase1.center - phase2.curvature * phase2.center) / d;
  const double base = 0.5 * (phase1.curvature * phase1.center.norm2() -
                             phase2.curvature * phase2.center.norm2()) +
                      phase1.offset - phase2.offset;
  const double radius2 = center.norm2() - 2.0 * base / d;
  if (!(radius2 > 0.0))
    throw DegenerateInterfaceError("interface_from_phases: equal-traffic circle is empty");
  return Interface{CircleInterface{center, std::sqrt(radius2), d < 0.0}};
}

/// Interface of a bi-phase instance.
inline Interface instance_interface(const Instance& instance) {
  if (!instance.bi_phase()) throw Error("instance_interface: instance is not bi-phase");
  return interface_from_phases(instance.phases[0], instance.phases[1]);
}

/// Euclidean projection onto the interface: foot of the perpendicular for a
/// line, radial projection for a circle. Throws ProjectionAmbiguousError when
/// the point coincides with the circle center.
inline Vec2 project_onto_interface(const Interface& interface, const Vec2& b) {
  if (const auto* line = std::get_if<LineInterface>(&interface.geometry))
    return b - line->normal * (line->normal.dot(b) - line->offset);
  const auto& circle = std::get<CircleInterface>(interface.geometry);
  const Vec2 radial = b - circle.center;
  const double r = radial.norm();
  if (r < 1e-300)
    throw ProjectionAmbiguousError("project_onto_interface: point at circle center");
  return circle.center + radial * (circle.radius / r);
}

namespace detail {

inline void require_two_hotspots(const Instance& instance, const char* where) {
  if (!instance.bi_phase()) throw Error(std::string(where) + ": instance is not bi-phase");
  for (const auto& phase : instance.phases)
    if (!phase.is_hotspot())
      throw UnsupportedPhaseError(std::string(where) +
                                  ": bi-phase formulas require hotspot (hyperbolic) phases");
}

struct BiPhaseSplit {
  PhaseDynamics dyn1, dyn2;
  double phi1, phi2;  ///< temporal phases of the two sub-arcs
};

inline BiPhaseSplit split_at(const Instance& instance, double tau) {
  const PhaseDynamics d1 = PhaseDynamics::of(instance.phases[0], instance.mass);
  const PhaseDynamics d2 = PhaseDynamics::of(instance.phases[1], instance.mass);
  return {d1, d2, d1.temporal_phase(tau - instance.t_start),
          d2.temporal_phase(instance.t_end - tau)};
}

}  // namespace detail

/// Spatial curvature coefficient h(tau) = w1*coth(phi1) + w2*coth(phi2) of the
/// two-phase cost at fixed tau. Defined by analytic continuation of coth for
/// tau outside [t_start, t_end]; throws PoleError at tau = t_start or t_end.
inline double h_coefficient(const Instance& instance, double tau) {
  detail::require_two_hotspots(instance, "h_coefficient");
  const auto s = detail::split_at(instance, tau);
  const double pole_guard = 1e-15 * std::max(1.0, instance.duration());
  if (std::fabs(tau - instance.t_start) < pole_guard || std::fabs(instance.t_end - tau) < pole_guard)
    throw PoleError("h_coefficient: pole at window endpoint");
  return s.dyn1.pulsation * numeric::coth(s.phi1) + s.dyn2.pulsation * numeric::coth(s.phi2);
}

/// The B point: unique zero of the spatial gradient of the two-phase cost at
/// fixed crossing time, grad_xi S = mass*h*(xi - B). Continuous on (t_start,
/// t_end) with limits z_start and z_end at the window edges.
inline Vec2 b_point(const Instance& instance, double tau) {
  detail::require_two_hotspots(instance, "b_point");
  if (!(tau > instance.t_start && tau < instance.t_end))
    throw OutOfWindowError("b_point: tau outside (t_start, t_end)");
  const auto s = detail::split_at(instance, tau);
  const double w1 = s.dyn1.pulsation;
  const double w2 = s.dyn2.pulsation;
  const Vec2 c1 = instance.phases[0].center;
  const Vec2 c2 = instance.phases[1].center;
  const double h = w1 * numeric::coth(s.phi1) + w2 * numeric::coth(s.phi2);
  const Vec2 num = c1 * (w1 * numeric::coth(s.phi1)) + c2 * (w2 * numeric::coth(s.phi2)) +
                   (instance.z_start - c1) * (w1 * numeric::inv_sinh(s.phi1)) +
                   (instance.z_end - c2) * (w2 * numeric::inv_sinh(s.phi2));
  return num / h;
}

/// The two optimal sub-arcs of a bi-phase trajectory pinned at (tau, xi).
inline std::pair<TrajectoryArc, TrajectoryArc> split_arcs(const Instance& instance, double tau,
                                                          const Vec2& xi) {
  if (!instance.bi_phase()) throw Error("split_arcs: instance is not bi-phase");
  if (!(tau > instance.t_start && tau < instance.t_end))
    throw OutOfWindowError("split_arcs: tau outside (t_start, t_end)");
  return {solve_arc(instance.mass, instance.phases[0], instance.t_start, instance.z_start, tau, xi),
          solve_arc(instance.mass, instance.phases[1], tau, xi, instance.t_end, instance.z_end)};
}

/// Sum of the two sub-arc actions: the two-phase cost at (tau, xi).
inline double two_phase_cost(const Instance& instance, double tau, const Vec2& xi) {
  const auto [arc1, arc2] = split_arcs(instance, tau, xi);
  return value(arc1) + value(arc2);
}

/// Interface-crossing optimality residuals at a candidate (tau, xi).
struct CrossingDiagnostics {
  Vec2 p_before;          ///< impulsion at tau on the first arc
  Vec2 p_after;           ///< impulsion at tau on the second arc
  double H_before;        ///< Hamiltonian of phase 1 at (xi, p_before)
  double H_after;         ///< Hamiltonian of phase 2 at (xi, p_after)
  Vec2 impulsion_gap;     ///< p_before - p_after (spatial gradient of the cost)
  double hamiltonian_gap; ///< H_after - H_before (time gradient of the cost)
  double multiplier;      ///< impulsion gap along the oriented interface normal
};

/// Evaluates the stationarity residuals of the crossing conditions: the
/// impulsion jump, the Hamiltonian jump, and the Lagrange multiplier as the
/// normal component of the jump.
inline CrossingDiagnostics crossing_residuals(const Instance& instance, const Interface& interface,
                                              double tau, const Vec2& xi) {
  const auto [arc1, arc2] = split_arcs(instance, tau, xi);
  const Vec2 p_before = endpoint_impulsions(arc1).second;
  const Vec2 p_after = endpoint_impulsions(arc2).first;
  const double H_before = hamiltonian(instance.mass, instance.phases[0], xi, p_before);
  const double H_after = hamiltonian(instance.mass, instance.phases[1], xi, p_after);
  const Vec2 gap = p_before - p_after;
  return {p_before, p_after,          H_before, H_after,
          gap,      H_after - H_before, gap.dot(interface.normal_at(xi))};
}

inline CrossingDiagnostics crossing_residuals(const Instance& instance, double tau,
                                              const Vec2& xi) {
  return crossing_residuals(instance, instance_interface(instance), tau, xi);
}

/// Structure of a 3x3 cost Hessian [[alpha, mixed^T], [mixed, mass*spatial*I]]
/// over a joint (time, position) variable, with its closed-form spectrum.
struct HessianSummary {
  double alpha;    ///< second time derivative of the cost
  double spatial;  ///< isotropic spatial coefficient g (single) or h (two-phase)
  Vec2 mixed;      ///< time-space coupling block
  std::array<double, 3> eigenvalues;  ///< ascending
  bool positive_definite;
};

namespace detail {

inline HessianSummary summarize_hessian(double alpha, double spatial, const Vec2& mixed,
                                        double mass) {
  const double kg = mass * spatial;
  // Spectrum of the arrow matrix: kg on the mixed-orthogonal space direction,
  // plus the roots of (kg - v)(alpha - v) = |mixed|^2.
  const double disc = std::sqrt((alpha - kg) * (alpha - kg) + 4.0 * mixed.norm2());
  std::array<double, 3> eig{0.5 * (alpha + kg - disc), kg, 0.5 * (alpha + kg + disc)};
  std::sort(eig.begin(), eig.end());
  return {alpha, spatial, mixed, eig, eig[0] > 0.0};
}

inline double arc_alpha(const TrajectoryArc& arc) {
  const auto [p1, p2] = endpoint_impulsions(arc);
  return arc.dynamics.pulsation * p1.dot(p2) * numeric::inv_sinh(arc.temporal_phase()) / arc.mass;
}

}  // namespace detail

/// Hessian of the single-phase cost with respect to one joint endpoint
/// variable (time, position); which_end selects the start (1) or end (2).
/// Hyperbolic arcs only.
inline HessianSummary single_phase_hessian(const TrajectoryArc& arc, int which_end) {
  if (arc.dynamics.kind != DynamicsKind::Hyperbolic)
    throw UnsupportedPhaseError("single_phase_hessian: hyperbolic arcs only");
  if (which_end != 1 && which_end != 2) throw Error("single_phase_hessian: which_end must be 1 or 2");
  const double phi = arc.temporal_phase();
  const double omega = arc.dynamics.pulsation;
  const auto [p1, p2] = endpoint_impulsions(arc);
  const double alpha = detail::arc_alpha(arc);
  const double g = omega * numeric::coth(phi);
  const Vec2 other = (which_end == 1) ? p2 : p1;
  const Vec2 mixed = other * (-omega * numeric::inv_sinh(phi));
  return detail::summarize_hessian(alpha, g, mixed, arc.mass);
}

/// Hessian of the two-phase cost with respect to the crossing pair (tau, xi):
/// the sum of the two single-phase endpoint Hessians.
inline HessianSummary two_phase_hessian(const Instance& instance, double tau, const Vec2& xi) {
  detail::require_two_hotspots(instance, "two_phase_hessian");
  const auto [arc1, arc2] = split_arcs(instance, tau, xi);
  const double alpha = detail::arc_alpha(arc1) + detail::arc_alpha(arc2);
  const double h = arc1.dynamics.pulsation * numeric::coth(arc1.temporal_phase()) +
                   arc2.dynamics.pulsation * numeric::coth(arc2.temporal_phase());
  const Vec2 p_start = endpoint_impulsions(arc1).first;
  const Vec2 p_end = endpoint_impulsions(arc2).second;
  const Vec2 mixed =
      -(p_start * (arc1.dynamics.pulsation * numeric::inv_sinh(arc1.temporal_phase())) +
        p_end * (arc2.dynamics.pulsation * numeric::inv_sinh(arc2.temporal_phase())));
  return detail::summarize_hessian(alpha, h, mixed, instance.mass);
}

enum class ConvexityVerdict { SufficientlyNonconvex, Inconclusive };

/// Geometric non-convexity test: with u the midpoint and v the half-gap of the
/// centered endpoints, |v|/|u| < tanh^2(phi/2) forces alpha < 0. Throws
/// UndefinedRatioError when the midpoint vanishes.
inline ConvexityVerdict convexity_test(const TrajectoryArc& arc) {
  if (arc.dynamics.kind != DynamicsKind::Hyperbolic)
    throw UnsupportedPhaseError("convexity_test: hyperbolic arcs only");
  const Vec2 u = (arc.centered_start() + arc.centered_end()) * 0.5;
  const Vec2 v = (arc.centered_end() - arc.centered_start()) * 0.5;
  const double un = u.norm();
  if (un == 0.0) throw UndefinedRatioError("convexity_test: centered endpoints are opposite");
  const double t = std::tanh(0.5 * arc.temporal_phase());
  return (v.norm() / un < t * t) ? ConvexityVerdict::SufficientlyNonconvex
                                 : ConvexityVerdict::Inconclusive;
}

/// Open disk; radius is strictly positive wherever one is returned.
struct Disk {
  Vec2 center;
  double radius;

  bool contains(const Vec2& z) const { return (z - center).norm() < radius; }
};

/// Affine isotropic quadratic form q(xi) = quad*|xi|^2 + linear.xi + constant.
struct IsotropicQuadratic {
  double quad;
  Vec2 linear;
  double constant;

  double eval(const Vec2& xi) const { return quad * xi.norm2() + linear.dot(xi) + constant; }

  /// Open sublevel set {q < 0}; empty (nullopt) when the completed square has
  /// no interior. A squared radius at roundoff scale counts as radius zero.
  /// Requires quad > 0.
  std::optional<Disk> negative_set() const {
    const Vec2 center = linear / (-2.0 * quad);
    const double radius2 = center.norm2() - constant / quad;
    const double noise = 8.0 * std::numeric_limits<double>::epsilon() *
                         (center.norm2() + std::fabs(constant / quad));
    if (!(radius2 > noise)) return std::nullopt;
    return Disk{center, std::sqrt(radius2)};
  }
};

namespace detail {

/// alpha of one sub-arc as a quadratic form in the crossing position. The
/// fixed centered endpoint and the temporal phase of the sub-arc are given.
inline IsotropicQuadratic alpha_form(double mass, const PhaseDynamics& dyn, double phi,
                                     const Vec2& center, const Vec2& fixed_centered) {
  const double w = dyn.pulsation;
  const double inv = numeric::inv_sinh(phi);
  const double a_coef = mass * w * w * w * numeric::coth(phi) * inv * inv;  // K w^3 cosh/sinh^3
  const double b_coef = mass * w * w * w * (inv * inv * inv + numeric::coth(phi) * numeric::coth(phi) * inv);
  return {a_coef, center * (-2.0 * a_coef) - fixed_centered * b_coef,
          a_coef * (center.norm2() + fixed_centered.norm2()) + b_coef * fixed_centered.dot(center)};
}

}  // namespace detail

/// alpha(xi) = d^2S/dtau^2 at fixed tau, expanded as an isotropic quadratic in
/// the crossing position. Its leading coefficient is positive for every tau in
/// the window.
inline IsotropicQuadratic alpha_quadratic(const Instance& instance, double tau) {
  detail::require_two_hotspots(instance, "alpha_quadratic");
  if (!(tau > instance.t_start && tau < instance.t_end))
    throw OutOfWindowError("alpha_quadratic: tau outside (t_start, t_end)");
  const auto s = detail::split_at(instance, tau);
  const IsotropicQuadratic a1 =
      detail::alpha_form(instance.mass, s.dyn1, s.phi1, instance.phases[0].center,
                         instance.z_start - instance.phases[0].center);
  const IsotropicQuadratic a2 =
      detail::alpha_form(instance.mass, s.dyn2, s.phi2, instance.phases[1].center,
                         instance.z_end - instance.phases[1].center);
  return {a1.quad + a2.quad, a1.linear + a2.linear, a1.constant + a2.constant};
}

/// det H(xi) / (mass*h) = mass*h*alpha(xi) - |mixed(xi)|^2 as an isotropic
/// quadratic in the crossing position; same sign as the Hessian determinant.
inline IsotropicQuadratic det_quadratic(const Instance& instance, double tau) {
  const IsotropicQuadratic alpha = alpha_quadratic(instance, tau);
  const auto s = detail::split_at(instance, tau);
  const double kh = instance.mass * (s.dyn1.pulsation * numeric::coth(s.phi1) +
                                     s.dyn2.pulsation * numeric::coth(s.phi2));
  const double m1 = s.dyn1.pulsation * s.dyn1.pulsation * numeric::inv_sinh(s.phi1) * numeric::inv_sinh(s.phi1);
  const double m2 = s.dyn2.pulsation * s.dyn2.pulsation * numeric::inv_sinh(s.phi2) * numeric::inv_sinh(s.phi2);
  const double mc1 = s.dyn1.pulsation * s.dyn1.pulsation * numeric::coth(s.phi1) * numeric::inv_sinh(s.phi1);
  const double mc2 = s.dyn2.pulsation * s.dyn2.pulsation * numeric::coth(s.phi2) * numeric::inv_sinh(s.phi2);
  // mixed(xi) = -mass * [(m1 - m2) xi + w]
  const Vec2 w = instance.phases[0].center * -m1 + instance.phases[1].center * m2 -
                 (instance.z_start - instance.phases[0].center) * mc1 +
                 (instance.z_end - instance.phases[1].center) * mc2;
  const double k2 = instance.mass * instance.mass;
  const double dm = m1 - m2;
  return {kh * alpha.quad - k2 * dm * dm, alpha.linear * kh - w * (2.0 * k2 * dm),
          kh * alpha.constant - k2 * w.norm2()};
}

/// Locus of crossing positions with alpha < 0 at fixed tau: empty or an open disk.
inline std::optional<Disk> alpha_locus(const Instance& instance, double tau) {
  return alpha_quadratic(instance, tau).negative_set();
}

/// Locus of crossing positions where the two-phase Hessian has negative
/// determinant at fixed tau: empty or an open disk.
inline std::optional<Disk> det_locus(const Instance& instance, double tau) {
  return det_quadratic(instance, tau).negative_set();
}

}  // namespace hjtraj
