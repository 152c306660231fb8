#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hjtraj/bi_phase.hpp"
#include "hjtraj/errors.hpp"
#include "hjtraj/model.hpp"
#include "hjtraj/single_phase.hpp"

namespace hjtraj {

/// Tolerances and step controls for the planning procedures. Entries left at
/// zero are resolved per instance (see resolve()).
struct SolverConfig {
  double eps_p = 2e-4;    ///< impulsion-discrepancy stop threshold
  double eps_H = 2e-4;    ///< Hamiltonian-discrepancy stop threshold
  double eps_B = 2e-4;    ///< bisection interval-ratio stop threshold
  int M_tau = 10;         ///< Newton steps on tau per outer iteration
  double delta_tau = 0.0; ///< alternating-optimizer tau step; 0 -> duration/2000
  double eps_tau = 0.0;   ///< tau-change switch threshold; 0 -> 1.5*delta_tau
  double eps_xi = 0.0;    ///< xi-change switch threshold; 0 -> 1e-6*|z_end-z_start|
  double eps_S = 0.0;     ///< cost-stall termination; 0 -> 1e-6*|initial cost|
  int max_outer = 0;      ///< iteration cap; 0 -> per-solver default
  double mpc_dt = 0.0;    ///< receding-horizon step; 0 -> duration/200
};

/// Stationary crossing returned by the bi-phase solvers, with the optimality
/// residuals and the local Hessian structure at the solution.
struct CrossingSolution {
  double tau;
  Vec2 xi;
  double total_cost;
  Vec2 p_before;
  Vec2 p_after;
  double H_before;
  double H_after;
  double multiplier;
  int iterations;
  double g_impulsion;    ///< relative impulsion discrepancy at (tau, xi)
  double g_hamiltonian;  ///< relative Hamiltonian discrepancy at (tau, xi)
  HessianSummary hessian;
};

/// Output of one bi-phase planning run. The two arcs share the crossing point.
struct PlanResult {
  CrossingSolution solution;
  TrajectoryArc first_arc;
  TrajectoryArc second_arc;
  int outer_iterations;
  bool converged;
  std::vector<double> cost_history;
  bool tau_clamped = false;          ///< a Newton/damped step left the window
  int newton_fallbacks = 0;          ///< damped steps taken instead of Newton
  bool hessian_positive_definite_throughout = true;
  int zone_changes = 1;  ///< zone flips along the returned trajectory (want 1)
};

namespace detail {

struct ResolvedConfig {
  double eps_p, eps_H, eps_B;
  int M_tau;
  double delta_tau, eps_tau, eps_xi;
  double eps_S;  ///< resolved against the initial cost by the caller when 0
  int max_outer;
  double mpc_dt;
};

inline ResolvedConfig resolve(const SolverConfig& cfg, const Instance& instance,
                              int default_max_outer) {
  ResolvedConfig r{};
  r.eps_p = cfg.eps_p;
  r.eps_H = cfg.eps_H;
  r.eps_B = cfg.eps_B;
  r.M_tau = cfg.M_tau;
  r.delta_tau = cfg.delta_tau > 0.0 ? cfg.delta_tau : instance.duration() / 2000.0;
  r.eps_tau = cfg.eps_tau > 0.0 ? cfg.eps_tau : 0.5 * r.delta_tau;
  r.eps_xi = cfg.eps_xi > 0.0 ? cfg.eps_xi
                              : 1e-6 * std::max(1e-12, (instance.z_end - instance.z_start).norm());
  r.eps_S = cfg.eps_S;
  r.max_outer = cfg.max_outer > 0 ? cfg.max_outer : default_max_outer;
  r.mpc_dt = cfg.mpc_dt > 0.0 ? cfg.mpc_dt : instance.duration() / 200.0;
  return r;
}

/// Interior window the crossing time is confined to.
inline std::pair<double, double> tau_window(const Instance& instance) {
  const double margin = 1e-3 * instance.duration();
  return {instance.t_start + margin, instance.t_end - margin};
}

inline int count_zone_changes(const Interface& interface, const TrajectoryArc& arc1,
                              const TrajectoryArc& arc2, int samples) {
  int flips = 0;
  bool prev = interface.zone2_contains(evaluate(arc1, arc1.t_start).position);
  for (int i = 1; i < samples; ++i) {
    const double u = static_cast<double>(i) / (samples - 1);
    const double t = arc1.t_start + u * (arc2.t_end - arc1.t_start);
    const Vec2 z = (t <= arc1.t_end) ? evaluate(arc1, t).position : evaluate(arc2, t).position;
    const bool cur = interface.zone2_contains(z);
    flips += (cur != prev);
    prev = cur;
  }
  return flips;
}

inline CrossingSolution make_solution(const Instance& instance, const Interface& interface,
                                      double tau, const Vec2& xi, int iterations) {
  const CrossingDiagnostics d = crossing_residuals(instance, interface, tau, xi);
  CrossingSolution s{};
  s.tau = tau;
  s.xi = xi;
  s.total_cost = two_phase_cost(instance, tau, xi);
  s.p_before = d.p_before;
  s.p_after = d.p_after;
  s.H_before = d.H_before;
  s.H_after = d.H_after;
  s.multiplier = d.multiplier;
  s.iterations = iterations;
  s.g_impulsion = discrepancy(d.p_before, d.p_after);
  s.g_hamiltonian = discrepancy(d.H_after, d.H_before);
  s.hessian = two_phase_hessian(instance, tau, xi);
  return s;
}

inline PlanResult finish(const Instance& instance, const Interface& interface,
                         CrossingSolution solution, int outer, bool converged,
                         std::vector<double> history) {
  auto [arc1, arc2] = split_arcs(instance, solution.tau, solution.xi);
  PlanResult r{std::move(solution), arc1, arc2, outer, converged, std::move(history)};
  r.zone_changes = count_zone_changes(interface, arc1, arc2, 1000);
  return r;
}

}  // namespace detail

/// Projected-gradient / Newton solver for the bi-phase crossing: alternates an
/// exact spatial projection of the B point with M_tau Newton steps on tau,
/// until both crossing residuals fall under the stop thresholds.
inline PlanResult grad_algo(const Instance& instance, const SolverConfig& config = {},
                            std::optional<std::pair<double, Vec2>> init = std::nullopt,
                            std::optional<Interface> interface_override = std::nullopt) {
  detail::require_two_hotspots(instance, "grad_algo");
  const Interface interface =
      interface_override ? *interface_override : instance_interface(instance);
  const auto cfg = detail::resolve(config, instance, 50);
  const auto [lo, hi] = detail::tau_window(instance);

  double tau = init ? std::clamp(init->first, lo, hi)
                    : 0.5 * (instance.t_start + instance.t_end);
  Vec2 xi = init ? init->second
                 : project_onto_interface(interface, (instance.z_start + instance.z_end) * 0.5);

  PlanResult partial{};
  std::vector<double> history;
  bool converged = false;
  bool tau_clamped = false;
  int fallbacks = 0;
  bool pd_throughout = true;
  int outer = 0;

  CrossingDiagnostics diag = crossing_residuals(instance, interface, tau, xi);
  HessianSummary hess = two_phase_hessian(instance, tau, xi);
  while (outer < cfg.max_outer) {
    xi = project_onto_interface(interface, b_point(instance, tau));
    diag = crossing_residuals(instance, interface, tau, xi);
    hess = two_phase_hessian(instance, tau, xi);
    pd_throughout = pd_throughout && hess.positive_definite;

    for (int m = 0; m < cfg.M_tau; ++m) {
      const double grad = diag.hamiltonian_gap;
      const double h_scale = std::max({std::fabs(diag.H_before), std::fabs(diag.H_after), 1e-300});
      double next;
      if (std::fabs(hess.alpha) > 1e-12 * std::fabs(grad)) {
        next = tau - grad / hess.alpha;
        if (next <= lo || next >= hi) {
          next = tau - 0.1 * instance.duration() / h_scale * grad;
          ++fallbacks;
        }
      } else {
        next = tau - 0.1 * instance.duration() / h_scale * grad;
        ++fallbacks;
      }
      if (next <= lo || next >= hi) {
        next = std::clamp(next, lo, hi);
        tau_clamped = true;
      }
      tau = next;
      diag = crossing_residuals(instance, interface, tau, xi);
      hess = two_phase_hessian(instance, tau, xi);
      pd_throughout = pd_throughout && hess.positive_definite;
    }
    ++outer;
    history.push_back(two_phase_cost(instance, tau, xi));

    if (discrepancy(diag.p_before, diag.p_after) < cfg.eps_p &&
        discrepancy(diag.H_after, diag.H_before) < cfg.eps_H) {
      converged = true;
      break;
    }
  }

  PlanResult result = detail::finish(instance, interface,
                                     detail::make_solution(instance, interface, tau, xi, outer),
                                     outer, converged, std::move(history));
  result.tau_clamped = tau_clamped;
  result.newton_fallbacks = fallbacks;
  result.hessian_positive_definite_throughout = pd_throughout;
  return result;
}

/// B-curve bisection: brackets the crossing time by the zone of B(tau) and
/// bisects until the interval ratio passes eps_B. Runs the round(log2(1/eps_B))
/// iterations that realize that precision (12 at the default 2e-4).
inline PlanResult b_algo(const Instance& instance, const SolverConfig& config = {},
                         std::optional<std::pair<double, double>> bracket = std::nullopt,
                         std::optional<Interface> interface_override = std::nullopt) {
  detail::require_two_hotspots(instance, "b_algo");
  const Interface interface =
      interface_override ? *interface_override : instance_interface(instance);
  const auto cfg = detail::resolve(config, instance, 50);
  const auto [lo, hi] = detail::tau_window(instance);
  const double a = bracket ? bracket->first : lo;
  const double b = bracket ? bracket->second : hi;
  if (!(a < b) || a <= instance.t_start || b >= instance.t_end)
    throw Error("b_algo: invalid bracket");

  if (interface.zone2_contains(b_point(instance, a)) ==
      interface.zone2_contains(b_point(instance, b)))
    throw NoSignChangeError("b_algo: B(a) and B(b) lie in the same zone");

  const int iterations =
      std::max<int>(1, static_cast<int>(std::lround(std::log2(1.0 / cfg.eps_B))));
  double t1 = a;
  double t2 = b;
  double e1 = interface.zone2_excess(b_point(instance, t1));
  double e2 = interface.zone2_excess(b_point(instance, t2));
  std::vector<double> history;
  for (int i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (t1 + t2);
    const Vec2 xi_mid = b_point(instance, mid);
    const double e_mid = interface.zone2_excess(xi_mid);
    if ((e_mid > 0.0) == (e2 > 0.0)) {
      t2 = mid;
      e2 = e_mid;
    } else {
      t1 = mid;
      e1 = e_mid;
    }
    history.push_back(two_phase_cost(instance, mid, xi_mid));
  }
  // Interpolate the B-curve crossing inside the final bracket. The crossing is
  // B(tau) itself, where the impulsion gap mass*h*(xi - B) and the multiplier
  // vanish identically.
  double tau = 0.5 * (t1 + t2);
  if (std::fabs(e2 - e1) > 1e-300) tau = std::clamp(t1 - e1 * (t2 - t1) / (e2 - e1), t1, t2);
  const Vec2 xi = b_point(instance, tau);

  CrossingSolution sol = detail::make_solution(instance, interface, tau, xi, iterations);
  const bool converged = sol.g_impulsion < cfg.eps_p && sol.g_hamiltonian < cfg.eps_H;
  return detail::finish(instance, interface, std::move(sol), iterations, converged,
                        std::move(history));
}

/// One receding-horizon sample: state and the greedily selected phase.
struct MpcSample {
  double t;
  Vec2 position;
  Vec2 velocity;
  int active_phase;  ///< index into the phase list
};

struct MpcResult {
  std::vector<MpcSample> samples;
  double total_cost;
};

namespace detail {

/// Simpson integral of the running cost along one arc segment.
inline double segment_cost(const TrajectoryArc& arc, double t_from, double t_to, int panels) {
  const double h = (t_to - t_from) / panels;
  double sum = 0.0;
  auto integrand = [&](double t) {
    const ArcState s = evaluate(arc, t);
    return lagrangian(arc.mass, arc.phase, s.position, s.velocity);
  };
  for (int i = 0; i < panels; ++i) {
    const double t0 = t_from + i * h;
    sum += integrand(t0) + 4.0 * integrand(t0 + 0.5 * h) + integrand(t0 + h);
  }
  return sum * h / 6.0;
}

}  // namespace detail

/// Receding-horizon baseline: at every step, assume the phase with the largest
/// traffic at the current position holds until the deadline, plan the closed
/// form to (t_end, z_end), and execute one step of it.
inline MpcResult mpc(double mass, std::span<const QuadraticPhase> phases, double t_start,
                     const Vec2& z_start, double t_end, const Vec2& z_end, double dt) {
  if (phases.empty()) throw Error("mpc: no phases");
  if (!(dt > 0.0)) throw Error("mpc: dt must be positive");
  const double duration = t_end - t_start;
  const int steps = std::max(1, static_cast<int>(std::lround(duration / dt)));
  const double step = duration / steps;

  MpcResult result{};
  result.total_cost = 0.0;
  Vec2 z = z_start;
  TrajectoryArc plan{};
  for (int i = 0; i < steps; ++i) {
    const double t = t_start + i * step;
    int best = 0;
    for (std::size_t j = 1; j < phases.size(); ++j)
      if (traffic_at(phases[j], z) > traffic_at(phases[best], z)) best = static_cast<int>(j);
    plan = solve_arc(mass, phases[best], t, z, t_end, z_end);
    result.samples.push_back({t, z, evaluate(plan, t).velocity, best});
    result.total_cost += detail::segment_cost(plan, t, t + step, 8);
    z = evaluate(plan, t + step).position;
  }
  result.samples.push_back(
      {t_end, z, evaluate(plan, t_end).velocity, result.samples.back().active_phase});
  return result;
}

inline MpcResult mpc(const Instance& instance, double dt) {
  return mpc(instance.mass, instance.phases, instance.t_start, instance.z_start, instance.t_end,
             instance.z_end, dt);
}

/// Alternating optimizer: fixed-step moves on tau driven by the Hamiltonian
/// imbalance, alternating with exact projections of the B point, until the
/// cost stalls. Seeded by an MPC run unless an initial crossing is supplied.
inline PlanResult aoa(const Instance& instance, const SolverConfig& config = {},
                      std::optional<std::pair<double, Vec2>> init = std::nullopt,
                      std::optional<Interface> interface_override = std::nullopt) {
  detail::require_two_hotspots(instance, "aoa");
  const Interface interface =
      interface_override ? *interface_override : instance_interface(instance);
  const auto cfg = detail::resolve(config, instance, 20000);
  const auto [lo, hi] = detail::tau_window(instance);

  double tau;
  Vec2 xi;
  double cost;
  if (init) {
    tau = std::clamp(init->first, lo, hi);
    xi = project_onto_interface(interface, init->second);
    cost = two_phase_cost(instance, tau, xi);
  } else {
    const MpcResult seed = mpc(instance, cfg.mpc_dt);
    // Locate the interface crossing of the seed trajectory.
    std::size_t cross = seed.samples.size();
    for (std::size_t i = 1; i < seed.samples.size(); ++i) {
      if (interface.zone2_contains(seed.samples[i].position) !=
          interface.zone2_contains(seed.samples[i - 1].position)) {
        cross = i;
        break;
      }
    }
    if (cross == seed.samples.size()) {
      tau = 0.5 * (instance.t_start + instance.t_end);
      xi = project_onto_interface(interface, (instance.z_start + instance.z_end) * 0.5);
    } else {
      const auto& s0 = seed.samples[cross - 1];
      const auto& s1 = seed.samples[cross];
      const double e0 = std::fabs(interface.zone2_excess(s0.position));
      const double e1 = std::fabs(interface.zone2_excess(s1.position));
      const double u = (e0 + e1 > 0.0) ? e0 / (e0 + e1) : 0.5;
      tau = std::clamp(s0.t + u * (s1.t - s0.t), lo, hi);
      xi = project_onto_interface(interface, s0.position + (s1.position - s0.position) * u);
    }
    cost = seed.total_cost;
  }

  // The walk's limit cycle sways the cost by about alpha*delta_tau^2 per
  // iteration; the stall tolerance must sit above that or the loop never
  // registers the stall.
  const double cycle_scale =
      std::fabs(two_phase_hessian(instance, tau, xi).alpha) * cfg.delta_tau * cfg.delta_tau;
  const double eps_S = cfg.eps_S > 0.0
                           ? cfg.eps_S
                           : std::max({1e-6 * std::fabs(cost), 4.0 * cycle_scale, 1e-12});
  std::vector<double> history{cost};
  // The fixed-step tau walk stalls by oscillating between two values, so the
  // switch watches the displacement across two consecutive updates: 2*delta
  // while marching, 0 once the walk turns around.
  double tau_prev = tau;
  double tau_prev2 = tau;
  Vec2 xi_prev = xi;
  bool seeking_time = true;
  bool seeking_position = false;
  bool converged = false;
  int iter = 0;
  int stall_streak = 0;

  while (iter < cfg.max_outer) {
    const double cost_prev = cost;
    if (seeking_time) {
      const CrossingDiagnostics d = crossing_residuals(instance, interface, tau, xi);
      tau = std::clamp(tau + numeric::sign(d.H_before - d.H_after) * cfg.delta_tau, lo, hi);
      if (std::fabs(tau_prev2 - tau) < cfg.eps_tau) {
        seeking_time = false;
        seeking_position = true;
      }
      tau_prev2 = tau_prev;
      tau_prev = tau;
    }
    if (seeking_position) {
      xi = project_onto_interface(interface, b_point(instance, tau));
      if ((xi_prev - xi).norm() < cfg.eps_xi) {
        seeking_time = true;
        seeking_position = false;
      }
      xi_prev = xi;
    }
    cost = two_phase_cost(instance, tau, xi);
    history.push_back(cost);
    ++iter;
    // The stall must outlast one full switch cycle: a zero-move projection
    // pass or the final walk step before the turnaround each stall a single
    // iteration, and the variable switch needs the next one to act.
    stall_streak = (std::fabs(cost_prev - cost) <= eps_S) ? stall_streak + 1 : 0;
    if (stall_streak >= 3) {
      converged = true;
      break;
    }
  }

  return detail::finish(instance, interface, detail::make_solution(instance, interface, tau, xi, iter),
                        iter, converged, std::move(history));
}

/// Grid minimum of the two-phase cost over crossing candidates.
struct GridOptimum {
  double tau;
  Vec2 xi;
  double cost;
};

/// Exhaustive scan of (tau, xi) over an (n_tau+1) x (n_xi or n_xi+1) grid:
/// tau over the interior window, xi over the full circle or a tangential
/// window of 4*|z_end-z_start| around the projected midpoint for a line.
/// Nested for doubled n, so refinement can only lower the minimum.
inline GridOptimum brute_force(const Instance& instance, int n_tau, int n_xi,
                               std::optional<Interface> interface_override = std::nullopt) {
  detail::require_two_hotspots(instance, "brute_force");
  const Interface interface =
      interface_override ? *interface_override : instance_interface(instance);
  const auto [lo, hi] = detail::tau_window(instance);

  std::vector<Vec2> points;
  if (const auto* line = std::get_if<LineInterface>(&interface.geometry)) {
    const Vec2 tangent{-line->normal.y, line->normal.x};
    const Vec2 anchor =
        project_onto_interface(interface, (instance.z_start + instance.z_end) * 0.5);
    const double window = 4.0 * (instance.z_end - instance.z_start).norm();
    points.reserve(n_xi + 1);
    for (int j = 0; j <= n_xi; ++j)
      points.push_back(anchor + tangent * (-0.5 * window + window * j / n_xi));
  } else {
    const auto& circle = std::get<CircleInterface>(interface.geometry);
    points.reserve(n_xi);
    for (int j = 0; j < n_xi; ++j) {
      const double angle = 2.0 * std::numbers::pi * j / n_xi;
      points.push_back(circle.center + Vec2{std::cos(angle), std::sin(angle)} * circle.radius);
    }
  }

  GridOptimum best{0.0, {}, std::numeric_limits<double>::infinity()};
  for (int i = 0; i <= n_tau; ++i) {
    const double tau = lo + (hi - lo) * i / n_tau;
    for (const Vec2& xi : points) {
      const double cost = two_phase_cost(instance, tau, xi);
      if (cost < best.cost) best = {tau, xi, cost};
    }
  }
  return best;
}

/// Uniform space-time sample of a planned trajectory, as emitted by the CLI.
struct TrajectorySample {
  double t;
  Vec2 position;
  Vec2 velocity;
  double energy;  ///< Hamiltonian of the active phase
  int phase;      ///< 1-based active phase
};

inline std::vector<TrajectorySample> sample_arc(const TrajectoryArc& arc, int count) {
  std::vector<TrajectorySample> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double t = arc.t_start + arc.duration() * i / (count - 1);
    const ArcState s = evaluate(arc, t);
    out.push_back({t, s.position, s.velocity,
                   hamiltonian(arc.mass, arc.phase, s.position, s.velocity * arc.mass), 1});
  }
  return out;
}

inline std::vector<TrajectorySample> sample_plan(const TrajectoryArc& arc1,
                                                 const TrajectoryArc& arc2, int count) {
  std::vector<TrajectorySample> out;
  out.reserve(count);
  const double t0 = arc1.t_start;
  const double span = arc2.t_end - t0;
  for (int i = 0; i < count; ++i) {
    const double t = t0 + span * i / (count - 1);
    const bool first = t <= arc1.t_end;
    const TrajectoryArc& arc = first ? arc1 : arc2;
    const ArcState s = evaluate(arc, t);
    out.push_back({t, s.position, s.velocity,
                   hamiltonian(arc.mass, arc.phase, s.position, s.velocity * arc.mass),
                   first ? 1 : 2});
  }
  return out;
}

/// Polyline length of a sampled trajectory.
inline double polyline_length(std::span<const TrajectorySample> samples) {
  double length = 0.0;
  for (std::size_t i = 1; i < samples.size(); ++i)
    length += (samples[i].position - samples[i - 1].position).norm();
  return length;
}

}  // namespace hjtraj
