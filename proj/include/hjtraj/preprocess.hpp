#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hjtraj/errors.hpp"
#include "hjtraj/geometry.hpp"
#include "hjtraj/model.hpp"

namespace hjtraj {

/// One traffic measurement: station coordinates and traffic volume.
struct TrafficSample {
  double x;
  double y;
  double z;  ///< traffic volume, nonnegative before normalization

  Vec2 position() const { return {x, y}; }
};

struct Rect {
  double x_min, x_max, y_min, y_max;

  bool degenerate() const { return !(x_max > x_min) || !(y_max > y_min); }
};

inline Rect bounding_box(std::span<const TrafficSample> samples) {
  if (samples.empty()) throw EmptyInputError("bounding_box: no samples");
  Rect r{samples[0].x, samples[0].x, samples[0].y, samples[0].y};
  for (const auto& s : samples) {
    r.x_min = std::min(r.x_min, s.x);
    r.x_max = std::max(r.x_max, s.x);
    r.y_min = std::min(r.y_min, s.y);
    r.y_max = std::max(r.y_max, s.y);
  }
  return r;
}

/// Traffic aggregated on a regular n_steps x n_steps grid. Cell (ix, iy) holds
/// the summed traffic of the samples falling inside it.
struct TrafficGrid {
  std::vector<double> x_edges;  ///< n_steps + 1 ascending
  std::vector<double> y_edges;
  std::vector<double> cells;  ///< row-major, iy * n_steps + ix
  int n_steps;

  double cell(int ix, int iy) const { return cells[static_cast<std::size_t>(iy) * n_steps + ix]; }

  Vec2 cell_center(int ix, int iy) const {
    return {0.5 * (x_edges[ix] + x_edges[ix + 1]), 0.5 * (y_edges[iy] + y_edges[iy + 1])};
  }

  double total() const { return std::accumulate(cells.begin(), cells.end(), 0.0); }

  /// Cell centers with their aggregated traffic, the sample set of the later
  /// pipeline stages.
  std::vector<TrafficSample> cell_samples() const {
    std::vector<TrafficSample> out;
    out.reserve(cells.size());
    for (int iy = 0; iy < n_steps; ++iy)
      for (int ix = 0; ix < n_steps; ++ix) {
        const Vec2 c = cell_center(ix, iy);
        out.push_back({c.x, c.y, cell(ix, iy)});
      }
    return out;
  }
};

/// First smoothing: sums sample traffic per grid cell. Samples outside the
/// bounds are ignored; boundary samples land in the nearest cell.
inline TrafficGrid aggregate(std::span<const TrafficSample> samples, int n_steps,
                             const Rect& bounds) {
  if (samples.empty()) throw EmptyInputError("aggregate: no samples");
  if (n_steps < 2) throw Error("aggregate: n_steps must be at least 2");
  if (bounds.degenerate()) throw Error("aggregate: degenerate bounds");

  TrafficGrid grid;
  grid.n_steps = n_steps;
  grid.x_edges.resize(n_steps + 1);
  grid.y_edges.resize(n_steps + 1);
  for (int i = 0; i <= n_steps; ++i) {
    grid.x_edges[i] = bounds.x_min + (bounds.x_max - bounds.x_min) * i / n_steps;
    grid.y_edges[i] = bounds.y_min + (bounds.y_max - bounds.y_min) * i / n_steps;
  }
  grid.cells.assign(static_cast<std::size_t>(n_steps) * n_steps, 0.0);

  const double dx = (bounds.x_max - bounds.x_min) / n_steps;
  const double dy = (bounds.y_max - bounds.y_min) / n_steps;
  for (const auto& s : samples) {
    if (s.x < bounds.x_min || s.x > bounds.x_max || s.y < bounds.y_min || s.y > bounds.y_max)
      continue;
    const int ix = std::min(n_steps - 1, static_cast<int>((s.x - bounds.x_min) / dx));
    const int iy = std::min(n_steps - 1, static_cast<int>((s.y - bounds.y_min) / dy));
    grid.cells[static_cast<std::size_t>(iy) * n_steps + ix] += s.z;
  }
  return grid;
}

/// Second smoothing: locally weighted linear regression. Each point's traffic
/// is replaced by the value of a tricube-weighted linear fit over the
/// ceil(alpha*N) nearest neighbors, with both axes normalized to [0,1] for the
/// neighborhood metric. Reproduces constant and exactly linear fields.
inline std::vector<TrafficSample> lowess(std::span<const TrafficSample> samples, double alpha) {
  const std::size_t n = samples.size();
  if (n < 4) throw TooFewSamplesError("lowess: needs at least 4 samples");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("lowess: alpha must lie in (0, 1]");
  const std::size_t q =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(alpha * n)), 3, n);

  const Rect box = bounding_box(samples);
  const double x_span = box.x_max > box.x_min ? box.x_max - box.x_min : 1.0;
  const double y_span = box.y_max > box.y_min ? box.y_max - box.y_min : 1.0;

  std::vector<std::pair<double, std::size_t>> order(n);
  std::vector<TrafficSample> out(samples.begin(), samples.end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double ux = (samples[j].x - samples[i].x) / x_span;
      const double uy = (samples[j].y - samples[i].y) / y_span;
      order[j] = {std::hypot(ux, uy), j};
    }
    std::nth_element(order.begin(), order.begin() + (q - 1), order.end());
    std::sort(order.begin(), order.begin() + q);
    const double d_max = order[q - 1].first;

    if (d_max <= 0.0) {
      double mean = 0.0;
      for (std::size_t k = 0; k < q; ++k) mean += samples[order[k].second].z;
      out[i].z = mean / q;
      continue;
    }

    Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
    Eigen::Vector3d atb = Eigen::Vector3d::Zero();
    for (std::size_t k = 0; k < q; ++k) {
      const auto& s = samples[order[k].second];
      const double u = order[k].first / d_max;
      const double t = 1.0 - u * u * u;
      const double w = t * t * t;
      const Eigen::Vector3d row(1.0, s.x, s.y);
      ata += w * row * row.transpose();
      atb += w * s.z * row;
    }
    const Eigen::FullPivLU<Eigen::Matrix3d> lu(ata);
    if (lu.rank() < 3) {
      // Collinear neighborhood: fall back to the weighted mean.
      double wsum = 0.0, zsum = 0.0;
      for (std::size_t k = 0; k < q; ++k) {
        const double u = order[k].first / d_max;
        const double t = 1.0 - u * u * u;
        const double w = t * t * t;
        wsum += w;
        zsum += w * samples[order[k].second].z;
      }
      out[i].z = wsum > 0.0 ? zsum / wsum : samples[i].z;
      continue;
    }
    const Eigen::Vector3d beta = lu.solve(atb);
    out[i].z = beta(0) + beta(1) * samples[i].x + beta(2) * samples[i].y;
  }
  return out;
}

/// Min-max normalization of the traffic values onto [0, 1].
inline std::vector<TrafficSample> normalize(std::span<const TrafficSample> samples) {
  if (samples.empty()) throw EmptyInputError("normalize: no samples");
  double lo = samples[0].z, hi = samples[0].z;
  for (const auto& s : samples) {
    lo = std::min(lo, s.z);
    hi = std::max(hi, s.z);
  }
  if (!(hi > lo)) throw ConstantFieldError("normalize: constant traffic field");
  std::vector<TrafficSample> out(samples.begin(), samples.end());
  for (auto& s : out) s.z = (s.z - lo) / (hi - lo);
  return out;
}

namespace detail {

/// Sufficient statistics of the linear reformulation z ~ a*|p|^2/2 + b.p + c.
struct QuadFitStats {
  Eigen::Matrix4d ata = Eigen::Matrix4d::Zero();
  Eigen::Vector4d atb = Eigen::Vector4d::Zero();
  int count = 0;

  static Eigen::Vector4d row(const TrafficSample& s) {
    return {0.5 * (s.x * s.x + s.y * s.y), s.x, s.y, 1.0};
  }

  void add(const TrafficSample& s) {
    const Eigen::Vector4d r = row(s);
    ata += r * r.transpose();
    atb += r * s.z;
    ++count;
  }

  void remove(const TrafficSample& s) {
    const Eigen::Vector4d r = row(s);
    ata -= r * r.transpose();
    atb -= r * s.z;
    --count;
  }
};

inline std::optional<QuadraticPhase> try_fit(const QuadFitStats& stats) {
  if (stats.count < 4) return std::nullopt;
  const Eigen::FullPivLU<Eigen::Matrix4d> lu(stats.ata);
  if (lu.rank() < 4) return std::nullopt;
  const Eigen::Vector4d theta = lu.solve(stats.atb);
  const double curvature = theta(0);
  if (std::fabs(curvature) < 1e-12) return std::nullopt;
  const Vec2 center{-theta(1) / curvature, -theta(2) / curvature};
  const double offset = theta(3) - 0.5 * (theta(1) * theta(1) + theta(2) * theta(2)) / curvature;
  return QuadraticPhase{center, curvature, offset};
}

}  // namespace detail

/// Least-squares fit of one quadratic phase to a point cloud. The model is
/// linear in (curvature, curvature*center, constant), so an ordinary
/// least-squares solve reaches the exact optimum of the nonlinear model class.
inline QuadraticPhase fit_quadratic_cluster(std::span<const TrafficSample> points) {
  detail::QuadFitStats stats;
  for (const auto& p : points) stats.add(p);
  const auto phase = detail::try_fit(stats);
  if (!phase)
    throw DegenerateFitError(
        "fit_quadratic_cluster: vanishing curvature or rank-deficient system");
  return *phase;
}

/// Indices of the K_n nearest neighbors of sample query_index (excluded
/// itself), ties broken by the lower index.
inline std::vector<int> knn(std::span<const TrafficSample> points, int query_index, int K_n) {
  const int n = static_cast<int>(points.size());
  if (K_n > n - 1) throw Error("knn: K_n exceeds the number of other points");
  std::vector<std::pair<double, int>> order;
  order.reserve(n - 1);
  const Vec2 q = points[query_index].position();
  for (int j = 0; j < n; ++j) {
    if (j == query_index) continue;
    order.emplace_back((points[j].position() - q).norm2(), j);
  }
  std::partial_sort(order.begin(), order.begin() + K_n, order.end());
  std::vector<int> out(K_n);
  for (int k = 0; k < K_n; ++k) out[k] = order[k].second;
  return out;
}

/// Result of the quadratic-model K-means: one fitted phase per cluster, the
/// final per-sample labels, and the mean squared error of the max-of-quadratics
/// reconstruction.
struct FittedModel {
  std::vector<QuadraticPhase> phases;
  std::vector<int> labels;  ///< 1-based cluster labels
  double quad_error;
  std::vector<double> error_history;  ///< error after init and after each iteration
  int stable_after = 0;  ///< first iteration with no label change; 0 if none within M
};

namespace detail {

inline double model_error(std::span<const TrafficSample> samples,
                          std::span<const QuadraticPhase> phases) {
  double e = 0.0;
  for (const auto& s : samples) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& ph : phases) best = std::max(best, traffic_at(ph, s.position()));
    const double d = best - s.z;
    e += d * d;
  }
  return e / static_cast<double>(samples.size());
}

}  // namespace detail

/// K-means over quadratic surface models. Every cluster is summarized by a
/// fitted quadratic; a sample is relabeled to whichever label minimizes the
/// global reconstruction error, gated by disagreeing nearest neighbors
/// (K_n = 0 considers every sample each pass). Relabels that would empty a
/// cluster or make a fit degenerate are rejected.
inline FittedModel kmeans_quadratic(std::span<const TrafficSample> samples, int K_c, int K_n,
                                    int M) {
  const int n = static_cast<int>(samples.size());
  if (K_c != 1 && K_c != 2) throw Error("kmeans_quadratic: K_c must be 1 or 2");
  if (n < 4 * K_c) throw TooFewSamplesError("kmeans_quadratic: needs at least 4*K_c samples");
  if (K_n < 0 || K_n > n - 1) throw Error("kmeans_quadratic: invalid K_n");

  // Initial labelization: split by the perpendicular bisector of the two
  // lexicographically extreme samples.
  std::vector<int> labels(n, 1);
  if (K_c == 2) {
    auto lex_less = [](const TrafficSample& a, const TrafficSample& b) {
      return a.x != b.x ? a.x < b.x : a.y < b.y;
    };
    int lo = 0, hi = 0;
    for (int i = 1; i < n; ++i) {
      if (lex_less(samples[i], samples[lo])) lo = i;
      if (lex_less(samples[hi], samples[i])) hi = i;
    }
    const Vec2 a = samples[lo].position();
    const Vec2 b = samples[hi].position();
    for (int i = 0; i < n; ++i) {
      const Vec2 p = samples[i].position();
      labels[i] = ((p - a).norm2() <= (p - b).norm2()) ? 1 : 2;
    }
  }

  std::vector<std::vector<int>> neighbors;
  if (K_c == 2 && K_n > 0) {
    neighbors.resize(n);
    for (int i = 0; i < n; ++i) neighbors[i] = knn(samples, i, K_n);
  }

  auto rebuild_stats = [&](std::vector<detail::QuadFitStats>& stats) {
    stats.assign(K_c, {});
    for (int i = 0; i < n; ++i) stats[labels[i] - 1].add(samples[i]);
  };
  auto fit_all = [&](const std::vector<detail::QuadFitStats>& stats,
                     std::vector<QuadraticPhase>& phases) -> bool {
    phases.clear();
    for (const auto& st : stats) {
      const auto ph = detail::try_fit(st);
      if (!ph) return false;
      phases.push_back(*ph);
    }
    return true;
  };

  std::vector<detail::QuadFitStats> stats;
  std::vector<QuadraticPhase> phases;
  rebuild_stats(stats);
  if (!fit_all(stats, phases))
    throw DegenerateFitError("kmeans_quadratic: initial labelization is degenerate");
  double error = detail::model_error(samples, phases);

  FittedModel result;
  result.error_history.push_back(error);
  int stable_after = 0;

  for (int m = 1; m <= M; ++m) {
    bool changed = false;
    if (K_c == 2) {
      for (int j = 0; j < n; ++j) {
        if (K_n > 0) {
          bool gate = false;
          for (int jn : neighbors[j])
            if (labels[jn] != labels[j]) {
              gate = true;
              break;
            }
          if (!gate) continue;
        }
        const int current = labels[j];
        const int candidate = 3 - current;
        if (stats[current - 1].count <= 1) continue;  // relabel would empty a cluster

        stats[current - 1].remove(samples[j]);
        stats[candidate - 1].add(samples[j]);
        std::vector<QuadraticPhase> trial;
        bool ok = fit_all(stats, trial);
        double trial_error = ok ? detail::model_error(samples, trial)
                                : std::numeric_limits<double>::infinity();
        const bool accept =
            trial_error < error || (trial_error == error && candidate < current);
        if (accept) {
          labels[j] = candidate;
          phases = std::move(trial);
          error = trial_error;
          changed = true;
        } else {
          stats[candidate - 1].remove(samples[j]);
          stats[current - 1].add(samples[j]);
        }
      }
    }
    // Re-sync the sufficient statistics against incremental drift.
    rebuild_stats(stats);
    if (!fit_all(stats, phases)) throw DegenerateFitError("kmeans_quadratic: degenerate cluster");
    error = detail::model_error(samples, phases);
    result.error_history.push_back(error);
    if (!changed && stable_after == 0) stable_after = m;
  }

  result.phases = std::move(phases);
  result.labels = std::move(labels);
  result.quad_error = error;
  result.stable_after = stable_after;
  return result;
}

/// Scaled spatial unit per degree: one degree of the 40000 km meridian,
/// expressed in 100 m units.
inline double default_scale_ratio() { return 40.0e6 / 360.0 / 100.0; }

/// Prior estimates for the planning mass and deadline.
struct ParameterEstimates {
  double scale_ratio;     ///< spatial scaling r
  double path_length_m;   ///< c * |z_end - z_start|, meters
  double travel_time_s;   ///< path length over cruise speed
  double phi_max;
  std::vector<double> temporal_phases;  ///< omega_i * travel time at the given mass
  std::vector<bool> phase_ok;           ///< temporal phase below phi_max
  double mass_min_scaled;    ///< smallest scaled mass keeping every phase under phi_max
  double mass_min_unscaled;  ///< the same mass passed back to the original frame (times r^2)
};

/// Estimates the mission duration from the endpoint separation (in meters) and
/// a detour factor, and checks the temporal phases of the supplied landscape
/// against phi_max for a candidate scaled mass.
inline ParameterEstimates estimate_parameters(const Vec2& z_start_m, const Vec2& z_end_m,
                                              double v_bar = 20.0, double c = 1.5,
                                              double phi_max = 10.0,
                                              double r = default_scale_ratio(),
                                              std::span<const QuadraticPhase> phases = {},
                                              double mass_scaled = 0.0) {
  const double separation = (z_end_m - z_start_m).norm();
  if (!(separation > 0.0)) throw Error("estimate_parameters: z_start equals z_end");
  ParameterEstimates est{};
  est.scale_ratio = r;
  est.path_length_m = c * separation;
  est.travel_time_s = est.path_length_m / v_bar;
  est.phi_max = phi_max;
  double mass_min = 0.0;
  for (const auto& phase : phases) {
    // omega * T < phi_max  <=>  mass > |curvature| * (T / phi_max)^2
    mass_min = std::max(mass_min, std::fabs(phase.curvature) *
                                      (est.travel_time_s / phi_max) *
                                      (est.travel_time_s / phi_max));
    if (mass_scaled > 0.0) {
      const double phi =
          std::sqrt(std::fabs(phase.curvature) / mass_scaled) * est.travel_time_s;
      est.temporal_phases.push_back(phi);
      est.phase_ok.push_back(phi < phi_max);
    }
  }
  est.mass_min_scaled = mass_min;
  est.mass_min_unscaled = mass_min * r * r;
  return est;
}

}  // namespace hjtraj
