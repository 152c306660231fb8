#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hjtraj/bi_phase.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "support/random.hpp"

using namespace hjtraj;
using testsupport::Rng;

namespace {

/// Mirror-symmetric instance: phases and endpoints reflected across x = 0.
Instance mirror_instance() {
  const QuadraticPhase left{{-1.0, 0.5}, -1.5, 1.0};
  const QuadraticPhase right{{1.0, 0.5}, -1.5, 1.0};
  return {1.0, 0.0, 2.0, {-1.3, -0.4}, {1.3, -0.4}, {left, right}};
}

}  // namespace

TEST_CASE("interface construction") {
  SECTION("equal curvatures give the bisector line") {
    const QuadraticPhase p1{{0, 0}, -2.0, 0.3};
    const QuadraticPhase p2{{2, 0}, -2.0, 0.3};
    const Interface interface = interface_from_phases(p1, p2);
    REQUIRE(interface.is_line());
    // x = 1: points on the line have equal traffic.
    for (double y : {-3.0, 0.0, 2.0, 7.0}) {
      CHECK(std::fabs(interface.zone2_excess({1.0, y})) < 1e-12);
      CHECK(std::fabs(traffic_at(p1, {1.0, y}) - traffic_at(p2, {1.0, y})) < 1e-12);
    }
    CHECK(interface.zone2_contains({1.5, 0.0}));
    CHECK_FALSE(interface.zone2_contains({0.5, 0.0}));
  }
  SECTION("distinct curvatures give a circle") {
    const QuadraticPhase p1{{0, 0}, -2.0, 0.0};
    const QuadraticPhase p2{{3, 0}, -1.0, 0.0};
    const Interface interface = interface_from_phases(p1, p2);
    REQUIRE_FALSE(interface.is_line());
    const auto& circle = std::get<CircleInterface>(interface.geometry);
    CHECK(circle.center.x == Catch::Approx(-3.0));
    CHECK(circle.center.y == Catch::Approx(0.0).margin(1e-15));
    CHECK(circle.radius == Catch::Approx(std::sqrt(18.0)));
    for (int k = 0; k < 8; ++k) {
      const double angle = 2.0 * std::numbers::pi * k / 8.0;
      const Vec2 xi = circle.center + Vec2{std::cos(angle), std::sin(angle)} * circle.radius;
      CHECK(std::fabs(traffic_at(p1, xi) - traffic_at(p2, xi)) < 1e-9);
    }
  }
  SECTION("dominated landscape is degenerate") {
    const QuadraticPhase p1{{0, 0}, -2.0, 0.0};
    const QuadraticPhase p2{{0, 0}, -2.0, 5.0};
    CHECK_THROWS_AS(interface_from_phases(p1, p2), DegenerateInterfaceError);
  }
  SECTION("potential equality at 16 sampled points of a random interface") {
    Rng rng(301);
    for (int i = 0; i < 30; ++i) {
      const Instance inst = testsupport::random_bi_instance_unit(rng);
      const Interface interface = instance_interface(inst);
      for (int k = 0; k < 16; ++k) {
        Vec2 xi;
        if (const auto* line = std::get_if<LineInterface>(&interface.geometry)) {
          const Vec2 tangent{-line->normal.y, line->normal.x};
          xi = line->normal * line->offset + tangent * rng.uniform(-3, 3);
        } else {
          const auto& c = std::get<CircleInterface>(interface.geometry);
          const double angle = 2.0 * std::numbers::pi * k / 16.0;
          xi = c.center + Vec2{std::cos(angle), std::sin(angle)} * c.radius;
        }
        const double scale = std::fabs(traffic_at(inst.phases[0], xi)) + 1.0;
        CHECK(std::fabs(traffic_at(inst.phases[0], xi) - traffic_at(inst.phases[1], xi)) <
              1e-9 * scale);
      }
    }
  }
}

TEST_CASE("zone predicate") {
  const QuadraticPhase p1{{0, 0}, -2.0, 0.3};
  const QuadraticPhase p2{{2, 0}, -2.0, 0.3};
  CHECK_FALSE(in_zone2(p1, p2, {1.0, 4.0}));  // tie on the interface
  CHECK(in_zone2(p1, p2, p2.center));
  CHECK_FALSE(in_zone2(p1, p2, p1.center));
}

TEST_CASE("projection onto the interface") {
  const Interface line{LineInterface{{1, 0}, 1.0}};
  SECTION("foot of the perpendicular") {
    const Vec2 proj = project_onto_interface(line, {3, 7});
    CHECK(proj.x == Catch::Approx(1.0));
    CHECK(proj.y == Catch::Approx(7.0));
  }
  SECTION("idempotent on the interface") {
    const Vec2 on{1.0, -2.5};
    const Vec2 proj = project_onto_interface(line, on);
    CHECK((proj - on).norm() == 0.0);
  }
  const Interface circle{CircleInterface{{0, 0}, 2.0, true}};
  SECTION("radial projection") {
    const Vec2 proj = project_onto_interface(circle, {3, 4});
    CHECK(proj.x == Catch::Approx(1.2));
    CHECK(proj.y == Catch::Approx(1.6));
  }
  SECTION("circle center is ambiguous") {
    CHECK_THROWS_AS(project_onto_interface(circle, {0, 0}), ProjectionAmbiguousError);
  }
}

TEST_CASE("B point") {
  Rng rng(302);
  SECTION("identical phases: B lies on the single-phase optimum") {
    const QuadraticPhase phase{{0.4, -0.2}, -1.2, 0.7};
    const Instance inst{1.5, 0.0, 2.0, {-1, 0}, {1.5, 0.8}, {phase, phase}};
    const TrajectoryArc arc = solve_arc(inst.mass, phase, 0.0, inst.z_start, 2.0, inst.z_end);
    for (double tau : {0.3, 1.0, 1.7}) {
      const Vec2 expected = evaluate(arc, tau).position;
      CHECK((b_point(inst, tau) - expected).norm() < 1e-10 * (1.0 + expected.norm()));
    }
  }
  SECTION("window-edge limits") {
    for (int i = 0; i < 20; ++i) {
      const Instance inst = testsupport::random_bi_instance_unit(rng);
      const double eps = 1e-7 * inst.duration();
      CHECK((b_point(inst, inst.t_start + eps) - inst.z_start).norm() <
            1e-5 * (1.0 + inst.z_start.norm()));
      CHECK((b_point(inst, inst.t_end - eps) - inst.z_end).norm() <
            1e-5 * (1.0 + inst.z_end.norm()));
    }
  }
  SECTION("B zeroes the spatial gradient (finite differences)") {
    for (int i = 0; i < 25; ++i) {
      const Instance inst = testsupport::random_bi_instance_unit(rng);
      const double tau = inst.t_start + inst.duration() * rng.uniform(0.2, 0.8);
      const Vec2 B = b_point(inst, tau);
      const double kh = inst.mass * h_coefficient(inst, tau);
      const double h = 1e-5 * (inst.z_end - inst.z_start).norm();
      const double gx = (two_phase_cost(inst, tau, {B.x + h, B.y}) -
                         two_phase_cost(inst, tau, {B.x - h, B.y})) /
                        (2 * h);
      const double gy = (two_phase_cost(inst, tau, {B.x, B.y + h}) -
                         two_phase_cost(inst, tau, {B.x, B.y - h})) /
                        (2 * h);
      CHECK(std::hypot(gx, gy) <= 1e-5 * kh);
    }
  }
  SECTION("window violations are rejected") {
    const Instance inst = testsupport::random_bi_instance_unit(rng);
    CHECK_THROWS_AS(b_point(inst, inst.t_start - 0.1), OutOfWindowError);
    CHECK_THROWS_AS(b_point(inst, inst.t_end + 0.1), OutOfWindowError);
  }
}

TEST_CASE("crossing residuals") {
  SECTION("mirror symmetry balances the Hamiltonians") {
    const Instance inst = mirror_instance();
    const CrossingDiagnostics d = crossing_residuals(inst, 1.0, {0.0, 0.1});
    CHECK(std::fabs(d.hamiltonian_gap) < 1e-13);
  }
  SECTION("identical phases on the single-phase optimum: all residuals vanish") {
    const QuadraticPhase phase{{0.4, -0.2}, -1.2, 0.7};
    const Instance inst{1.5, 0.0, 2.0, {-1, 0}, {1.5, 0.8}, {phase, phase}};
    const TrajectoryArc arc = solve_arc(inst.mass, phase, 0.0, inst.z_start, 2.0, inst.z_end);
    const double tau = 0.9;
    const Vec2 xi = evaluate(arc, tau).position;
    // An explicit interface supplies the normal; identical phases have none.
    const Interface vertical{LineInterface{{1, 0}, xi.x}};
    const CrossingDiagnostics d = crossing_residuals(inst, vertical, tau, xi);
    CHECK(d.impulsion_gap.norm() < 1e-10);
    CHECK(std::fabs(d.hamiltonian_gap) < 1e-10);
    CHECK(std::fabs(d.multiplier) < 1e-10);
  }
}

TEST_CASE("Hamilton-Jacobi gradients of the two-phase cost") {
  Rng rng(303);
  for (int i = 0; i < 40; ++i) {
    const Instance inst = testsupport::random_bi_instance_unit(rng);
    const auto [tau, xi] = testsupport::random_crossing(rng, inst);
    const CrossingDiagnostics d = crossing_residuals(inst, instance_interface(inst), tau, xi);
    const double ht = 1e-5 * inst.duration();
    const double fd_t = (two_phase_cost(inst, tau + ht, xi) - two_phase_cost(inst, tau - ht, xi)) /
                        (2 * ht);
    CHECK(std::fabs(fd_t - d.hamiltonian_gap) <=
          1e-5 * std::max(1.0, std::fabs(d.hamiltonian_gap)));
    const double hx = 1e-5 * (inst.z_end - inst.z_start).norm();
    const Vec2 fd_x{(two_phase_cost(inst, tau, {xi.x + hx, xi.y}) -
                     two_phase_cost(inst, tau, {xi.x - hx, xi.y})) /
                        (2 * hx),
                    (two_phase_cost(inst, tau, {xi.x, xi.y + hx}) -
                     two_phase_cost(inst, tau, {xi.x, xi.y - hx})) /
                        (2 * hx)};
    CHECK((fd_x - d.impulsion_gap).norm() <= 1e-5 * std::max(1.0, d.impulsion_gap.norm()));
  }
}

TEST_CASE("spatial gradient is affine with slope mass*h") {
  Rng rng(304);
  for (int i = 0; i < 30; ++i) {
    const Instance inst = testsupport::random_bi_instance_unit(rng);
    const auto [tau, xi_a] = testsupport::random_crossing(rng, inst);
    const Vec2 xi_b = xi_a + Vec2{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const Interface interface = instance_interface(inst);
    const CrossingDiagnostics da = crossing_residuals(inst, interface, tau, xi_a);
    const CrossingDiagnostics db = crossing_residuals(inst, interface, tau, xi_b);
    const Vec2 lhs = da.impulsion_gap - db.impulsion_gap;
    const Vec2 rhs = (xi_a - xi_b) * (inst.mass * h_coefficient(inst, tau));
    CHECK((lhs - rhs).norm() <= 1e-8 * std::max(1.0, rhs.norm()));
  }
}

TEST_CASE("single-phase Hessian matches central finite differences") {
  Rng rng(305);
  for (int i = 0; i < 50; ++i) {
    const TrajectoryArc arc = testsupport::random_arc(rng, true, 0.5, 4.0);
    const double ht = 1e-5 * arc.duration();
    const double hx = 1e-5 * (1.0 + (arc.z_end - arc.z_start).norm());
    for (int which : {1, 2}) {
      const HessianSummary summary = single_phase_hessian(arc, which);
      const auto fd = testsupport::fd_hessian3(
          [&](double t, const Vec2& x) {
            return which == 1 ? testsupport::value_of(arc.mass, arc.phase, t, x, arc.t_end,
                                                      arc.z_end)
                              : testsupport::value_of(arc.mass, arc.phase, arc.t_start,
                                                      arc.z_start, t, x);
          },
          which == 1 ? arc.t_start : arc.t_end, which == 1 ? arc.z_start : arc.z_end, ht, hx);
      const auto dense = testsupport::dense_hessian(summary, arc.mass);
      double diff2 = 0.0;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) diff2 += (fd[r][c] - dense[r][c]) * (fd[r][c] - dense[r][c]);
      CHECK(std::sqrt(diff2) <= 1e-4 * testsupport::frobenius(dense));
    }
  }
}

TEST_CASE("single-phase Hessian structure") {
  SECTION("acute impulsion angle means positive alpha") {
    // Endpoints on the same side of the hotspot, short phase.
    const QuadraticPhase phase{{0, 0}, -1.0, 0.0};
    const TrajectoryArc arc = solve_arc(1.0, phase, 0.0, {2.0, 0.1}, 0.5, {2.2, -0.1});
    const auto [p1, p2] = endpoint_impulsions(arc);
    REQUIRE(p1.dot(p2) > 0.0);
    CHECK(single_phase_hessian(arc, 1).alpha > 0.0);
  }
  SECTION("rest arc: eigenvalues {Kg, Kg, 0}") {
    const QuadraticPhase phase{{1, -1}, -2.0, 0.0};
    const TrajectoryArc arc = solve_arc(2.0, phase, 0.0, phase.center, 1.0, phase.center);
    const HessianSummary s = single_phase_hessian(arc, 2);
    CHECK(s.alpha == 0.0);
    CHECK(s.mixed.norm() == 0.0);
    const double kg = arc.mass * s.spatial;
    CHECK(s.eigenvalues[0] == Catch::Approx(0.0).margin(1e-14));
    CHECK(s.eigenvalues[1] == Catch::Approx(kg));
    CHECK(s.eigenvalues[2] == Catch::Approx(kg));
    CHECK_FALSE(s.positive_definite);
  }
  SECTION("trigonometric arcs are rejected") {
    const QuadraticPhase hole{{0, 0}, 1.0, 0.0};
    const TrajectoryArc arc = solve_arc(1.0, hole, 0.0, {1, 0}, 1.0, {0, 1});
    CHECK_THROWS_AS(single_phase_hessian(arc, 1), UnsupportedPhaseError);
  }
}

TEST_CASE("two-phase Hessian matches central finite differences") {
  Rng rng(306);
  for (int i = 0; i < 40; ++i) {
    const Instance inst = testsupport::random_bi_instance_unit(rng);
    const auto [tau, xi] = testsupport::random_crossing(rng, inst);
    const HessianSummary summary = two_phase_hessian(inst, tau, xi);
    const auto fd = testsupport::fd_hessian3(
        [&](double t, const Vec2& x) { return two_phase_cost(inst, t, x); }, tau, xi,
        1e-5 * inst.duration(), 1e-5 * (inst.z_end - inst.z_start).norm());
    const auto dense = testsupport::dense_hessian(summary, inst.mass);
    double diff2 = 0.0;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) diff2 += (fd[r][c] - dense[r][c]) * (fd[r][c] - dense[r][c]);
    CHECK(std::sqrt(diff2) <= 1e-4 * testsupport::frobenius(dense));
  }
}

TEST_CASE("two-phase Hessian spectrum") {
  Rng rng(307);
  SECTION("pure-space eigenvalue mass*h is always present") {
    for (int i = 0; i < 50; ++i) {
      const Instance inst = testsupport::random_bi_instance_unit(rng);
      const auto [tau, xi] = testsupport::random_crossing(rng, inst);
      const HessianSummary s = two_phase_hessian(inst, tau, xi);
      const double kh = inst.mass * s.spatial;
      // (0, x0) with x0 perpendicular to the mixed block is an eigenvector.
      const Vec2 x0 = s.mixed.norm() > 0 ? Vec2{-s.mixed.y, s.mixed.x} : Vec2{1.0, 0.0};
      const auto dense = testsupport::dense_hessian(s, inst.mass);
      const double r1 = dense[1][1] * x0.x + dense[1][2] * x0.y - kh * x0.x;
      const double r2 = dense[2][1] * x0.x + dense[2][2] * x0.y - kh * x0.y;
      CHECK(std::hypot(r1, r2) < 1e-12 * std::max(1.0, kh));
      const bool found = std::fabs(s.eigenvalues[0] - kh) < 1e-9 * std::fabs(kh) ||
                         std::fabs(s.eigenvalues[1] - kh) < 1e-9 * std::fabs(kh) ||
                         std::fabs(s.eigenvalues[2] - kh) < 1e-9 * std::fabs(kh);
      CHECK(found);
    }
  }
  SECTION("at most one negative eigenvalue on 1000 random crossings") {
    int negatives_seen = 0;
    for (int i = 0; i < 1000; ++i) {
      const Instance inst = testsupport::random_bi_instance_unit(rng, 0.5, 3.5);
      const auto [tau, xi] = testsupport::random_crossing(rng, inst);
      const HessianSummary s = two_phase_hessian(inst, tau, xi);
      int negative = 0;
      for (double v : s.eigenvalues) negative += (v < 0.0);
      CHECK(negative <= 1);
      negatives_seen += negative;
    }
    // The sweep must actually visit non-convex spots for the bound to bite.
    CHECK(negatives_seen > 0);
  }
}

TEST_CASE("geometric non-convexity certificate") {
  SECTION("coincident centered endpoints are certified non-convex") {
    const QuadraticPhase phase{{0, 0}, -1.0, 0.0};
    const Vec2 spot{1.3, -0.4};
    const TrajectoryArc arc = solve_arc(1.0, phase, 0.0, spot, 2.0, spot);
    CHECK(convexity_test(arc) == ConvexityVerdict::SufficientlyNonconvex);
    CHECK(single_phase_hessian(arc, 1).alpha < 0.0);
  }
  SECTION("opposite centered endpoints have no ratio") {
    const QuadraticPhase phase{{0, 0}, -1.0, 0.0};
    const TrajectoryArc arc = solve_arc(1.0, phase, 0.0, {1.0, 0.5}, 2.0, {-1.0, -0.5});
    CHECK_THROWS_AS(convexity_test(arc), UndefinedRatioError);
  }
  SECTION("certificate implies negative alpha on 1000 random arcs") {
    Rng rng(308);
    int certified = 0;
    for (int i = 0; i < 1000; ++i) {
      const TrajectoryArc arc = testsupport::random_arc(rng, true, 0.3, 6.0);
      ConvexityVerdict verdict;
      try {
        verdict = convexity_test(arc);
      } catch (const UndefinedRatioError&) {
        continue;
      }
      if (verdict == ConvexityVerdict::SufficientlyNonconvex) {
        ++certified;
        CHECK(single_phase_hessian(arc, 1).alpha < 0.0);
      }
    }
    CHECK(certified > 0);
  }
}

TEST_CASE("alpha locus") {
  Rng rng(309);
  SECTION("sampled signs agree with the disk") {
    for (int i = 0; i < 20; ++i) {
      const Instance inst = testsupport::random_bi_instance_unit(rng, 1.2, 3.5);
      const double tau = inst.t_start + inst.duration() * rng.uniform(0.25, 0.75);
      const auto locus = alpha_locus(inst, tau);
      const IsotropicQuadratic q = alpha_quadratic(inst, tau);
      CHECK(q.quad > 0.0);
      for (int k = 0; k < 200; ++k) {
        Vec2 probe;
        if (locus) {
          const double radius = locus->radius * rng.uniform(0.0, 2.0);
          const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
          probe = locus->center + Vec2{std::cos(angle), std::sin(angle)} * radius;
          if (std::fabs((probe - locus->center).norm() - locus->radius) < 1e-9) continue;
        } else {
          probe = testsupport::random_crossing(rng, inst).second;
        }
        const double alpha = two_phase_hessian(inst, tau, probe).alpha;
        if (locus && locus->contains(probe))
          CHECK(alpha < 0.0);
        else
          CHECK(alpha >= 0.0);
      }
    }
  }
  SECTION("identical phases at rest give an empty locus") {
    const QuadraticPhase phase{{1.0, 2.0}, -1.0, 0.5};
    const Instance inst{1.0, 0.0, 2.0, phase.center, phase.center, {phase, phase}};
    CHECK_FALSE(alpha_locus(inst, 1.0).has_value());
  }
  SECTION("quadratic coefficient is positive across the window") {
    for (int i = 0; i < 20; ++i) {
      const Instance inst = testsupport::random_bi_instance_unit(rng);
      for (double frac : {0.1, 0.35, 0.65, 0.9}) {
        const double tau = inst.t_start + frac * inst.duration();
        CHECK(alpha_quadratic(inst, tau).quad > 0.0);
      }
    }
  }
}

TEST_CASE("determinant locus") {
  Rng rng(310);
  SECTION("sampled signs agree with the Hessian determinant") {
    for (int i = 0; i < 20; ++i) {
      const Instance inst = testsupport::random_bi_instance_unit(rng, 1.2, 3.5);
      const double tau = inst.t_start + inst.duration() * rng.uniform(0.25, 0.75);
      const auto locus = det_locus(inst, tau);
      const IsotropicQuadratic q = det_quadratic(inst, tau);
      for (int k = 0; k < 200; ++k) {
        Vec2 probe;
        if (locus) {
          const double radius = locus->radius * rng.uniform(0.0, 2.0);
          const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
          probe = locus->center + Vec2{std::cos(angle), std::sin(angle)} * radius;
          if (std::fabs((probe - locus->center).norm() - locus->radius) < 1e-9) continue;
        } else {
          probe = testsupport::random_crossing(rng, inst).second;
        }
        const HessianSummary s = two_phase_hessian(inst, tau, probe);
        const double det = testsupport::det3(testsupport::dense_hessian(s, inst.mass));
        if (locus && locus->contains(probe)) {
          CHECK(det < 0.0);
        } else {
          CHECK(det >= -1e-12 * std::max(1.0, std::fabs(q.eval(probe))));
        }
      }
    }
  }
  SECTION("negative alpha forces negative determinant: alpha disk inside det disk") {
    int both = 0;
    for (int i = 0; i < 60; ++i) {
      const Instance inst = testsupport::random_bi_instance_unit(rng, 1.2, 3.5);
      const double tau = inst.t_start + inst.duration() * rng.uniform(0.3, 0.7);
      const auto a = alpha_locus(inst, tau);
      const auto d = det_locus(inst, tau);
      if (!a) continue;
      REQUIRE(d.has_value());
      ++both;
      // Every point of the alpha disk lies in the det disk.
      CHECK((a->center - d->center).norm() + a->radius <= d->radius * (1.0 + 1e-9));
    }
    CHECK(both > 0);
  }
  SECTION("quadratic coefficient is positive on 100 random draws") {
    for (int i = 0; i < 100; ++i) {
      const Instance inst = testsupport::random_bi_instance_unit(rng, 0.5, 4.0);
      const double tau = inst.t_start + inst.duration() * rng.uniform(0.1, 0.9);
      CHECK(det_quadratic(inst, tau).quad > 0.0);
    }
  }
}

TEST_CASE("h coefficient outside the window") {
  const double t_end = 2.0;
  auto make = [&](double w1, double w2) {
    const double mass = 1.0;
    const QuadraticPhase p1{{-1, 0}, -mass * w1 * w1, 1.0};
    const QuadraticPhase p2{{1, 0}, -mass * w2 * w2, 0.8};
    return Instance{mass, 0.0, t_end, {-1.2, 0.1}, {1.2, -0.1}, {p1, p2}};
  };
  SECTION("faster second phase: negative beyond the deadline") {
    const Instance inst = make(0.8, 1.6);
    for (double tau : {t_end + 0.01, t_end + 0.3, t_end + 5.0}) CHECK(h_coefficient(inst, tau) < 0.0);
  }
  SECTION("faster first phase: negative before the start") {
    const Instance inst = make(1.6, 0.8);
    for (double tau : {-0.01, -0.5, -4.0}) CHECK(h_coefficient(inst, tau) < 0.0);
  }
  SECTION("positive inside the window") {
    const Instance inst = make(1.1, 0.7);
    for (double tau : {0.05, 0.5, 1.0, 1.95}) CHECK(h_coefficient(inst, tau) > 0.0);
  }
  SECTION("poles at the window ends") {
    const Instance inst = make(1.0, 1.0);
    CHECK_THROWS_AS(h_coefficient(inst, 0.0), PoleError);
    CHECK_THROWS_AS(h_coefficient(inst, t_end), PoleError);
  }
}

TEST_CASE("velocity is continuous across an equal-potential optimal crossing") {
  // Checked at an exactly stationary point: the mirror instance's midpoint.
  const Instance inst = mirror_instance();
  const Interface interface = instance_interface(inst);
  // The symmetry axis is x = 0; the optimum lies on it. Locate by the B point.
  const double tau = 0.5 * (inst.t_start + inst.t_end);
  const Vec2 xi = project_onto_interface(interface, b_point(inst, tau));
  const auto [arc1, arc2] = split_arcs(inst, tau, xi);
  const Vec2 v_before = evaluate(arc1, tau).velocity;
  const Vec2 v_after = evaluate(arc2, tau).velocity;
  const double scale = std::max(v_before.norm(), v_after.norm());
  CHECK((v_before - v_after).norm() / scale < 2e-4);
}
