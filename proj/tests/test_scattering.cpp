#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "rte/scattering.hpp"

using namespace rte;
using std::numbers::pi;

namespace {

const Domain kDisk = Domain::disk({0, 0}, 1.0);

double grid_norm(const GridDomain& gd, const ScalarField& f) {
  double s = 0;
  for (int k : gd.interior()) s += f[k] * f[k];
  return std::sqrt(s);
}

CoefficientPair constants(const GridDomain& gd, double a, double s) {
  return CoefficientPair(constant_field(gd, a), constant_field(gd, s), s, gd);
}

// beam entering near the left of the disk
BoundaryFunction beam() {
  return BoundaryFunction(Side::Incoming, [](const Vec2d& x, double angle) {
    double w = std::exp(-std::pow((x.y() - 0.1) / 0.3, 2)) * std::exp(-std::pow(std::remainder(angle, 2 * pi) / 0.5, 2));
    return x.x() < 0 ? w : 0.0;
  });
}

const ProbeSolver& constant_solver() {
  static auto gd = make_grid_domain(kDisk, 129);
  static ProbeSolver s(kDisk, constant_field(*gd, 1.0), constant_field(*gd, 0.5), Model::Linear);
  return s;
}

}  // namespace

TEST_CASE("decomposition without scattering is ballistic") {
  auto gd = make_grid_domain(kDisk, 33);
  TransportOptions o;
  o.n_dirs = 64;
  Decomposition d = decompose_f123(gd, constants(*gd, 1.0, 0.0), beam(), o);
  CHECK(grid_norm(*gd, d.f1.mean) > 0);
  CHECK(grid_norm(*gd, d.f2.mean) == 0.0);
  CHECK(grid_norm(*gd, d.f3.mean) == 0.0);
}

TEST_CASE("decomposition adds up to the transport solution") {
  auto gd = make_grid_domain(kDisk, 33);
  TransportOptions o;
  o.n_dirs = 64;
  o.tol = 1e-12;
  o.max_iter = 2000;
  CoefficientPair c = constants(*gd, 1.0, 0.3);
  BoundaryFunction phi = beam();
  Decomposition d = decompose_f123(gd, c, phi, o);
  KineticSolution f = solve_rte(gd, c, phi, o);
  double num = 0, den = 0;
  for (int k : gd->interior()) {
    double sum = d.f1.mean[k] + d.f2.mean[k] + d.f3.mean[k];
    num += std::pow(sum - f.mean[k], 2);
    den += f.mean[k] * f.mean[k];
  }
  CHECK(std::sqrt(num / den) <= 1e-6);
  for (auto [x, a] : {std::pair{Vec2d(0.1, 0.2), 0.3}, {Vec2d(-0.4, 0.0), 2.0}, {Vec2d(0.5, -0.5), 4.0}})
    CHECK(decomposition_residual(d, c, x, a) <= 1e-6 * std::max(1.0, f.max_value()));
  // multiply scattered part is smaller than singly scattered
  CHECK(grid_norm(*gd, d.f3.mean) < grid_norm(*gd, d.f2.mean));
  CHECK(grid_norm(*gd, d.f2.mean) < grid_norm(*gd, d.f1.mean));
}

TEST_CASE("scattering probe in a constant medium") {
  const ProbeSolver& s = constant_solver();
  const Vec2d x0(0.1, 0.2);
  const double eta = 0.05;
  Schedule sc = parameter_schedule(eta, default_beta0(eta));
  ScatteringEstimate e = estimate_sigma_s_at(s, x0, 0.3, sc);
  REQUIRE(!e.failed);
  // the ballistic part never reaches the turned detector
  CHECK(e.m1 == 0.0);
  CHECK(e.m1_nonzero == 0);
  CHECK(e.m1_terms > 0);
  // attenuation along both legs: sigma_a (s0 + s0')
  CHECK(e.correction == doctest::Approx(std::exp(e.geometry.s0 + e.geometry.s0_prime)).epsilon(1e-3));
  CHECK(e.estimate_f2 == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(e.estimate - 0.5) <= 0.1 * 0.5);
  CHECK(e.contamination == doctest::Approx(e.m3 / e.m2));
  CHECK(e.estimate >= e.estimate_f2);
  CHECK(std::abs(e.estimate - 0.5) <= e.tolerance);

  SUBCASE("turn direction does not matter") {
    ScatteringEstimate f = estimate_sigma_s_at(s, x0, 0.3, sc, -1);
    CHECK(f.estimate_f2 == doctest::Approx(e.estimate_f2).epsilon(0.01));
  }
}

TEST_CASE("rejected geometries") {
  const ProbeSolver& s = constant_solver();
  Schedule sc = parameter_schedule(0.05, default_beta0(0.05));
  CHECK_THROWS_AS(estimate_sigma_s_at(s, Vec2d(0.99, 0.0), 0.0, sc), Error);
  try {
    estimate_sigma_s_at(s, Vec2d(2.0, 0.0), 0.0, sc);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::PointOutsideDomain);
  }
  ScatteringOptions strict;
  strict.max_contamination = 1e-6;
  try {
    estimate_sigma_s_at(s, Vec2d(0, 0), 0.0, sc, 1, strict);
    FAIL("expected ContaminationTooLarge");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ContaminationTooLarge);
  }
}

TEST_CASE("sweep over a bump phantom") {
  auto gd = make_grid_domain(kDisk, 129);
  PhantomSpec p;
  p.kind = PhantomKind::GaussianBumps;
  p.baseline = 0.3;
  p.bumps = {{Vec2d(0.2, 0.1), 0.5, 0.3, 0.0}};
  ScalarField ss = make_phantom(*gd, p);
  ProbeSolver s(kDisk, constant_field(*gd, 1.0), ss, Model::Linear);
  auto pts = interior_lattice(kDisk, 5, -0.5, 0.5, 0.05);
  REQUIRE(pts.size() == 25);
  Schedule sc = parameter_schedule(0.05, default_beta0(0.05));
  auto est = sweep_sigma_s(s, pts, 0.0, sc, {}, 4);
  REQUIRE(est.size() == pts.size());
  std::vector<double> a, t;
  for (const auto& e : est) {
    REQUIRE(!e.failed);
    CHECK(e.m1_nonzero == 0);
    CHECK(e.estimate >= 0);
    CHECK(e.truth == doctest::Approx(ss(e.x0)));
    a.push_back(e.estimate);
    t.push_back(e.truth);
  }
  CHECK(correlation(a, t) >= 0.9);
  CHECK(estimates_tsv(est).rfind("x0\ty0", 0) == 0);

  SUBCASE("failures are recorded per point") {
    auto mixed = sweep_sigma_s(s, {Vec2d(0, 0), Vec2d(3, 0)}, 0.0, sc);
    CHECK(!mixed[0].failed);
    CHECK(mixed[1].failed);
    CHECK(!mixed[1].error.empty());
  }
  CHECK(sweep_sigma_s(s, {}, 0.0, sc).empty());
}

TEST_CASE("lattice keeps a margin from the boundary") {
  Domain e = Domain::ellipse({0, 0}, 2.0, 1.0);
  auto pts = interior_lattice(e, 7, -1.5, 1.5, 0.1);
  CHECK(!pts.empty());
  CHECK(pts.size() < 49);
  for (const auto& x : pts) CHECK(e.xi(x) <= -0.1);
}

TEST_CASE("convergence along a schedule") {
  const ProbeSolver& s = constant_solver();
  ConvergenceStudy st = schedule_convergence_study(s, Vec2d(0.1, 0.2), 0.3, {0.2, 0.1, 0.05}, 0.5);
  REQUIRE(st.rows.size() == 3);
  CHECK(st.param1_decreasing);
  CHECK(st.contamination_decreasing);
  CHECK(st.error_nonincreasing);
  for (const auto& r : st.rows) CHECK(r.ratio_eta == doctest::Approx(0.125));
  CHECK(st.rows[2].error < st.rows[0].error);
  CHECK(convergence_tsv(st).rfind("eta\tbeta0", 0) == 0);

  ConvergenceStudy one = schedule_convergence_study(s, Vec2d(0.1, 0.2), 0.3, {0.1}, 0.5);
  CHECK(one.rows.size() == 1);
  CHECK(one.param1_decreasing);

  try {
    schedule_convergence_study(s, Vec2d(0.1, 0.2), 0.3, {0.05, 0.1}, 0.5);
    FAIL("expected ScheduleInfeasible");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ScheduleInfeasible);
  }
}

TEST_CASE("correlation helper") {
  std::vector<double> a{1, 2, 3, 4}, b{2, 4, 6, 8}, c{4, 3, 2, 1};
  CHECK(correlation(a, b) == doctest::Approx(1.0));
  CHECK(correlation(a, c) == doctest::Approx(-1.0));
  // direct formula on an asymmetric sample: cov / (sd sd)
  std::vector<double> x{0, 1, 3}, y{1, 0, 4};
  CHECK(correlation(x, y) == doctest::Approx((16.0 / 3) / std::sqrt(14.0 / 3 * 26.0 / 3)));
}
