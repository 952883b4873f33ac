#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "rte/absorption.hpp"

using namespace rte;
using std::numbers::pi;

namespace {

const Domain kDisk = Domain::disk({0, 0}, 1.0);

ProbeSolver constant_solver(double a, int n = 129) {
  auto gd = make_grid_domain(kDisk, n);
  return ProbeSolver(kDisk, constant_field(*gd, a), constant_field(*gd, 0.0), Model::Linear);
}

PhantomSpec bump_spec() {
  PhantomSpec p;
  p.kind = PhantomKind::GaussianBumps;
  p.baseline = 0.5;
  p.bumps = {{Vec2d(0.3, -0.2), 0.8, 0.25, 0.0}, {Vec2d(-0.35, 0.3), 0.5, 0.2, 0.0}};
  return p;
}

// analytic version of bump_spec
double bump_value(const Vec2d& x) {
  auto g = [&](Vec2d c, double a, double w) { return a * std::exp(-(x - c).squaredNorm() / (2 * w * w)); };
  return 0.5 + g({0.3, -0.2}, 0.8, 0.25) + g({-0.35, 0.3}, 0.5, 0.2);
}

// Simpson along the chord
double simpson_chord(const std::function<double(const Vec2d&)>& f, const ChordRay<double>& c, int n = 4000) {
  double h = c.tau_plus / n, s = f(c.point(0)) + f(c.point(c.tau_plus));
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(c.point(i * h));
  return s * h / 3;
}

}  // namespace

TEST_CASE("diameter chord through a constant medium") {
  // p = 2 sigma_a along a unit-disk diameter
  for (double a : {0.0, 1.0}) {
    ProbeSolver s = constant_solver(a);
    ChordEstimate e = probe_chord(s, Vec2d(-1, 0), 0.0, WidthSchedule{});
    CHECK(e.chord.tau_plus == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(e.truth == doctest::Approx(2 * a).epsilon(1e-9));
    CHECK(e.p == doctest::Approx(2 * a).epsilon(1e-3).scale(1));
    if (a == 0.0) CHECK(e.E == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(e.m3 == 0.0);
  }
}

TEST_CASE("mirror-symmetric phantom gives mirror-symmetric chords") {
  auto gd = make_grid_domain(kDisk, 129);
  PhantomSpec p;
  p.kind = PhantomKind::GaussianBumps;
  p.baseline = 0.3;
  p.bumps = {{Vec2d(0.0, 0.2), 1.0, 0.3, 0.0}};
  ProbeSolver s(kDisk, make_phantom(*gd, p), constant_field(*gd, 0.0), Model::Linear);
  // reflection across the y axis maps angle t to pi - t
  for (double t : {0.4, 1.1, 2.0}) {
    Vec2d x = kDisk.boundary_point(t);
    double ang = angle_of(Vec2d(-kDisk.normal(x))) + 0.3;
    ChordEstimate a = probe_chord(s, x, ang, WidthSchedule{});
    ChordEstimate b = probe_chord(s, Vec2d(-x.x(), x.y()), pi - ang, WidthSchedule{});
    CHECK(a.p == doctest::Approx(b.p).epsilon(1e-3));
  }
}

TEST_CASE("constant medium sinogram matches chord lengths") {
  ProbeSolver s = constant_solver(0.7);
  auto chords = chord_family(kDisk, {8, 5, 0.05});
  REQUIRE(chords.size() == 40);
  Sinogram sg = assemble_sinogram(s, chords, WidthSchedule{}, 0.05, 4);
  CHECK(sg.failures == 0);
  for (const auto& r : sg.rows) CHECK(r.p == doctest::Approx(0.7 * r.chord.tau_plus).epsilon(2e-3));
  CHECK(sg.relative_error_quantile(0.95) <= 2e-3);
}

TEST_CASE("chord family respects the flux cutoff") {
  for (double c : {0.05, 0.3}) {
    auto chords = chord_family(Domain::ellipse({0, 0}, 2.0, 1.0), {12, 9, c});
    CHECK(!chords.empty());
    for (const auto& ch : chords) {
      CHECK(ch.flux_in >= c);
      CHECK(ch.flux_out >= c);
    }
  }
}

TEST_CASE("x-ray matrix rows sum to chord lengths") {
  auto gd = make_grid_domain(kDisk, 33);
  auto chords = chord_family(kDisk, {10, 7, 0.05});
  auto A = xray_matrix(*gd, chords);
  REQUIRE(A.rows() == static_cast<long>(chords.size()));
  for (int i = 0; i < A.rows(); ++i) CHECK(A.row(i).sum() == doctest::Approx(chords[i].tau_plus).epsilon(1e-9));
  for (int k = 0; k < A.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) CHECK(it.value() >= 0);
}

TEST_CASE("inversion of exact line integrals") {
  auto chords = chord_family(kDisk, {60, 40, 0.05});
  std::vector<double> p;
  for (const auto& c : chords) p.push_back(simpson_chord(bump_value, c));
  InversionOptions o;
  o.pixels = 48;
  Inversion inv = invert_xray(kDisk, chords, p, o);
  CHECK(inv.residual <= inv.data_norm);
  CHECK(inv.min_coverage >= o.min_coverage);
  ScalarField truth(inv.gd->grid(), 0.0);
  for (int k : inv.gd->interior()) truth[k] = bump_value(inv.gd->grid().node(k));
  ReconstructionReport r = compare_fields(*inv.gd, inv.field, truth);
  CHECK(r.rel_l2 <= 0.01);
  for (int k : inv.gd->interior()) CHECK(inv.field[k] >= 0);

  SUBCASE("zero data inverts to zero") {
    Inversion z = invert_xray(kDisk, chords, std::vector<double>(chords.size(), 0.0), o);
    double m = 0;
    for (int k : z.gd->interior()) m = std::max(m, std::abs(z.field[k]));
    CHECK(m == 0.0);
  }
  SUBCASE("too few chords") {
    std::vector<ChordRay<double>> few(chords.begin(), chords.begin() + 30);
    std::vector<double> pf(p.begin(), p.begin() + 30);
    try {
      invert_xray(kDisk, few, pf, o);
      FAIL("expected UnderdeterminedCoverage");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::UnderdeterminedCoverage);
    }
  }
}

TEST_CASE("probe sinogram of a bump phantom") {
  auto gd = make_grid_domain(kDisk, 257);
  ProbeSolver s(kDisk, make_phantom(*gd, bump_spec()), constant_field(*gd, 0.0), Model::Linear);
  auto all = chord_family(kDisk, {60, 40, 0.05});
  std::vector<ChordRay<double>> sub;
  for (std::size_t i = 0; i < all.size(); i += 23) sub.push_back(all[i]);
  Sinogram sg = assemble_sinogram(s, sub, WidthSchedule{}, 0.05, 4);
  CHECK(sg.failures == 0);
  CHECK(sg.relative_error_quantile(0.95) <= 0.02);
  for (const auto& r : sg.rows) {
    // the bilinear truth agrees with the analytic phantom
    CHECK(r.truth == doctest::Approx(simpson_chord(bump_value, r.chord)).epsilon(5e-3));
    CHECK(r.E > 0);
    CHECK(r.E <= 1.0);
  }
  std::string tsv = sinogram_tsv(sg);
  CHECK(tsv.rfind("chord\tx_in", 0) == 0);
}

TEST_CASE("error shrinks with the probe width") {
  auto gd = make_grid_domain(kDisk, 257);
  ProbeSolver s(kDisk, make_phantom(*gd, bump_spec()), constant_field(*gd, 0.0), Model::Linear);
  Vec2d x = kDisk.boundary_point(2.5);
  double ang = angle_of(Vec2d(-kDisk.normal(x))) - 0.2;
  double prev = 1e300;
  for (double eps : {0.16, 0.08, 0.04}) {
    ChordEstimate e = probe_chord(s, x, ang, WidthSchedule{eps, eps * eps, 1.0});
    double err = std::abs(e.p - e.truth);
    CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("opaque medium reports a non-positive transmission") {
  ProbeSolver s = constant_solver(800.0, 65);
  try {
    probe_chord(s, Vec2d(-1, 0), 0.0, WidthSchedule{});
    FAIL("expected NonPositiveTransmission");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonPositiveTransmission);
  }
  Sinogram sg = assemble_sinogram(s, {make_chord(kDisk, Vec2d(-1, 0), 0.0)}, WidthSchedule{});
  CHECK(sg.failures == 1);
  CHECK(sg.rows[0].failed);
  CHECK(sg.failure_fraction() == 1.0);
}
