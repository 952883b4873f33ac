#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <sstream>

#include "rte/field.hpp"

using namespace rte;
using std::numbers::pi;

namespace {

// Plain trapezoid with a fixed node count, written independently of segment_integral.
double trapezoid_oracle(const ScalarField& f, const Vec2d& a, const Vec2d& b, long n) {
  double s = 0;
  for (long m = 0; m <= n; ++m) {
    double t = static_cast<double>(m) / n;
    double w = (m == 0 || m == n) ? 0.5 : 1.0;
    s += w * f(a + t * (b - a));
  }
  return s * (b - a).norm() / n;
}

PhantomSpec gaussian(double amp, Vec2d c, double w) {
  PhantomSpec p;
  p.kind = PhantomKind::GaussianBumps;
  p.baseline = 1.0;
  p.bumps.push_back({c, amp, w, 0.0});
  return p;
}

}  // namespace

TEST_CASE("phantoms") {
  auto gd = make_grid_domain(Domain::disk({0, 0}, 1.0), 65);
  ScalarField c = constant_field(*gd, 1.0);
  CHECK(c.min_interior(*gd) == 1.0);
  CHECK(c.max_interior(*gd) == 1.0);

  PhantomSpec g = gaussian(0.5, {0, 0}, 0.3);
  ScalarField f = make_phantom(*gd, g);
  CHECK(g(Vec2d(0, 0)) == doctest::Approx(1.5));
  CHECK(f(Vec2d(0, 0)) == doctest::Approx(1.5).epsilon(1e-3));
  CHECK(f.max_interior(*gd) <= 1.5 + 1e-12);

  PhantomSpec two = gaussian(0.5, {0.3, 0.1}, 0.2);
  two.bumps.push_back({Vec2d(-0.4, -0.2), 0.8, 0.15, 0.0});
  Vec2d p(0.1, -0.05);
  double direct = 1.0 + 0.5 * std::exp(-((0.1 - 0.3) * (0.1 - 0.3) + (-0.05 - 0.1) * (-0.05 - 0.1)) / (2 * 0.04)) +
                  0.8 * std::exp(-((0.1 + 0.4) * (0.1 + 0.4) + (-0.05 + 0.2) * (-0.05 + 0.2)) / (2 * 0.0225));
  CHECK(two(p) == doctest::Approx(direct).epsilon(1e-15));

  PhantomSpec disc;
  disc.kind = PhantomKind::SmoothedDiscs;
  disc.baseline = 0.2;
  disc.bumps.push_back({Vec2d(0, 0), 1.0, 0.05, 0.4});
  CHECK(disc(Vec2d(0, 0)) == doctest::Approx(1.2).epsilon(1e-6));
  CHECK(disc(Vec2d(0.9, 0)) == doctest::Approx(0.2).epsilon(1e-4));

  PhantomSpec bad = gaussian(0.5, {0, 0}, -1.0);
  CHECK_THROWS_AS(make_phantom(*gd, bad), Error);
  PhantomSpec neg = gaussian(-2.0, {0, 0}, 0.3);
  CHECK_THROWS_AS(make_phantom(*gd, neg), Error);
}

TEST_CASE("exterior nodes continue interior values") {
  auto gd = make_grid_domain(Domain::ellipse({0.1, 0}, 1.5, 1.0), 40);
  ScalarField f = make_phantom(*gd, gaussian(0.5, {0.2, 0.1}, 0.4));
  for (int k = 0; k < gd->grid().size(); ++k) CHECK(f[k] == f[gd->extension(k)]);
  for (int k : gd->interior()) CHECK(gd->extension(k) == k);
}

TEST_CASE("line integrals") {
  Domain disk = Domain::disk({0, 0}, 1.0);
  auto gd = make_grid_domain(disk, 129);
  ScalarField one = constant_field(*gd, 1.0);
  auto diam = make_chord(disk, Vec2d(-1, 0), 0.0);
  CHECK(line_integral(one, diam, 0.01) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(one.ray_integral(diam.x_in, diam.v(), diam.tau_plus) == doctest::Approx(2.0).epsilon(1e-12));
  auto chord = make_chord(disk, direction(2.5), 2.5 + pi + 0.6);
  ScalarField c07 = constant_field(*gd, 0.7);
  CHECK(line_integral(c07, chord, 0.01) == doctest::Approx(0.7 * chord.tau_plus).epsilon(1e-12));

  ScalarField bump = make_phantom(*gd, gaussian(0.5, {0.2, -0.1}, 0.3));
  auto ch = make_chord(disk, direction(3.6), 3.6 + pi - 0.4);
  double oracle = trapezoid_oracle(bump, ch.x_in, ch.x_out, 1000000);
  CHECK(line_integral(bump, ch, 1e-3) == doctest::Approx(oracle).epsilon(1e-6));
  CHECK(bump.ray_integral(ch.x_in, ch.v(), ch.tau_plus) == doctest::Approx(oracle).epsilon(1e-9));

  // additivity at an interior split point
  double t = 0.37 * ch.tau_plus;
  double whole = line_integral(bump, ch, 1e-3);
  double parts = segment_integral(bump, ch.x_in, ch.v(), t, 1e-3) +
                 segment_integral(bump, ch.point(t), ch.v(), ch.tau_plus - t, 1e-3);
  CHECK(std::abs(whole - parts) <= 2 * 1e-6 * whole);
}

TEST_CASE("trapezoid line integral is second order") {
  Domain disk = Domain::disk({0, 0}, 1.0);
  auto gd = make_grid_domain(disk, 513);
  ScalarField bump = make_phantom(*gd, gaussian(0.5, {0.1, 0.1}, 0.25));
  auto ch = make_chord(disk, direction(3.3), 3.3 + pi - 0.2);
  double exact = bump.ray_integral(ch.x_in, ch.v(), ch.tau_plus);
  double e1 = std::abs(line_integral(bump, ch, 0.1) - exact);
  double e2 = std::abs(line_integral(bump, ch, 0.05) - exact);
  double e3 = std::abs(line_integral(bump, ch, 0.025) - exact);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.25));
  CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("coefficient ordering") {
  auto gd = make_grid_domain(Domain::disk({0, 0}, 1.0), 33);
  ScalarField a = constant_field(*gd, 1.0);
  CHECK_NOTHROW(CoefficientPair(a, constant_field(*gd, 0.5), 0.5, *gd));
  CHECK_NOTHROW(CoefficientPair(a, constant_field(*gd, 1.0), 1.0, *gd));
  CHECK_NOTHROW(CoefficientPair(a, constant_field(*gd, 0.0), 0.0, *gd));
  CHECK_THROWS_AS(CoefficientPair(a, constant_field(*gd, 1.2), 0.5, *gd), Error);
  CHECK_THROWS_AS(CoefficientPair(a, constant_field(*gd, 0.3), 0.5, *gd), Error);
  CHECK_THROWS_AS(CoefficientPair(a, constant_field(*gd, 0.3), 0.0, *gd), Error);
}

TEST_CASE("field text round trip") {
  auto gd = make_grid_domain(Domain::disk({0, 0}, 1.0), 17);
  ScalarField f = make_phantom(*gd, gaussian(0.5, {0.2, -0.1}, 0.3));
  std::stringstream ss;
  write_field(ss, f);
  ScalarField g = read_field(ss);
  CHECK(g.grid() == f.grid());
  for (int k = 0; k < f.grid().size(); ++k) CHECK(g[k] == f[k]);
}
