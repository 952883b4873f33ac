#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "rte/probes.hpp"

using namespace rte;
using std::numbers::pi;

namespace {

const Domain kDisk = Domain::disk({0, 0}, 1.0);

// composite Simpson with a fixed panel count
template <class F>
double simpson(F&& f, double a, double b, int n = 200000) {
  double h = (b - a) / n, s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3;
}

// line intersection from homogeneous coordinates
Vec2d homogeneous_crossing(const Vec2d& p, const Vec2d& u, const Vec2d& q, const Vec2d& w) {
  Eigen::Vector3d l1 = Eigen::Vector3d(p.x(), p.y(), 1).cross(Eigen::Vector3d(p.x() + u.x(), p.y() + u.y(), 1));
  Eigen::Vector3d l2 = Eigen::Vector3d(q.x(), q.y(), 1).cross(Eigen::Vector3d(q.x() + w.x(), q.y() + w.y(), 1));
  Eigen::Vector3d c = l1.cross(l2);
  return Vec2d(c.x() / c.z(), c.y() / c.z());
}

}  // namespace

TEST_CASE("mollifier constraints") {
  for (auto variant : {ProfileVariant::OneSided, ProfileVariant::Even}) {
    for (auto kind : {ProfileKind::Phi0, ProfileKind::Psi0}) {
      Mollifier m(kind, variant);
      CHECK(m(0.0) == 1.0);
      CHECK(m(m.radius()) == 0.0);
      CHECK(m(1.01 * m.radius()) == 0.0);
      CHECK(m(-1.5 * m.radius()) == 0.0);
      for (double r = 0; r < m.radius(); r += 0.01) CHECK((m(r) >= 0.0 && m(r) <= 1.0));
      double lo = variant == ProfileVariant::Even ? -m.radius() : 0.0;
      CHECK(simpson(m, lo, m.radius()) == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(m.integral() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  CHECK(mollifier_profile(ProfileKind::Phi0, ProfileVariant::Even, 0.0) == 1.0);
  CHECK(mollifier_profile(ProfileKind::Psi0, ProfileVariant::OneSided, 5.0) == 0.0);

  const Mollifier& phi = phi0_profile(ProbeMode::Absorption);
  const Mollifier& psi = psi0_profile();
  double pair = simpson([&](double r) { return phi(r) * psi(r); }, 0.0, psi.radius());
  CHECK(phi.pairing(psi) == doctest::Approx(pair).epsilon(1e-10));
}

TEST_CASE("calibration constants") {
  const Mollifier& phi = phi0_profile(ProbeMode::Absorption);
  double c = simpson([&](double r) { return phi(r) * psi0_profile()(r); }, 0.0, phi.radius());
  CHECK(absorption_constant() == doctest::Approx(2 * c / pi).epsilon(1e-10));
  CHECK(scattering_constant() == doctest::Approx(1 / (pi * pi)).epsilon(1e-10));
}

TEST_CASE("absorption probe data") {
  const double eps = 0.05, delta = 0.05;
  ProbeConfig p = absorption_probe(kDisk, direction(pi), 0.2, eps, delta);
  CHECK(p.v_out == p.v_in);
  CHECK((p.x_out - (p.x_in + exit_time(kDisk, p.x_in, p.dir_in()) * p.dir_in())).norm() <= 1e-12);
  BoundaryFunction phi = build_incoming(kDisk, p);
  CHECK(phi(p.x_in, p.v_in) == doctest::Approx(1 / (eps * delta)).epsilon(1e-14));
  const double R = phi0_profile(ProbeMode::Absorption).radius();
  double off = 2 * std::asin(0.5 * delta * R) * 1.0001;
  CHECK(phi(p.x_in, p.v_in + off) == 0.0);
  CHECK(phi(p.x_in, p.v_in - off) == 0.0);
  CHECK(phi(p.x_in, p.v_in + 0.9 * off) > 0.0);

  BoundaryFunction psi = build_measurement(kDisk, p);
  CHECK(psi(p.x_out, p.v_out) == 1.0);

  // L2 norm against a brute-force rectangle rule at four times the resolution
  phi.tabulate(phi.quadrature(kDisk));
  double l2 = phi.lp_norm(2.0);
  const PhaseWindow& w = *phi.support();
  const int n = 256;
  double ds = (w.s_hi - w.s_lo) / n, dt = (w.th_hi - w.th_lo) / n, acc = 0;
  for (int i = 0; i < n; ++i) {
    Vec2d x = kDisk.boundary_point(w.s_lo + (i + 0.5) * ds);
    Vec2d nx = kDisk.normal(x);
    for (int k = 0; k < n; ++k) {
      double th = w.th_lo + (k + 0.5) * dt;
      double nv = nx.dot(direction(th));
      if (nv < 0) acc += phi(x, th) * phi(x, th) * -nv * ds * dt / (2 * pi);
    }
  }
  CHECK(l2 == doctest::Approx(std::sqrt(acc)).epsilon(1e-3));
  auto norms = phi.norms({1.2, 1.5, 2.0});
  CHECK(norms.size() == 3);
  CHECK(norms[2.0] == l2);

  // wide spatial widths leave the non-degenerate patch
  CHECK_THROWS_AS(build_incoming(kDisk, absorption_probe(kDisk, direction(pi), 0.2, 0.8, delta)), Error);
}

TEST_CASE("crossing geometry") {
  ProbeGeometry g = intersect_rays(Vec2d(-1, 0), Vec2d(1, 0), Vec2d(0, 1), Vec2d(0, 1));
  CHECK(g.x0.norm() <= 1e-15);
  CHECK(g.s0 == doctest::Approx(1.0));
  CHECK(g.s0_prime == doctest::Approx(1.0));
  CHECK_THROWS_AS(crossing_geometry(kDisk, Vec2d(-1, 0), Vec2d(1, 0), Vec2d(0, 1), Vec2d(0, 1)), Error);
  CHECK_THROWS_AS(intersect_rays(Vec2d(-1, 0), Vec2d(1, 0), Vec2d(1, 0.2), Vec2d(1, 0)), Error);

  Vec2d vin(0, 1), vout(std::sin(pi / 9), std::cos(pi / 9));
  Vec2d xin(0, -1);
  Vec2d xout = Vec2d(0, 0.1) + exit_time(kDisk, Vec2d(0, 0.1), vout) * vout;
  ProbeGeometry h = crossing_geometry(kDisk, xin, vin, xout, vout);
  CHECK(h.eta == doctest::Approx(std::sin(pi / 9)).epsilon(1e-14));
  CHECK(h.eta == doctest::Approx(0.3420201433256687).epsilon(1e-12));

  Domain ell = Domain::ellipse({0.1, -0.2}, 2.0, 1.0);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-1, 1);
  int checked = 0;
  for (int trial = 0; trial < 200 && checked < 40; ++trial) {
    Vec2d x0(0.1 + 1.2 * U(rng), -0.2 + 0.6 * U(rng));
    if (ell.xi(x0) > -0.05) continue;
    double a = pi * U(rng), b = a + 0.3 + 0.9 * std::abs(U(rng));
    Vec2d vi = direction(a), vo = direction(b);
    Vec2d xi = x0 - exit_time(ell, x0, vi, Orientation::Backward) * vi;
    Vec2d xo = x0 + exit_time(ell, x0, vo) * vo;
    ProbeGeometry c = crossing_geometry(ell, xi, vi, xo, vo);
    CHECK((c.x0 - homogeneous_crossing(xi, vi, xo, vo)).norm() <= 1e-10);
    CHECK((xi + c.s0_prime * vi - (xo - c.s0 * vo)).norm() <= 1e-12);
    CHECK(c.eta > 0);
    // eta <= |V_out - V_in| <= 2 eta
    double gap = (vo - vi).norm();
    CHECK(c.eta <= gap + 1e-15);
    CHECK(gap <= 2 * c.eta);
    ++checked;
  }
  CHECK(checked == 40);
}

TEST_CASE("parameter schedule") {
  Schedule s = parameter_schedule(0.1, 0.2);
  CHECK(s.delta == doctest::Approx(0.063095734448019).epsilon(1e-12));
  CHECK(s.beta == s.delta);
  CHECK_FALSE(s.feasible);
  CHECK(s.eps == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(s.theta == s.eps);

  // feasibility frontier at eta = 0.01 by bisection on eta - 2 eta^{1 + b}
  double lo = 0, hi = 1;
  for (int i = 0; i < 200; ++i) {
    double m = 0.5 * (lo + hi);
    (0.01 > 2 * std::pow(0.01, 1 + m) ? hi : lo) = m;
  }
  CHECK(hi == doctest::Approx(0.15051499783199057).epsilon(1e-12));
  CHECK(min_feasible_beta0(0.01) == doctest::Approx(hi).epsilon(1e-12));
  CHECK(parameter_schedule(0.01, hi * 1.001).feasible);
  CHECK_FALSE(parameter_schedule(0.01, hi * 0.999).feasible);

  CHECK_THROWS_AS(parameter_schedule(0.1, 0.1, 2.0), Error);
  CHECK_THROWS_AS(parameter_schedule(0.1, 0.1, 1.0), Error);

  Schedule t = parameter_schedule(0.1, 0.1, 1.5);
  CHECK(t.ratio_param1 == doctest::Approx(std::pow(0.1, 0.3)).epsilon(1e-12));

  double prev = 1e300;
  for (double eta : {0.2, 0.1, 0.05, 0.025}) {
    Schedule u = parameter_schedule(eta, default_beta0(eta));
    CHECK(u.feasible);
    CHECK(u.ratio_eta == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(u.ratio_param1 < prev);
    prev = u.ratio_param1;
  }
}

TEST_CASE("scattering probe data") {
  Schedule s = parameter_schedule(0.1, default_beta0(0.1));
  Vec2d x0(0.0, 0.0);
  double a = 0.3, b = a + std::asin(0.1);
  ProbeConfig p = scattering_probe(kDisk, x0, a, b, s);
  CHECK(p.eta == doctest::Approx(0.1).epsilon(1e-12));
  BoundaryFunction phi = build_incoming(kDisk, p), psi = build_measurement(kDisk, p);
  CHECK(psi(p.x_out, p.v_out) == doctest::Approx(1 / (p.theta * p.beta)).epsilon(1e-14));
  CHECK(phi(p.x_in, p.v_in) == doctest::Approx(1 / (p.eps * p.delta)).epsilon(1e-14));

  // no direction lies in both angular supports
  const PhaseWindow& wi = *phi.support();
  const PhaseWindow& wo = *psi.support();
  CHECK((wi.th_hi < wo.th_lo || wo.th_hi < wi.th_lo));
  for (int k = 0; k <= 1000; ++k) {
    double th = wo.th_lo + (wo.th_hi - wo.th_lo) * k / 1000;
    CHECK(phi(p.x_in, th) == 0.0);
  }

  // M_psi(f_1) vanishes term by term
  auto gd = make_grid_domain(kDisk, 17);
  TransportOptions o;
  o.n_dirs = 16;
  KineticSolution f1 = solve_attenuation(gd, constant_field(*gd, 1.0), phi, o);
  auto q = psi.quadrature(kDisk);
  int nonzero = 0;
  for (const auto& node : q.nodes)
    if (psi(node.x, node.angle) * f1.evaluate(node.x, node.angle) != 0.0) ++nonzero;
  CHECK(nonzero == 0);
  CHECK(measure(kDisk, psi, f1, &q) == 0.0);

  // an infeasible schedule is refused
  CHECK_THROWS_AS(scattering_probe(kDisk, x0, a, b, parameter_schedule(0.1, 0.2)), Error);
  CHECK_THROWS_AS(scattering_probe(kDisk, x0, a, a + pi / 2 + 0.1, s), Error);
}
