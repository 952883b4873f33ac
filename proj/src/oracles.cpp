#include "rte/oracles.hpp"

#include <cmath>
#include <numbers>

#include "rte/quadrature.hpp"

namespace rte {

double oracle_line_integral(const std::function<double(const Vec2d&)>& g, const ChordRay<double>& c, long n,
                            long max_points) {
  if (n < 2) n = 2;
  if (n > max_points) throw Error(ErrorKind::OracleBudgetExceeded, "line oracle point budget exceeded");
  const Vec2d v = c.v();
  const double dt = c.tau_plus / (n - 1);
  double s = 0.5 * (g(c.x_in) + g(c.x_in + c.tau_plus * v));
  for (long i = 1; i < n - 1; ++i) s += g(c.x_in + (i * dt) * v);
  return s * dt;
}

double oracle_exit_time(const Domain& d, const Vec2d& x, const Vec2d& v) {
  if (!(d.xi(x) <= 0)) throw Error(ErrorKind::PointOutsideDomain, "oracle_exit_time: point outside");
  double lo = 0, hi = (d.diameter_bound() + 1.0) / v.norm();
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    double mid = 0.5 * (lo + hi);
    (d.xi(x - mid * v) <= 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

ExitDerivatives oracle_finite_difference(const Domain& d, const Vec2d& x, double angle, double step) {
  ExitDerivatives r;
  const Vec2d v = direction(angle);
  for (int k = 0; k < 2; ++k) {
    Vec2d e = Vec2d::Zero();
    e[k] = step;
    r.grad_x[k] = (oracle_exit_time(d, x + e, v) - oracle_exit_time(d, x - e, v)) / (2 * step);
    r.grad_v[k] = (oracle_exit_time(d, x, v + e) - oracle_exit_time(d, x, v - e)) / (2 * step);
  }
  r.d_angle = (oracle_exit_time(d, x, direction(angle + step)) - oracle_exit_time(d, x, direction(angle - step))) /
              (2 * step);
  return r;
}

double oracle_area_integral(const Domain& d, const std::function<double(const Vec2d&)>& g, int n_r, int n_theta) {
  const GaussRule rule = gauss_legendre(n_r);
  const Vec2d c = d.center();
  double total = 0;
  for (int k = 0; k < n_theta; ++k) {
    const double th = 2 * std::numbers::pi * k / n_theta;
    const Vec2d u = direction(th);
    const double rb = oracle_exit_time(d, c, Vec2d(-u));
    total += integrate_gauss([&](double r) { return r * g(c + r * u); }, 0.0, rb, rule);
  }
  return total * 2 * std::numbers::pi / n_theta;
}

RefinedSolve oracle_refined_solve(const Domain& d, const PhantomSpec& sigma_a, const PhantomSpec& sigma_s,
                                  const BoundaryFunction& phi, int n, int n_dirs, int factor, std::size_t max_bytes,
                                  double tol) {
  const int nf = factor * (n - 1) + 1, df = factor * n_dirs;
  const double cells = std::pow(nf + 2.0, 2) * std::numbers::pi / 4;
  if (cells * df * sizeof(double) > static_cast<double>(max_bytes))
    throw Error(ErrorKind::OracleBudgetExceeded, "refined phase-space array exceeds the memory budget");
  auto solve = [&](int m, int dirs) {
    auto gd = make_grid_domain(d, m);
    ScalarField a = make_phantom(*gd, sigma_a), s = make_phantom(*gd, sigma_s);
    double s0 = s.min_interior(*gd);
    CoefficientPair c(a, s, s0 > 0 ? s0 : 0.0, *gd);
    TransportOptions o;
    o.n_dirs = dirs;
    o.tol = tol;
    o.max_iter = 5000;
    o.max_dense_bytes = max_bytes / 2;
    return solve_rte(gd, c, phi, o);
  };
  RefinedSolve r;
  r.coarse = solve(n, n_dirs);
  r.fine = solve(nf, df);
  double num = 0, den = 0;
  const GridDomain& g = *r.coarse.gd;
  for (int k : g.interior()) {
    double a = r.coarse.mean[k], b = r.fine.mean(g.grid().node(k));
    num += (a - b) * (a - b);
    den += b * b;
  }
  r.rel_l2_gap = den > 0 ? std::sqrt(num / den) : std::sqrt(num);
  return r;
}

}  // namespace rte
