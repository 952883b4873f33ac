#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace rte {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};

inline GaussRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  GaussRule r;
  r.x.assign(n, 0.0);
  r.w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0, p1 = 0.0;
    for (int k = 1; k <= n; ++k) {
      double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
    }
    dp = n * (z * p0 - p1) / (z * z - 1.0);
    r.x[i] = -z;
    r.x[n - 1 - i] = z;
    r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return r;
}

/// Integral of f over [a, b] with an n-point Gauss-Legendre rule.
template <class F>
double integrate_gauss(F&& f, double a, double b, const GaussRule& rule) {
  double half = 0.5 * (b - a), mid = 0.5 * (a + b), s = 0.0;
  for (size_t i = 0; i < rule.x.size(); ++i) s += rule.w[i] * f(mid + half * rule.x[i]);
  return s * half;
}

namespace detail {

template <class F>
double gk15(F& f, double a, double b, double& err) {
  static const double xk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                               0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                               0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                               0.207784955007898467600689403773245, 0.0};
  static const double wk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                               0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                               0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                               0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static const double wg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                               0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
  double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double fc = f(c);
  double rk = wk[7] * fc, rg = wg[3] * fc;
  for (int j = 0; j < 7; ++j) {
    double dx = h * xk[j];
    double f1 = f(c - dx), f2 = f(c + dx);
    rk += wk[j] * (f1 + f2);
    if (j % 2 == 1) rg += wg[j / 2] * (f1 + f2);
  }
  err = std::abs((rk - rg) * h);
  return rk * h;
}

template <class F>
double adaptive_gk(F& f, double a, double b, double tol, int depth) {
  double err = 0.0;
  double whole = gk15(f, a, b, err);
  if (err <= tol || depth <= 0) return whole;
  double m = 0.5 * (a + b);
  return adaptive_gk(f, a, m, 0.5 * tol, depth - 1) + adaptive_gk(f, m, b, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod (7/15) integration to an absolute tolerance.
template <class F>
double integrate_adaptive(F f, double a, double b, double tol = 1e-14, int max_depth = 40) {
  return detail::adaptive_gk(f, a, b, tol, max_depth);
}

/// Composite trapezoid weights for n >= 2 equispaced nodes on [a, b].
inline std::vector<double> trapezoid_weights(double a, double b, int n) {
  std::vector<double> w(n, (b - a) / (n - 1));
  w.front() *= 0.5;
  w.back() *= 0.5;
  return w;
}

}  // namespace rte
