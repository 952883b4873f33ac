#pragma once

#include <functional>

#include "rte/transport.hpp"

namespace rte {

/// Brute-force checks that share no quadrature with the main code paths.

/// n-point composite trapezoid of g along the chord. Raises
/// OracleBudgetExceeded above max_points.
double oracle_line_integral(const std::function<double(const Vec2d&)>& g, const ChordRay<double>& c,
                            long n = 1000000, long max_points = 100000000);

/// Backward exit time by bisection on xi, independent of ray_exit.
double oracle_exit_time(const Domain& d, const Vec2d& x, const Vec2d& v);

struct ExitDerivatives {
  Vec2d grad_x = Vec2d::Zero();
  Vec2d grad_v = Vec2d::Zero();  ///< v treated as a free 2-vector
  double d_angle = 0;  ///< derivative with respect to the direction angle
};

/// Central differences of the bisection exit time.
ExitDerivatives oracle_finite_difference(const Domain& d, const Vec2d& x, double angle, double step = 1e-6);

/// Area integral of g over d in polar coordinates about the centre,
/// Gauss-Legendre in radius and trapezoid in angle.
double oracle_area_integral(const Domain& d, const std::function<double(const Vec2d&)>& g, int n_r = 200,
                            int n_theta = 400);

struct RefinedSolve {
  KineticSolution coarse, fine;
  double rel_l2_gap = 0;  ///< || <f_coarse> - <f_fine> || / || <f_fine> || at coarse nodes
};

/// Solves on n and on factor * (n - 1) + 1 nodes with factor times the
/// ordinates. Raises OracleBudgetExceeded when the refined phase-space
/// array exceeds max_bytes.
RefinedSolve oracle_refined_solve(const Domain& d, const PhantomSpec& sigma_a, const PhantomSpec& sigma_s,
                                  const BoundaryFunction& phi, int n, int n_dirs, int factor = 4,
                                  std::size_t max_bytes = std::size_t(2) << 30, double tol = 1e-8);

}  // namespace rte
