#pragma once

#include <limits>
#include <string>
#include <vector>

#include "rte/probe_solver.hpp"

namespace rte {

/// Grid-level singular decomposition f = f_1 + f_2 + f_3.
struct Decomposition {
  KineticSolution f1, f2, f3;
  int iterations = 0;  ///< source iterations for <f_3>
  double residual = 0;
};

/// f_1 = attenuation of phi, f_2 = Duhamel(sigma_s <f_1>), f_3 from source
/// iteration seeded with Duhamel(sigma_s <f_2>). Raises NotConverged.
Decomposition decompose_f123(GridDomainPtr gd, const CoefficientPair& c, const BoundaryFunction& phi,
                             const TransportOptions& opt = {});

/// |f - f_1 - Duhamel(sigma_s <f>)| at (x, angle) for f = f_1 + f_2 + f_3.
double decomposition_residual(const Decomposition& s, const CoefficientPair& c, const Vec2d& x, double angle);

struct ScatteringOptions {
  double c_in = 0.05;
  double margin = 0.05;             ///< required depth -xi(x0)
  double max_contamination = 1.0;   ///< bound on M_3 / M_2
};

struct ScatteringEstimate {
  Vec2d x0 = Vec2d::Zero();
  ProbeGeometry geometry{};
  ProbeConfig probe{};
  Schedule schedule{};
  double M = 0, m1 = 0, m2 = 0, m3 = 0;
  long m1_terms = 0, m1_nonzero = 0;
  double correction = 0;
  double estimate = 0;     ///< correction M / (C |n(X_out).V_out|)
  double estimate_f2 = 0;  ///< same with M_2 only
  double contamination = 0;  ///< M_3 / M_2
  double tolerance = 0;      ///< reported uncertainty of estimate
  double truth = std::numeric_limits<double>::quiet_NaN();
  bool failed = false;
  std::string error;
};

/// Crossing probe through x0: the incoming ray has angle v_in and the
/// outgoing ray is turned by asin(eta) in the direction `turn` (+1 or -1).
ScatteringEstimate estimate_sigma_s_at(const ProbeSolver& solver, const Vec2d& x0, double v_in, const Schedule& s,
                                       int turn = 1, const ScatteringOptions& o = {});

/// Independent estimates; per-point errors are recorded, not thrown.
std::vector<ScatteringEstimate> sweep_sigma_s(const ProbeSolver& solver, const std::vector<Vec2d>& points, double v_in,
                                              const Schedule& s, const ScatteringOptions& o = {}, int workers = 1);

/// n x n lattice on [lo, hi]^2 keeping points with -xi >= margin.
std::vector<Vec2d> interior_lattice(const Domain& d, int n, double lo, double hi, double margin);

struct ConvergenceRow {
  double eta = 0, beta0 = 0;
  double estimate = 0, error = 0, contamination = 0;
  double ratio_param1 = 0, ratio_full = 0, ratio_eta = 0;
};

struct ConvergenceStudy {
  std::vector<ConvergenceRow> rows;
  bool param1_decreasing = true;
  bool contamination_decreasing = true;
  bool full_decreasing = true;  ///< reported only
  bool error_nonincreasing = true;  ///< up to 20% jitter
};

/// beta0 defaults to default_beta0(eta) for each row. Raises
/// ScheduleInfeasible for an infeasible row or a non-decreasing sequence.
ConvergenceStudy schedule_convergence_study(const ProbeSolver& solver, const Vec2d& x0, double v_in,
                                            const std::vector<double>& etas, double truth,
                                            const ScatteringOptions& o = {});

std::string estimates_tsv(const std::vector<ScatteringEstimate>& e);
std::string convergence_tsv(const ConvergenceStudy& s);

/// Pearson correlation.
double correlation(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace rte
