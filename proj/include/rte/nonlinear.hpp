#pragma once

#include <Eigen/Sparse>
#include <memory>
#include <vector>

#include "rte/transport.hpp"

namespace rte {

/// Five-point -Laplacian on interior nodes with Shortley-Weller arms where a
/// neighbour lies outside the domain; zero Dirichlet data on the boundary.
/// The matrix is an M-matrix, so (L + lambda) has a nonnegative inverse.
class EllipticOperator {
 public:
  explicit EllipticOperator(GridDomainPtr gd);

  const Eigen::SparseMatrix<double>& matrix() const { return L_; }
  const GridDomain& grid_domain() const { return *gd_; }
  GridDomainPtr grid_domain_ptr() const { return gd_; }

  /// Solves (L + lambda I) u = rhs on interior nodes.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs, double lambda = 0.0) const;
  /// L u at interior nodes.
  Eigen::VectorXd apply(const Eigen::VectorXd& u) const { return L_ * u; }

 private:
  GridDomainPtr gd_;
  Eigen::SparseMatrix<double> L_;
  mutable double cached_lambda_ = -1;
  mutable std::shared_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
};

/// Interior vector to a field that vanishes off the domain.
ScalarField dirichlet_field(const GridDomain& gd, const Eigen::VectorXd& v);

/// -Laplace u = rhs, u = 0 on the boundary.
ScalarField poisson_dirichlet(const EllipticOperator& op, const ScalarField& rhs);
ScalarField poisson_dirichlet(GridDomainPtr gd, const ScalarField& rhs);

/// One monotone update: (-Laplace + lambda) T_next = lambda T - sigma_a T^4 + sigma_a <I>.
/// Raises MonotonicityViolated if T_next < T or T_next > t_max anywhere.
Eigen::VectorXd monotone_step(const EllipticOperator& op, const Eigen::VectorXd& sigma_a, double lambda,
                              const Eigen::VectorXd& T, const Eigen::VectorXd& mean_I, double t_max);

struct NonlinearOptions {
  TransportOptions transport{};
  double inner_tol = 1e-8;
  double outer_tol = 1e-6;
  int max_inner = 20000;
  int max_outer = 200;
  double damping = 1.0;  ///< omega in H <- (1 - omega) H + omega T
  bool start_high = false;  ///< start the outer loop from H = ||phi||^(1/4)
  double phi_sup = 0;       ///< ||phi||_inf; 0 means estimate from a quadrature
};

struct TemperatureSolve {
  Eigen::VectorXd T;       ///< interior temperature
  Eigen::VectorXd mean_I;  ///< <I_H> for the final H
  double lambda = 0;
  int outer_iterations = 0;
  int inner_iterations = 0;
  int monotonicity_violations = 0;
  int strict_increases = 0;
  double outer_residual = 0;
  double inner_residual = 0;
  bool below_supersolution = true;
  std::vector<double> outer_history;
  std::vector<double> t_sup_history;
};

/// Outer Picard loop on H around the inner monotone iteration. mean_I1 is the
/// ballistic average on interior nodes; K carries the sigma_a attenuation.
TemperatureSolve solve_temperature(const EllipticOperator& op, const ScatterOperator& K, const Eigen::VectorXd& sigma_a,
                                   const Eigen::VectorXd& mean_I1, double phi_sup, const NonlinearOptions& opt);

struct NonlinearState {
  KineticSolution I;
  ScalarField T;
  double phi_sup = 0;
  TemperatureSolve info;
};

NonlinearState solve_coupled(GridDomainPtr gd, const ScalarField& sigma_a, const BoundaryFunction& phi,
                             const NonlinearOptions& opt = {}, const ScatterOperator* K = nullptr,
                             const EllipticOperator* op = nullptr);

struct NonlinearEnergy {
  double emission_gap = 0;  ///< sigma_0 ||<I> - T^4||^2
  double anisotropy = 0;    ///< sigma_0 ||I - <I>||^2
  double half_phi = 0;      ///< 0.5 ||phi||^2 over Gamma_-
  bool first_ok = true, second_ok = true;
};

NonlinearEnergy nonlinear_energy_check(const NonlinearState& s, double sigma_0, const BoundaryFunction& phi,
                                       double slack = 0.05);

}  // namespace rte
