#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "rte/field.hpp"

namespace rte {

/// N equispaced ordinates at angles 2 pi (k + 1/2) / N, each with weight 1/N.
struct AngularGrid {
  int n = 0;
  explicit AngularGrid(int n_dirs = 256);
  double angle(int k) const { return 2.0 * std::numbers::pi * (k + 0.5) / n; }
  Vec2d dir(int k) const { return direction(angle(k)); }
  double weight() const { return 1.0 / n; }
};

/// Rectangle in (arc length, direction angle) outside which a boundary
/// function vanishes.
struct PhaseWindow {
  double s_lo = 0, s_hi = 0, th_lo = 0, th_hi = 0;
};

/// Data on Gamma_- (incoming phi) or Gamma_+ (measurement psi), given as a
/// function of (x, angle). Norms are taken against |n.v| dS dv.
class BoundaryFunction {
 public:
  using Fn = std::function<double(const Vec2d& x, double angle)>;

  BoundaryFunction() = default;
  BoundaryFunction(Side side, Fn fn, bool nonnegative = true, std::optional<PhaseWindow> support = std::nullopt);
  static BoundaryFunction constant(Side side, double c);
  static BoundaryFunction zero(Side side) { return constant(side, 0.0); }

  double operator()(const Vec2d& x, double angle) const { return fn_(x, angle); }
  Side side() const { return side_; }
  bool nonnegative() const { return nonneg_; }
  const std::optional<PhaseWindow>& support() const { return support_; }
  bool is_zero() const { return zero_; }

  /// The windowed trapezoid over the support, or a full periodic rule.
  BoundaryQuadrature<double> quadrature(const Domain& d, int n_arc = 0, int n_ang = 0) const;

  /// Tabulates on q and stores the values for norm queries.
  void tabulate(const BoundaryQuadrature<double>& q);
  const std::vector<double>& table() const { return table_; }
  double lp_norm(double p) const;
  std::map<double, double> norms(const std::vector<double>& ps) const;
  double sup_on_table() const;

 private:
  Side side_ = Side::Incoming;
  Fn fn_;
  bool nonneg_ = true;
  bool zero_ = false;
  std::optional<PhaseWindow> support_;
  BoundaryQuadrature<double> quad_;
  std::vector<double> table_;
};

struct RayResult {
  double tau = 0;             ///< backward exit time
  Vec2d exit = Vec2d::Zero();  ///< backward exit point
  double transmission = 1;    ///< exp(-integral of sigma_a)
  double duhamel = 0;         ///< integral of exp(-A(s)) S(x - s v) ds
  bool grazing = false;
};

/// Backward characteristic from x along -v with the exponential-weight
/// Duhamel scheme. S may be null.
RayResult trace_back(const Domain& d, const ScalarField& sigma_a, const ScalarField* S, const Vec2d& x, const Vec2d& v,
                     double step);

/// Phase-space density on interior grid nodes x ordinates.
struct KineticSolution {
  GridDomainPtr gd;
  AngularGrid ang{256};
  Eigen::MatrixXd f;  ///< rows: interior slots, columns: ordinates
  ScalarField mean;   ///< <f> on the grid, extended outward
  double step = 0;
  int iterations = 0;
  double residual = 0;
  int grazing_nodes = 0;
  bool monotone = true;
  std::vector<double> residual_history;

  // Characteristic data for evaluation away from the grid.
  std::shared_ptr<const ScalarField> sigma_a;
  std::shared_ptr<const BoundaryFunction> phi;
  std::shared_ptr<const ScalarField> source;  ///< isotropic source, may be null

  /// f(x, v) from the characteristic formula, valid at any point of the closure.
  double evaluate(const Vec2d& x, double angle) const;
  double max_value() const { return f.size() ? f.maxCoeff() : 0.0; }
  double min_value() const { return f.size() ? f.minCoeff() : 0.0; }
};

struct TransportOptions {
  int n_dirs = 256;
  double step = 0;  ///< 0 selects h/2
  double tol = 1e-8;
  int max_iter = 500;
  int workers = 1;
  std::size_t max_dense_bytes = std::size_t(2) << 30;
};

/// Averaged Duhamel map: for an isotropic source S given at interior nodes,
/// returns <Duhamel(S)> at interior nodes. Dense when it fits the memory
/// budget, matrix-free otherwise.
class ScatterOperator {
 public:
  using Dense = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  ScatterOperator(GridDomainPtr gd, const ScalarField& sigma_a, const AngularGrid& ang, double step, int workers,
                  std::size_t max_dense_bytes);

  Eigen::VectorXd apply(const Eigen::VectorXd& s) const;
  bool dense() const { return dense_; }
  const Dense& matrix() const { return K_; }
  const GridDomain& grid_domain() const { return *gd_; }

 private:
  GridDomainPtr gd_;
  ScalarField sigma_a_;
  AngularGrid ang_;
  double step_;
  int workers_;
  bool dense_ = false;
  Dense K_;
};

/// Interior values to a full extended field.
ScalarField field_from_interior(const GridDomain& gd, const Eigen::VectorXd& v);
Eigen::VectorXd interior_values(const GridDomain& gd, const ScalarField& f);
/// Discrete L2(Omega) norm of interior values.
double l2_interior(const GridDomain& gd, const Eigen::VectorXd& v);

KineticSolution solve_attenuation(GridDomainPtr gd, const ScalarField& sigma_a, const BoundaryFunction& phi,
                                  const TransportOptions& opt = {});
KineticSolution apply_duhamel(GridDomainPtr gd, const ScalarField& sigma_a, const ScalarField& F,
                              const TransportOptions& opt = {});
/// Source iteration <f> <- <f_1> + K sigma_s <f> started from <f_1>.
KineticSolution solve_rte(GridDomainPtr gd, const CoefficientPair& c, const BoundaryFunction& phi,
                          const TransportOptions& opt = {}, const ScatterOperator* K = nullptr);

/// Integral of psi f over Gamma_+ with the measure |n.v| dS dv.
double measure(const Domain& d, const BoundaryFunction& psi, const KineticSolution& f,
               const BoundaryQuadrature<double>* q = nullptr);

struct EnergyDiagnostics {
  double ortho_norm = 0;  ///< ||f - <f>||^2 over Omega x S^1
  double phi_norm = 0;    ///< ||phi||^2 over Gamma_-
  double bound = 0;       ///< phi_norm / (2 sigma_0)
  bool bound_ok = true;
};

EnergyDiagnostics energy_diagnostics(const KineticSolution& f, const CoefficientPair& c, const BoundaryFunction& phi,
                                     double slack = 0.05);

/// Squared L2 norm over Omega x S^1 of interior rows, cell area h^2.
double phase_l2_squared(const GridDomain& gd, const Eigen::MatrixXd& g);

}  // namespace rte
