#include "rte/nonlinear.hpp"

#include <algorithm>
#include <cmath>

namespace rte {

EllipticOperator::EllipticOperator(GridDomainPtr gd) : gd_(std::move(gd)) {
  const GridDomain& g = *gd_;
  const Grid& grid = g.grid();
  const Domain& d = g.domain();
  const double h = grid.h;
  const int n = g.n_interior();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(5 * n);
  const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
  for (int s = 0; s < n; ++s) {
    int k = g.interior()[s];
    int i = k % grid.nx, j = k / grid.nx;
    Vec2d x = grid.node(k);
    double arm[4];
    int nb[4];
    for (int q = 0; q < 4; ++q) {
      int kk = grid.index(i + di[q], j + dj[q]);
      nb[q] = g.interior_slot(kk);
      if (nb[q] >= 0) {
        arm[q] = h;
      } else {
        double t = d.ray_exit(x, Vec2d(di[q], dj[q]));
        arm[q] = std::clamp(t == t ? t : h, 1e-6 * h, h);
      }
    }
    double diag = 0;
    for (int axis = 0; axis < 2; ++axis) {
      int a = 2 * axis, b = 2 * axis + 1;
      double hp = arm[a], hm = arm[b];
      double cp = 2.0 / (hp * (hp + hm)), cm = 2.0 / (hm * (hp + hm));
      diag += cp + cm;
      if (nb[a] >= 0) trip.emplace_back(s, nb[a], -cp);
      if (nb[b] >= 0) trip.emplace_back(s, nb[b], -cm);
    }
    trip.emplace_back(s, s, diag);
  }
  L_.resize(n, n);
  L_.setFromTriplets(trip.begin(), trip.end());
  L_.makeCompressed();
}

Eigen::VectorXd EllipticOperator::solve(const Eigen::VectorXd& rhs, double lambda) const {
  if (!lu_ || lambda != cached_lambda_) {
    Eigen::SparseMatrix<double> A = L_;
    if (lambda != 0) {
      Eigen::SparseMatrix<double> I(L_.rows(), L_.cols());
      I.setIdentity();
      A += lambda * I;
    }
    auto lu = std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    lu->compute(A);
    if (lu->info() != Eigen::Success) throw Error(ErrorKind::LinearSolveFailed, "sparse LU factorisation failed");
    lu_ = lu;
    cached_lambda_ = lambda;
  }
  Eigen::VectorXd u = lu_->solve(rhs);
  if (lu_->info() != Eigen::Success || !u.allFinite()) throw Error(ErrorKind::LinearSolveFailed, "elliptic solve failed");
  return u;
}

ScalarField dirichlet_field(const GridDomain& gd, const Eigen::VectorXd& v) {
  ScalarField f(gd.grid(), 0.0);
  for (int s = 0; s < gd.n_interior(); ++s) f[gd.interior()[s]] = v[s];
  return f;
}

ScalarField poisson_dirichlet(const EllipticOperator& op, const ScalarField& rhs) {
  const GridDomain& g = op.grid_domain();
  Eigen::VectorXd b = interior_values(g, rhs);
  if (!b.allFinite()) throw Error(ErrorKind::LinearSolveFailed, "non-finite right-hand side");
  return dirichlet_field(g, op.solve(b));
}

ScalarField poisson_dirichlet(GridDomainPtr gd, const ScalarField& rhs) {
  EllipticOperator op(std::move(gd));
  return poisson_dirichlet(op, rhs);
}

Eigen::VectorXd monotone_step(const EllipticOperator& op, const Eigen::VectorXd& sigma_a, double lambda,
                              const Eigen::VectorXd& T, const Eigen::VectorXd& mean_I, double t_max) {
  Eigen::VectorXd t4 = T.array().square().square();
  Eigen::VectorXd rhs = lambda * T - sigma_a.cwiseProduct(t4) + sigma_a.cwiseProduct(mean_I);
  Eigen::VectorXd next = op.solve(rhs, lambda);
  const double tol = 1e-12 * std::max(1.0, t_max);
  if ((next - T).minCoeff() < -tol)
    throw Error(ErrorKind::MonotonicityViolated, "monotone step decreased the temperature");
  if (next.maxCoeff() > t_max + tol)
    throw Error(ErrorKind::MonotonicityViolated, "monotone step exceeded the ||phi||^(1/4) bound");
  return next;
}

TemperatureSolve solve_temperature(const EllipticOperator& op, const ScatterOperator& K, const Eigen::VectorXd& sigma_a,
                                   const Eigen::VectorXd& mean_I1, double phi_sup, const NonlinearOptions& opt) {
  TemperatureSolve out;
  const double t_max = std::pow(std::max(phi_sup, 0.0), 0.25);
  const double sa_max = sigma_a.size() ? sigma_a.maxCoeff() : 0.0;
  const int n = static_cast<int>(mean_I1.size());
  Eigen::VectorXd H = Eigen::VectorXd::Constant(n, opt.start_high ? t_max : 0.0);
  Eigen::VectorXd T = Eigen::VectorXd::Zero(n);
  for (int outer = 0; outer < opt.max_outer; ++outer) {
    Eigen::VectorXd h4 = H.array().square().square();
    Eigen::VectorXd mean_I = mean_I1 + K.apply(sigma_a.cwiseProduct(h4));
    Eigen::VectorXd tbar = op.solve(sigma_a.cwiseProduct(mean_I), 0.0);
    double b = std::min(t_max, std::max(0.0, tbar.maxCoeff()));
    double lambda = 8.0 * sa_max * b * b * b;
    out.lambda = lambda;
    T.setZero();
    double inc = 0;
    int k = 0;
    for (; k < opt.max_inner; ++k) {
      Eigen::VectorXd next = monotone_step(op, sigma_a, lambda, T, mean_I, t_max);
      if ((next - tbar).maxCoeff() > 1e-10 * std::max(1.0, tbar.maxCoeff())) out.below_supersolution = false;
      inc = (next - T).cwiseAbs().maxCoeff();
      if ((next - T).maxCoeff() > 0) ++out.strict_increases;
      T = next;
      out.t_sup_history.push_back(T.size() ? T.maxCoeff() : 0.0);
      if (inc < opt.inner_tol) break;
    }
    out.inner_iterations += k + 1;
    out.inner_residual = inc;
    if (inc >= opt.inner_tol) throw Error(ErrorKind::NotConverged, "inner monotone iteration did not converge");
    double res = (T - H).cwiseAbs().maxCoeff();
    out.outer_history.push_back(res);
    out.outer_residual = res;
    out.outer_iterations = outer + 1;
    H = (1 - opt.damping) * H + opt.damping * T;
    if (res < opt.outer_tol) {
      out.T = T;
      Eigen::VectorXd t4 = T.array().square().square();
      out.mean_I = mean_I1 + K.apply(sigma_a.cwiseProduct(t4));
      return out;
    }
  }
  throw Error(ErrorKind::NotConverged, "outer fixed point did not converge in " + std::to_string(opt.max_outer) + " steps");
}

NonlinearState solve_coupled(GridDomainPtr gd, const ScalarField& sigma_a, const BoundaryFunction& phi,
                             const NonlinearOptions& opt, const ScatterOperator* K, const EllipticOperator* op) {
  NonlinearState st;
  st.I = solve_attenuation(gd, sigma_a, phi, opt.transport);
  st.phi_sup = opt.phi_sup;
  if (st.phi_sup <= 0) {
    BoundaryFunction p = phi;
    p.tabulate(p.quadrature(gd->domain()));
    st.phi_sup = p.sup_on_table();
  }
  std::unique_ptr<ScatterOperator> ownK;
  std::unique_ptr<EllipticOperator> ownL;
  if (!K) {
    ownK = std::make_unique<ScatterOperator>(gd, sigma_a, st.I.ang, st.I.step, opt.transport.workers,
                                             opt.transport.max_dense_bytes);
    K = ownK.get();
  }
  if (!op) {
    ownL = std::make_unique<EllipticOperator>(gd);
    op = ownL.get();
  }
  const GridDomain& g = *gd;
  Eigen::VectorXd sa = interior_values(g, sigma_a);
  Eigen::VectorXd m1 = interior_values(g, st.I.mean);
  st.info = solve_temperature(*op, *K, sa, m1, st.phi_sup, opt);
  st.T = dirichlet_field(g, st.info.T);
  // I = I_1 + Duhamel(sigma_a T^4) on every node and ordinate
  Eigen::VectorXd src = sa.cwiseProduct(Eigen::VectorXd(st.info.T.array().square().square()));
  KineticSolution re = apply_duhamel(gd, sigma_a, field_from_interior(g, src), opt.transport);
  st.I.f += re.f;
  st.I.mean = field_from_interior(g, st.I.f.rowwise().mean());
  st.I.source = re.source;
  st.I.iterations = st.info.outer_iterations;
  st.I.residual = st.info.outer_residual;
  return st;
}

NonlinearEnergy nonlinear_energy_check(const NonlinearState& s, double sigma_0, const BoundaryFunction& phi, double slack) {
  NonlinearEnergy e;
  const GridDomain& g = *s.I.gd;
  const double h = g.grid().h;
  Eigen::VectorXd mean = s.I.f.rowwise().mean();
  Eigen::VectorXd t4 = s.info.T.array().square().square();
  e.emission_gap = sigma_0 * h * h * (mean - t4).squaredNorm();
  Eigen::MatrixXd dev = s.I.f.colwise() - mean;
  e.anisotropy = sigma_0 * phase_l2_squared(g, dev);
  BoundaryFunction p = phi;
  p.tabulate(p.quadrature(g.domain()));
  double n2 = p.lp_norm(2.0);
  e.half_phi = 0.5 * n2 * n2;
  e.first_ok = e.emission_gap <= e.half_phi * (1 + slack);
  e.second_ok = e.anisotropy <= e.half_phi * (1 + slack);
  return e;
}

}  // namespace rte
