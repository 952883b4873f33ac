#include "rte/transport.hpp"

#include <algorithm>
#include <cmath>

#include "rte/parallel.hpp"

namespace rte {

AngularGrid::AngularGrid(int n_dirs) : n(n_dirs) {
  if (n_dirs < 1) throw Error(ErrorKind::ConfigInvalid, "need at least one ordinate");
}

BoundaryFunction::BoundaryFunction(Side side, Fn fn, bool nonnegative, std::optional<PhaseWindow> support)
    : side_(side), fn_(std::move(fn)), nonneg_(nonnegative), support_(support) {}

BoundaryFunction BoundaryFunction::constant(Side side, double c) {
  BoundaryFunction b(side, [c](const Vec2d&, double) { return c; }, c >= 0);
  b.zero_ = (c == 0.0);
  return b;
}

BoundaryQuadrature<double> BoundaryFunction::quadrature(const Domain& d, int n_arc, int n_ang) const {
  if (support_) {
    const PhaseWindow& w = *support_;
    return window_quadrature(d, side_, w.s_lo, w.s_hi, w.th_lo, w.th_hi, n_arc > 0 ? n_arc : 64, n_ang > 0 ? n_ang : 64);
  }
  return boundary_quadrature(d, side_, n_arc > 0 ? n_arc : 512, n_ang > 0 ? n_ang : 256);
}

void BoundaryFunction::tabulate(const BoundaryQuadrature<double>& q) {
  quad_ = q;
  table_.resize(q.nodes.size());
  for (size_t i = 0; i < q.nodes.size(); ++i) table_[i] = fn_(q.nodes[i].x, q.nodes[i].angle);
}

double BoundaryFunction::lp_norm(double p) const {
  double s = 0;
  for (size_t i = 0; i < table_.size(); ++i) s += quad_.nodes[i].weight * std::pow(std::abs(table_[i]), p);
  return std::pow(s, 1.0 / p);
}

std::map<double, double> BoundaryFunction::norms(const std::vector<double>& ps) const {
  std::map<double, double> out;
  for (double p : ps) out[p] = lp_norm(p);
  return out;
}

double BoundaryFunction::sup_on_table() const {
  double m = 0;
  for (double v : table_) m = std::max(m, std::abs(v));
  return m;
}

RayResult trace_back(const Domain& d, const ScalarField& sigma_a, const ScalarField* S, const Vec2d& x, const Vec2d& v,
                     double step) {
  RayResult r;
  const Vec2d u = -v;
  double tau = d.ray_exit(x, u);
  if (!(tau > 0)) tau = 0;
  r.tau = tau;
  r.exit = x + tau * u;
  r.grazing = std::abs(d.normal(r.exit).dot(v)) < Tolerance::tangency;
  if (tau == 0) return r;
  const int n = std::max(1, static_cast<int>(std::ceil(tau / step)));
  const double dt = tau / n;
  double A = 0, duh = 0;
  double sig0 = sigma_a(x), s0 = S ? (*S)(x) : 0.0;
  for (int m = 0; m < n; ++m) {
    Vec2d y = x + ((m + 1) * dt) * u;
    double sig1 = sigma_a(y), s1 = S ? (*S)(y) : 0.0;
    double a = 0.5 * (sig0 + sig1) * dt;
    double phi1 = a > 1e-12 ? -std::expm1(-a) / a : 1.0 - 0.5 * a;
    duh += std::exp(-A) * dt * phi1 * 0.5 * (s0 + s1);
    A += a;
    sig0 = sig1;
    s0 = s1;
  }
  r.transmission = std::exp(-A);
  r.duhamel = duh;
  return r;
}

double KineticSolution::evaluate(const Vec2d& x, double angle) const {
  Vec2d v = direction(angle);
  RayResult r = trace_back(gd->domain(), *sigma_a, source.get(), x, v, step);
  double val = r.duhamel;
  if (phi && !phi->is_zero()) val += r.transmission * (*phi)(r.exit, angle);
  return val;
}

ScalarField field_from_interior(const GridDomain& gd, const Eigen::VectorXd& v) {
  ScalarField f(gd.grid(), 0.0);
  const auto& in = gd.interior();
  for (size_t s = 0; s < in.size(); ++s) f[in[s]] = v[s];
  f.extend(gd);
  return f;
}

Eigen::VectorXd interior_values(const GridDomain& gd, const ScalarField& f) {
  Eigen::VectorXd v(gd.n_interior());
  const auto& in = gd.interior();
  for (size_t s = 0; s < in.size(); ++s) v[s] = f[in[s]];
  return v;
}

double l2_interior(const GridDomain& gd, const Eigen::VectorXd& v) { return gd.grid().h * v.norm(); }

double phase_l2_squared(const GridDomain& gd, const Eigen::MatrixXd& g) {
  double h = gd.grid().h;
  return h * h * g.squaredNorm() / g.cols();
}

ScatterOperator::ScatterOperator(GridDomainPtr gd, const ScalarField& sigma_a, const AngularGrid& ang, double step,
                                 int workers, std::size_t max_dense_bytes)
    : gd_(std::move(gd)), sigma_a_(sigma_a), ang_(ang), step_(step), workers_(workers) {
  const GridDomain& g = *gd_;
  const int n = g.n_interior();
  const std::size_t bytes = std::size_t(n) * std::size_t(n) * sizeof(double);
  dense_ = bytes <= max_dense_bytes;
  if (!dense_) return;
  K_.setZero(n, n);
  const Domain& d = g.domain();
  const Grid& grid = g.grid();
  std::vector<int> col(grid.size());
  for (int k = 0; k < grid.size(); ++k) col[k] = g.interior_slot(g.extension(k));
  parallel_for(n, workers_, [&](int i) {
    double* row = K_.row(i).data();
    const Vec2d x = grid.node(g.interior()[i]);
    const double wdir = ang_.weight();
    int idx0[4], idx1[4];
    double w0[4], w1[4];
    for (int k = 0; k < ang_.n; ++k) {
      const Vec2d u = -ang_.dir(k);
      double tau = d.ray_exit(x, u);
      if (!(tau > 0)) continue;
      const int ns = std::max(1, static_cast<int>(std::ceil(tau / step_)));
      const double dt = tau / ns;
      grid.stencil(x, idx0, w0);
      double sig0 = sigma_a_(x);
      double A = 0;
      for (int m = 0; m < ns; ++m) {
        Vec2d y = x + ((m + 1) * dt) * u;
        grid.stencil(y, idx1, w1);
        double sig1 = sigma_a_(y);
        double a = 0.5 * (sig0 + sig1) * dt;
        double phi1 = a > 1e-12 ? -std::expm1(-a) / a : 1.0 - 0.5 * a;
        double c = wdir * std::exp(-A) * dt * phi1 * 0.5;
        for (int q = 0; q < 4; ++q) {
          row[col[idx0[q]]] += c * w0[q];
          row[col[idx1[q]]] += c * w1[q];
        }
        A += a;
        sig0 = sig1;
        std::copy(idx1, idx1 + 4, idx0);
        std::copy(w1, w1 + 4, w0);
      }
    }
  });
}

Eigen::VectorXd ScatterOperator::apply(const Eigen::VectorXd& s) const {
  if (dense_) return K_ * s;
  const GridDomain& g = *gd_;
  ScalarField S = field_from_interior(g, s);
  Eigen::VectorXd out(g.n_interior());
  parallel_for(g.n_interior(), workers_, [&](int i) {
    const Vec2d x = g.grid().node(g.interior()[i]);
    double acc = 0;
    for (int k = 0; k < ang_.n; ++k) acc += trace_back(g.domain(), sigma_a_, &S, x, ang_.dir(k), step_).duhamel;
    out[i] = acc * ang_.weight();
  });
  return out;
}

namespace {

double resolve_step(const GridDomain& gd, const TransportOptions& opt) {
  return opt.step > 0 ? opt.step : 0.5 * gd.grid().h;
}

// Tabulates transmission * phi + duhamel(S) on every interior node and ordinate.
void sweep(KineticSolution& sol, const BoundaryFunction* phi, const ScalarField* S, int workers) {
  const GridDomain& g = *sol.gd;
  const int n = g.n_interior();
  sol.f.setZero(n, sol.ang.n);
  std::vector<int> grazing(n, 0);
  const bool use_phi = phi && !phi->is_zero();
  parallel_for(n, workers, [&](int i) {
    const Vec2d x = g.grid().node(g.interior()[i]);
    for (int k = 0; k < sol.ang.n; ++k) {
      double th = sol.ang.angle(k);
      RayResult r = trace_back(g.domain(), *sol.sigma_a, S, x, direction(th), sol.step);
      double val = r.duhamel;
      if (use_phi) val += r.transmission * (*phi)(r.exit, th);
      sol.f(i, k) = val;
      if (r.grazing) grazing[i] = 1;
    }
  });
  sol.grazing_nodes = 0;
  for (int c : grazing) sol.grazing_nodes += c;
  Eigen::VectorXd m = sol.f.rowwise().mean();
  sol.mean = field_from_interior(g, m);
}

KineticSolution blank(GridDomainPtr gd, const ScalarField& sigma_a, const TransportOptions& opt) {
  KineticSolution s;
  s.gd = gd;
  s.ang = AngularGrid(opt.n_dirs);
  s.step = resolve_step(*gd, opt);
  s.sigma_a = std::make_shared<const ScalarField>(sigma_a);
  return s;
}

}  // namespace

KineticSolution solve_attenuation(GridDomainPtr gd, const ScalarField& sigma_a, const BoundaryFunction& phi,
                                  const TransportOptions& opt) {
  KineticSolution s = blank(gd, sigma_a, opt);
  s.phi = std::make_shared<const BoundaryFunction>(phi);
  sweep(s, s.phi.get(), nullptr, opt.workers);
  s.iterations = 1;
  return s;
}

KineticSolution apply_duhamel(GridDomainPtr gd, const ScalarField& sigma_a, const ScalarField& F,
                              const TransportOptions& opt) {
  KineticSolution s = blank(gd, sigma_a, opt);
  s.source = std::make_shared<const ScalarField>(F);
  sweep(s, nullptr, s.source.get(), opt.workers);
  s.iterations = 1;
  return s;
}

KineticSolution solve_rte(GridDomainPtr gd, const CoefficientPair& c, const BoundaryFunction& phi,
                          const TransportOptions& opt, const ScatterOperator* K) {
  KineticSolution s = solve_attenuation(gd, c.sigma_a, phi, opt);
  if (!c.scattering()) return s;
  const GridDomain& g = *gd;
  std::unique_ptr<ScatterOperator> own;
  if (!K) {
    own = std::make_unique<ScatterOperator>(gd, c.sigma_a, s.ang, s.step, opt.workers, opt.max_dense_bytes);
    K = own.get();
  }
  const Eigen::VectorXd m1 = interior_values(g, s.mean);
  const Eigen::VectorXd ss = interior_values(g, c.sigma_s);
  Eigen::VectorXd m = m1;
  s.monotone = true;
  int it = 0;
  double res = 0;
  for (;;) {
    ++it;
    Eigen::VectorXd next = m1 + K->apply(ss.cwiseProduct(m));
    Eigen::VectorXd diff = next - m;
    res = l2_interior(g, diff);
    if (diff.minCoeff() < -1e-13 * std::max(1.0, next.cwiseAbs().maxCoeff())) s.monotone = false;
    s.residual_history.push_back(res);
    m = next;
    if (res < opt.tol) break;
    if (it >= opt.max_iter)
      throw Error(ErrorKind::NotConverged,
                  "source iteration stopped after " + std::to_string(it) + " sweeps, residual " + std::to_string(res));
  }
  ScalarField S = field_from_interior(g, ss.cwiseProduct(m));
  s.source = std::make_shared<const ScalarField>(S);
  sweep(s, s.phi.get(), s.source.get(), opt.workers);
  s.iterations = it;
  s.residual = res;
  return s;
}

double measure(const Domain& d, const BoundaryFunction& psi, const KineticSolution& f, const BoundaryQuadrature<double>* q) {
  BoundaryQuadrature<double> own;
  if (!q) {
    own = psi.quadrature(d);
    q = &own;
  }
  double total = 0;
  for (const auto& node : q->nodes) {
    double p = psi(node.x, node.angle);
    if (p == 0) continue;
    total += node.weight * p * f.evaluate(node.x, node.angle);
  }
  return total;
}

EnergyDiagnostics energy_diagnostics(const KineticSolution& f, const CoefficientPair& c, const BoundaryFunction& phi,
                                     double slack) {
  EnergyDiagnostics e;
  Eigen::VectorXd m = f.f.rowwise().mean();
  Eigen::MatrixXd dev = f.f.colwise() - m;
  e.ortho_norm = phase_l2_squared(*f.gd, dev);
  BoundaryFunction p = phi;
  p.tabulate(p.quadrature(f.gd->domain()));
  double n2 = p.lp_norm(2.0);
  e.phi_norm = n2 * n2;
  // Without scattering the same inequality holds with min sigma_a in place of sigma_0.
  double s0 = c.scattering() ? c.sigma_0 : c.sigma_a.min_interior(*f.gd);
  if (s0 > 0) {
    e.bound = e.phi_norm / (2 * s0);
    e.bound_ok = e.ortho_norm <= e.bound * (1 + slack);
  } else {
    e.bound = std::numeric_limits<double>::infinity();
    e.bound_ok = true;
  }
  return e;
}

}  // namespace rte
