#include "rte/probe_solver.hpp"

#include <cmath>
#include <numbers>

namespace rte {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// forward exit time from a point of the closure; NaN on a miss
double forward_exit(const Domain& d, const Vec2d& x, const Vec2d& v) { return d.ray_exit(x, v); }

}  // namespace

const char* model_name(Model m) { return m == Model::Linear ? "linear" : "nonlinear"; }

Model parse_model(const std::string& s) {
  if (s == "linear") return Model::Linear;
  if (s == "nonlinear") return Model::Nonlinear;
  throw Error(ErrorKind::ConfigInvalid, "unknown model '" + s + "'");
}

ScalarField resample(const ScalarField& f, const GridDomain& gd) {
  const Grid& g = gd.grid();
  ScalarField out(g, 0.0);
  for (int k : gd.interior()) out[k] = f(g.node(k));
  out.extend(gd);
  return out;
}

ProbeSolver::ProbeSolver(const Domain& d, const ScalarField& sigma_a, const ScalarField& sigma_s, Model model,
                         const ResponseOptions& ropt, const ProbeQuadrature& q)
    : d_(d), sa_(sigma_a), ss_(sigma_s), model_(model), ropt_(ropt), q_(q) {
  rgd_ = make_grid_domain(d_, ropt_.grid);
  sa_r_ = resample(sa_, *rgd_);
  sa_ri_ = interior_values(*rgd_, sa_r_);
  ss_ri_ = interior_values(*rgd_, resample(ss_, *rgd_));
  scattering_ = model_ == Model::Linear && ss_ri_.maxCoeff() > 0;
  if (model_ == Model::Nonlinear && ss_ri_.maxCoeff() > 0)
    throw Error(ErrorKind::Unsupported, "the nonlinear model carries no scattering term");
  step_ = ropt_.step > 0 ? ropt_.step : 0.5 * rgd_->grid().h;
  if (scattering_ || model_ == Model::Nonlinear)
    K_ = std::make_unique<ScatterOperator>(rgd_, sa_r_, AngularGrid(ropt_.n_dirs), step_, ropt_.workers,
                                           ropt_.max_dense_bytes);
  if (scattering_ && ropt_.direct && K_->dense()) {
    const int n = rgd_->n_interior();
    Eigen::MatrixXd A = -(K_->matrix() * ss_ri_.asDiagonal());
    A.diagonal().array() += 1.0;
    lu_ = std::make_unique<Eigen::PartialPivLU<Eigen::MatrixXd>>(A);
    (void)n;
  }
}

double ProbeSolver::transmission(const Vec2d& x, const Vec2d& v, double len) const {
  return std::exp(-sa_.ray_integral(x, v, len));
}

ProbeSolver::Ballistic ProbeSolver::ballistic(const ProbeConfig& p, const BoundaryFunction& phi,
                                              const BoundaryFunction& psi) const {
  Ballistic b;
  const auto& w = *phi.support();
  const auto& wpsi = *psi.support();

  // M_1 by pulling the outgoing trace back along each incoming line
  if (p.mode == ProbeMode::Absorption) {
    auto q = window_quadrature(d_, Side::Incoming, w.s_lo, w.s_hi, w.th_lo, w.th_hi, q_.m1_arc, q_.m1_ang);
    for (const auto& nd : q.nodes) {
      double f = phi(nd.x, nd.angle);
      if (f == 0) continue;
      Vec2d v = direction(nd.angle);
      double tau = forward_exit(d_, nd.x, v);
      if (!(tau > 0)) continue;
      double g = psi(nd.x + tau * v, nd.angle);
      if (g == 0) continue;
      b.m1 += nd.weight * f * g * transmission(nd.x, v, tau);
    }
  } else {
    // scattering windows are disjoint in angle; test every Gamma_+ node anyway
    int na = q_.psi_arc > 0 ? q_.psi_arc : 32, nv = q_.psi_ang > 0 ? q_.psi_ang : 16;
    auto q = window_quadrature(d_, Side::Outgoing, wpsi.s_lo, wpsi.s_hi, wpsi.th_lo, wpsi.th_hi, na, nv);
    for (const auto& nd : q.nodes) {
      Vec2d v = direction(nd.angle);
      double tau = forward_exit(d_, nd.x, Vec2d(-v));
      double term = 0;
      if (tau > 0) term = psi(nd.x, nd.angle) * phi(nd.x - tau * v, nd.angle) * nd.weight;
      ++b.terms;
      if (term != 0) {
        ++b.nonzero;
        b.m1 += term * transmission(nd.x - tau * v, v, tau);
      }
    }
  }

  // line family: splat <f_1> on the response grid, accumulate M_2
  const GridDomain& rg = *rgd_;
  const Grid& grid = rg.grid();
  const double h = grid.h, dt_max = 0.5 * h;
  b.deposit = Eigen::VectorXd::Zero(rg.n_interior());
  const bool need_m2 = model_ == Model::Linear && scattering_;
  const bool need_splat = scattering_ || model_ == Model::Nonlinear;
  if (!need_splat) return b;

  const double v_out = p.v_out, half_v = 0.5 * (wpsi.th_hi - wpsi.th_lo);
  std::vector<double> vang(q_.v_nodes), vwt(q_.v_nodes);
  {
    auto tw = trapezoid_weights(v_out - half_v, v_out + half_v, q_.v_nodes);
    for (int l = 0; l < q_.v_nodes; ++l) {
      vang[l] = v_out - half_v + 2 * half_v * l / (q_.v_nodes - 1);
      vwt[l] = tw[l] / kTwoPi;
    }
  }
  // weight of the outgoing functional seen from z: sum_l w_l psi(z_+, v_l) [T_+]
  auto adjoint = [&](const Vec2d& z, bool exact_t) {
    double a = 0;
    for (int l = 0; l < q_.v_nodes; ++l) {
      Vec2d v = direction(vang[l]);
      double t = forward_exit(d_, z, v);
      if (!(t > 0)) continue;
      double g = psi(z + t * v, vang[l]);
      if (g == 0) continue;
      a += vwt[l] * g * (exact_t ? transmission(z, v, t) : 1.0);
    }
    return a;
  };
  // psi tube test on the spatial factor only
  const Vec2d xo = p.x_out;
  const double tube_r = psi0_profile().radius() * p.theta;

  auto lq = window_quadrature(d_, Side::Incoming, w.s_lo, w.s_hi, w.th_lo, w.th_hi, q_.line_arc, q_.line_ang);
  int idx[4];
  double wt[4];
  for (const auto& nd : lq.nodes) {
    const double f = phi(nd.x, nd.angle);
    if (f == 0) continue;
    const Vec2d v = direction(nd.angle);
    const double tau = forward_exit(d_, nd.x, v);
    if (!(tau > 0)) continue;
    const double W = nd.weight * f;
    const int ns = std::max(2, static_cast<int>(std::ceil(tau / dt_max)));
    const double dt = tau / ns;
    const double T_tot = transmission(nd.x, v, tau);
    double A = sa_.ray_integral(nd.x, v, 0.5 * dt);
    for (int m = 0; m < ns; ++m) {
      const Vec2d z = nd.x + ((m + 0.5) * dt) * v;
      if (m > 0) A += sa_.ray_integral(nd.x + ((m - 0.5) * dt) * v, v, dt);
      const double Tm = std::exp(-A);
      const double sig = model_ == Model::Linear ? ss_(z) : 1.0;
      const double mass = sig * Tm * W * dt;
      b.mass += Tm * W * dt;
      grid.stencil(z, idx, wt);
      for (int c = 0; c < 4; ++c) b.deposit[rg.interior_slot(rg.extension(idx[c]))] += mass * wt[c];
      if (need_m2 && p.mode == ProbeMode::Absorption) {
        // T_+ along the same line approximates T_+ along the nearby outgoing ray
        double a = adjoint(z, false);
        if (a != 0) b.m2 += sig * W * dt * T_tot * a;
      }
    }
    if (need_m2 && p.mode == ProbeMode::Scattering) {
      // exact transmission, stations restricted to the psi tube
      const int nscan = q_.tube_scan;
      const double ds = tau / nscan;
      int first = -1, last = -1;
      for (int m = 0; m <= nscan; ++m) {
        Vec2d z = nd.x + (m * ds) * v;
        bool hit = false;
        for (int l = 0; l < q_.v_nodes && !hit; l += std::max(1, q_.v_nodes / 4)) {
          Vec2d u = direction(vang[l]);
          double t = forward_exit(d_, z, u);
          hit = t > 0 && (z + t * u - xo).norm() < tube_r + 2 * half_v * t + ds;
        }
        if (hit) {
          if (first < 0) first = m;
          last = m;
        }
      }
      if (first < 0) continue;
      const double t0 = std::max(0.0, (first - 1) * ds), t1 = std::min(tau, (last + 1) * ds);
      const double dtt = (t1 - t0) / q_.tube_nodes;
      for (int m = 0; m < q_.tube_nodes; ++m) {
        const double t = t0 + (m + 0.5) * dtt;
        const Vec2d z = nd.x + t * v;
        const double sig = ss_(z);
        if (sig == 0) continue;
        double a = adjoint(z, true);
        if (a != 0) b.m2 += sig * W * dtt * transmission(nd.x, v, t) * a;
      }
    }
  }
  b.deposit /= h * h;
  return b;
}

double ProbeSolver::outgoing(const BoundaryFunction& psi, const ProbeConfig& p, const ScalarField& source) const {
  int na = q_.psi_arc, nv = q_.psi_ang;
  if (na <= 0) na = p.mode == ProbeMode::Absorption ? 64 : 32;
  if (nv <= 0) nv = p.mode == ProbeMode::Absorption ? 8 : 16;
  auto q = psi.quadrature(d_, na, nv);
  double m = 0;
  for (const auto& nd : q.nodes) {
    double g = psi(nd.x, nd.angle);
    if (g == 0) continue;
    m += nd.weight * g * trace_back(d_, sa_r_, &source, nd.x, direction(nd.angle), step_).duhamel;
  }
  return m;
}

ProbeMeasurement ProbeSolver::measure(const ProbeConfig& p) const {
  BoundaryFunction phi = build_incoming(d_, p);
  BoundaryFunction psi = build_measurement(d_, p);
  Ballistic b = ballistic(p, phi, psi);
  ProbeMeasurement out;
  out.m1 = b.m1;
  out.m2 = b.m2;
  out.m1_terms = b.terms;
  out.m1_nonzero = b.nonzero;
  out.beam_mass = b.mass;
  const GridDomain& rg = *rgd_;

  if (model_ == Model::Linear) {
    if (!scattering_) return out;
    // g = <f_2 + f_3> solves (I - K sigma_s) g = K S_1
    Eigen::VectorXd rhs = K_->apply(b.deposit);
    Eigen::VectorXd g;
    if (lu_) {
      g = lu_->solve(rhs);
      out.iterations = 1;
      Eigen::VectorXd r = g - K_->apply(ss_ri_.cwiseProduct(g)) - rhs;
      out.residual = r.cwiseAbs().maxCoeff() / std::max(1e-300, rhs.cwiseAbs().maxCoeff());
    } else {
      g = rhs;
      const double scale = std::max(1e-300, rhs.cwiseAbs().maxCoeff());
      for (int it = 1; it <= ropt_.max_iter; ++it) {
        Eigen::VectorXd next = rhs + K_->apply(ss_ri_.cwiseProduct(g));
        out.residual = (next - g).cwiseAbs().maxCoeff() / scale;
        g = std::move(next);
        out.iterations = it;
        if (out.residual < ropt_.tol) break;
      }
      if (!(out.residual < ropt_.tol))
        throw Error(ErrorKind::NotConverged, "response source iteration did not converge");
    }
    ScalarField src = field_from_interior(rg, ss_ri_.cwiseProduct(g));
    out.m3 = outgoing(psi, p, src);
    return out;
  }

  // nonlinear: the emitted part replaces scattering
  const double phi_sup = 1.0 / (p.eps * p.delta) *
                         std::pow(phi0_profile(p.mode)(0.0), 2);
  EllipticOperator op(rgd_);
  TemperatureSolve ts = solve_temperature(op, *K_, sa_ri_, b.deposit, phi_sup, ropt_.nonlinear);
  Eigen::VectorXd t4 = ts.T.array().square().square();
  ScalarField src = field_from_interior(rg, sa_ri_.cwiseProduct(t4));
  out.m3 = outgoing(psi, p, src);
  out.t_sup = ts.T.size() ? ts.T.maxCoeff() : 0.0;
  out.t_bound = std::pow(phi_sup, 0.25);
  out.lambda = ts.lambda;
  out.outer = ts.outer_iterations;
  out.inner = ts.inner_iterations;
  out.monotone = ts.monotonicity_violations == 0;
  out.residual = ts.outer_residual;
  return out;
}

}  // namespace rte
