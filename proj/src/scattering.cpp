#include "rte/scattering.hpp"

#include <cmath>
#include <sstream>

#include "rte/io.hpp"
#include "rte/parallel.hpp"

namespace rte {

Decomposition decompose_f123(GridDomainPtr gd, const CoefficientPair& c, const BoundaryFunction& phi,
                             const TransportOptions& opt) {
  const GridDomain& g = *gd;
  Decomposition out;
  out.f1 = solve_attenuation(gd, c.sigma_a, phi, opt);
  const Eigen::VectorXd ss = interior_values(g, c.sigma_s);
  const Eigen::VectorXd m1 = interior_values(g, out.f1.mean);
  out.f2 = apply_duhamel(gd, c.sigma_a, field_from_interior(g, ss.cwiseProduct(m1)), opt);
  const Eigen::VectorXd m2 = interior_values(g, out.f2.mean);
  if (!c.scattering()) {
    out.f3 = apply_duhamel(gd, c.sigma_a, constant_field(g, 0.0), opt);
    return out;
  }
  ScatterOperator K(gd, c.sigma_a, out.f1.ang, out.f1.step, opt.workers, opt.max_dense_bytes);
  // <f_3> = K sigma_s (<f_2> + <f_3>), seeded with K sigma_s <f_2>
  const Eigen::VectorXd seed = K.apply(ss.cwiseProduct(m2));
  Eigen::VectorXd m3 = seed;
  for (;;) {
    ++out.iterations;
    Eigen::VectorXd next = seed + K.apply(ss.cwiseProduct(m3));
    out.residual = l2_interior(g, next - m3);
    m3 = std::move(next);
    if (out.residual < opt.tol) break;
    if (out.iterations >= opt.max_iter) throw Error(ErrorKind::NotConverged, "f_3 source iteration did not converge");
  }
  out.f3 = apply_duhamel(gd, c.sigma_a, field_from_interior(g, ss.cwiseProduct(m2 + m3)), opt);
  return out;
}

double decomposition_residual(const Decomposition& s, const CoefficientPair& c, const Vec2d& x, double angle) {
  const GridDomain& g = *s.f1.gd;
  Eigen::VectorXd mean = interior_values(g, s.f1.mean) + interior_values(g, s.f2.mean) + interior_values(g, s.f3.mean);
  ScalarField src = field_from_interior(g, interior_values(g, c.sigma_s).cwiseProduct(mean));
  double f = s.f1.evaluate(x, angle) + s.f2.evaluate(x, angle) + s.f3.evaluate(x, angle);
  RayResult r = trace_back(g.domain(), c.sigma_a, &src, x, direction(angle), s.f1.step);
  return std::abs(f - s.f1.evaluate(x, angle) - r.duhamel);
}

ScatteringEstimate estimate_sigma_s_at(const ProbeSolver& solver, const Vec2d& x0, double v_in, const Schedule& s,
                                       int turn, const ScatteringOptions& o) {
  const Domain& d = solver.domain();
  if (!(d.xi(x0) < -o.margin)) throw Error(ErrorKind::PointOutsideDomain, "target point too close to the boundary");
  if (!s.feasible) throw Error(ErrorKind::ScheduleInfeasible, "need eta > beta + delta");
  ScatteringEstimate e;
  e.x0 = x0;
  e.schedule = s;
  const double v_out = v_in + (turn >= 0 ? 1 : -1) * std::asin(s.eta);
  try {
    e.probe = scattering_probe(d, x0, v_in, v_out, s, o.c_in);
  } catch (const Error& err) {
    if (err.kind() == ErrorKind::ScheduleInfeasible) throw;
    throw Error(ErrorKind::GeometryInfeasible, std::string("no admissible crossing: ") + err.what());
  }
  e.geometry = crossing_geometry(d, e.probe.x_in, e.probe.dir_in(), e.probe.x_out, e.probe.dir_out());
  ProbeMeasurement m = solver.measure(e.probe);
  if (m.m1_nonzero != 0) throw Error(ErrorKind::GeometryInfeasible, "ballistic part reaches the measurement window");
  e.m1 = m.m1;
  e.m2 = m.m2;
  e.m3 = m.m3;
  e.M = m.total();
  e.m1_terms = m.m1_terms;
  e.m1_nonzero = m.m1_nonzero;

  const double h = solver.sigma_a().grid().h;
  const Vec2d vi = e.probe.dir_in(), vo = e.probe.dir_out();
  const double tau_in = exit_time(d, x0, vi, Orientation::Backward);
  e.correction = std::exp(segment_integral(solver.sigma_a(), e.probe.x_out, Vec2d(-vo), e.geometry.s0, 0.5 * h) +
                          segment_integral(solver.sigma_a(), x0, Vec2d(-vi), tau_in, 0.5 * h));
  const double denom = scattering_constant() * std::abs(d.normal(e.probe.x_out).dot(vo));
  e.estimate = e.correction * e.M / denom;
  e.estimate_f2 = e.correction * e.m2 / denom;
  e.contamination = e.m2 > 0 ? e.m3 / e.m2 : 0.0;
  // unremoved multiple scattering plus the finite angular spread
  const double spread = (s.delta + s.beta) / s.eta;
  e.tolerance = e.estimate * (e.M > 0 ? e.m3 / e.M : 0.0) + e.estimate * spread * spread + 1e-3 * e.estimate;
  if (e.contamination > o.max_contamination)
    throw Error(ErrorKind::ContaminationTooLarge, "M_3 / M_2 = " + std::to_string(e.contamination));
  return e;
}

std::vector<ScatteringEstimate> sweep_sigma_s(const ProbeSolver& solver, const std::vector<Vec2d>& points, double v_in,
                                              const Schedule& s, const ScatteringOptions& o, int workers) {
  std::vector<ScatteringEstimate> out(points.size());
  parallel_for(static_cast<int>(points.size()), workers, [&](int i) {
    try {
      out[i] = estimate_sigma_s_at(solver, points[i], v_in, s, 1, o);
    } catch (const Error& e) {
      out[i] = ScatteringEstimate{};
      out[i].x0 = points[i];
      out[i].schedule = s;
      out[i].failed = true;
      out[i].error = kind_name(e.kind());
    }
    out[i].truth = solver.sigma_s()(points[i]);
  });
  return out;
}

std::vector<Vec2d> interior_lattice(const Domain& d, int n, double lo, double hi, double margin) {
  std::vector<Vec2d> pts;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      double t = n > 1 ? 1.0 / (n - 1) : 0.0;
      Vec2d x(lo + (hi - lo) * i * t, lo + (hi - lo) * j * t);
      if (d.xi(x) <= -margin) pts.push_back(x);
    }
  return pts;
}

ConvergenceStudy schedule_convergence_study(const ProbeSolver& solver, const Vec2d& x0, double v_in,
                                            const std::vector<double>& etas, double truth,
                                            const ScatteringOptions& o) {
  ConvergenceStudy st;
  for (std::size_t i = 0; i < etas.size(); ++i) {
    if (i > 0 && !(etas[i] < etas[i - 1])) throw Error(ErrorKind::ScheduleInfeasible, "eta sequence must decrease");
    Schedule s = parameter_schedule(etas[i], default_beta0(etas[i]));
    if (!s.feasible) throw Error(ErrorKind::ScheduleInfeasible, "infeasible eta in the study");
    ScatteringEstimate e = estimate_sigma_s_at(solver, x0, v_in, s, 1, o);
    ConvergenceRow r;
    r.eta = s.eta;
    r.beta0 = s.beta0;
    r.estimate = e.estimate;
    r.error = std::abs(e.estimate - truth);
    r.contamination = e.contamination;
    r.ratio_param1 = s.ratio_param1;
    r.ratio_full = s.ratio_full;
    r.ratio_eta = s.ratio_eta;
    st.rows.push_back(r);
  }
  for (std::size_t i = 1; i < st.rows.size(); ++i) {
    const auto &a = st.rows[i - 1], &b = st.rows[i];
    st.param1_decreasing = st.param1_decreasing && b.ratio_param1 < a.ratio_param1;
    st.contamination_decreasing = st.contamination_decreasing && b.contamination < a.contamination;
    st.full_decreasing = st.full_decreasing && b.ratio_full < a.ratio_full;
    st.error_nonincreasing = st.error_nonincreasing && b.error <= 1.2 * a.error;
  }
  return st;
}

std::string estimates_tsv(const std::vector<ScatteringEstimate>& es) {
  std::string out = tsv_row({"x0", "y0", "truth", "estimate", "estimate_f2", "m1", "m2", "m3", "correction", "eta",
                             "beta0", "contamination", "tolerance", "m1_nonzero", "flags"});
  for (const auto& e : es)
    out += tsv_row({fmt(e.x0.x()), fmt(e.x0.y()), fmt(e.truth), fmt(e.estimate), fmt(e.estimate_f2), fmt(e.m1),
                    fmt(e.m2), fmt(e.m3), fmt(e.correction), fmt(e.schedule.eta), fmt(e.schedule.beta0),
                    fmt(e.contamination), fmt(e.tolerance), std::to_string(e.m1_nonzero),
                    e.failed ? e.error : "ok"});
  return out;
}

std::string convergence_tsv(const ConvergenceStudy& s) {
  std::string out = tsv_row({"eta", "beta0", "estimate", "error", "contamination", "ratio_param1", "ratio_full",
                             "ratio_eta"});
  for (const auto& r : s.rows)
    out += tsv_row({fmt(r.eta), fmt(r.beta0), fmt(r.estimate), fmt(r.error), fmt(r.contamination),
                    fmt(r.ratio_param1), fmt(r.ratio_full), fmt(r.ratio_eta)});
  return out;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  if (n < 2) return 0;
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return saa > 0 && sbb > 0 ? sab / std::sqrt(saa * sbb) : 0.0;
}

}  // namespace rte
