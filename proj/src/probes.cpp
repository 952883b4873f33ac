#include "rte/probes.hpp"

#include <cmath>
#include <numbers>

namespace rte {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// half-width in angle of {v : |v - V| < r}
double angle_half_width(double r) { return 2.0 * std::asin(std::min(1.0, 0.5 * r)); }

double chord_angle_distance(double a, double b) { return 2.0 * std::abs(std::sin(0.5 * (a - b))); }

}  // namespace

const char* probe_mode_name(ProbeMode m) { return m == ProbeMode::Absorption ? "absorption" : "scattering"; }

ProbeGeometry intersect_rays(const Vec2d& x_in, const Vec2d& v_in, const Vec2d& x_out, const Vec2d& v_out) {
  // x_in + a v_in = x_out - b v_out
  double det = v_in.x() * v_out.y() - v_in.y() * v_out.x();
  if (std::abs(det) < 1e-12) throw Error(ErrorKind::ParallelRays, "in and out directions are parallel");
  Vec2d r = x_out - x_in;
  ProbeGeometry g;
  g.s0_prime = (r.x() * v_out.y() - r.y() * v_out.x()) / det;
  g.s0 = (v_in.x() * r.y() - v_in.y() * r.x()) / det;
  g.x0 = x_in + g.s0_prime * v_in;
  g.v_perp = perp(v_in);
  if (g.v_perp.dot(v_out) < 0) g.v_perp = -g.v_perp;
  g.eta = g.v_perp.dot(v_out);
  return g;
}

ProbeGeometry crossing_geometry(const Domain& d, const Vec2d& x_in, const Vec2d& v_in, const Vec2d& x_out,
                                const Vec2d& v_out, double margin) {
  if (v_in.dot(v_out) <= 0) throw Error(ErrorKind::GeometryInfeasible, "need V_in . V_out > 0");
  ProbeGeometry g = intersect_rays(x_in, v_in, x_out, v_out);
  if (!(d.xi(g.x0) < -margin)) throw Error(ErrorKind::IntersectionOutsideDomain, "rays do not cross inside the domain");
  double tau = exit_time(d, x_out, v_out, Orientation::Backward);
  if (!(g.s0 > 0 && g.s0 < tau) || !(g.s0_prime > 0))
    throw Error(ErrorKind::IntersectionOutsideDomain, "crossing is not interior to both chords");
  return g;
}

Schedule parameter_schedule(double eta, double beta0, double r, double eps, double theta, double p2) {
  if (!(r > 1.0) || r >= 2.0) throw Error(ErrorKind::ScheduleInfeasible, "need 1 < r < 2");
  if (!(eta > 0) || !(beta0 > 0)) throw Error(ErrorKind::ScheduleInfeasible, "need eta > 0 and beta0 > 0");
  Schedule s;
  s.eta = eta;
  s.beta0 = beta0;
  s.r = r;
  s.delta = s.beta = std::pow(eta, 1 + beta0);
  s.eps = eps > 0 ? eps : eta * eta;
  s.theta = theta > 0 ? theta : eta * eta;
  s.feasible = eta > s.beta + s.delta;
  const double q = (r - 1) / r;
  s.ratio_param1 = std::pow(s.delta, -q) * std::pow(eta, 1 / r);
  s.ratio_eta = (s.beta + s.delta) / eta;
  s.ratio_full = std::pow(s.theta, -1 / p2) * std::pow(s.eps, -q) * s.ratio_param1;
  return s;
}

double min_feasible_beta0(double eta) { return std::log(2.0) / std::log(1.0 / eta); }
double default_beta0(double eta) { return std::log(16.0) / std::log(1.0 / eta); }

ProbeConfig absorption_probe(const Domain& d, const Vec2d& x_in, double v_in, double eps, double delta, double theta,
                             double c_in) {
  auto ch = make_chord(d, x_in, v_in);
  ProbeConfig p;
  p.mode = ProbeMode::Absorption;
  p.x_in = ch.x_in;
  p.v_in = p.v_out = v_in;
  p.x_out = ch.x_out;
  p.eps = eps;
  p.delta = p.beta = delta;
  p.theta = theta;
  p.c_in = c_in;
  validate_probe(d, p);
  return p;
}

ProbeConfig scattering_probe(const Domain& d, const Vec2d& x0, double v_in, double v_out, const Schedule& s,
                             double c_in) {
  if (d.xi(x0) >= 0) throw Error(ErrorKind::PointOutsideDomain, "target point is not interior");
  ProbeConfig p;
  p.mode = ProbeMode::Scattering;
  p.v_in = v_in;
  p.v_out = v_out;
  p.x_in = x0 - exit_time(d, x0, p.dir_in(), Orientation::Backward) * p.dir_in();
  p.x_out = x0 + exit_time(d, x0, p.dir_out(), Orientation::Forward) * p.dir_out();
  p.eps = s.eps;
  p.delta = s.delta;
  p.theta = s.theta;
  p.beta = s.beta;
  p.beta0 = s.beta0;
  p.c_in = c_in;
  p.eta = intersect_rays(p.x_in, p.dir_in(), p.x_out, p.dir_out()).eta;
  validate_probe(d, p);
  return p;
}

void validate_probe(const Domain& d, const ProbeConfig& p) {
  if (!(p.eps > 0) || !(p.delta > 0) || !(p.theta > 0) || !(p.beta > 0))
    throw Error(ErrorKind::ScheduleInfeasible, "probe widths must be positive");
  Vec2d vi = p.dir_in(), vo = p.dir_out();
  if (std::abs(d.xi(p.x_in)) > 1e-8 || std::abs(d.xi(p.x_out)) > 1e-8)
    throw Error(ErrorKind::PointOutsideDomain, "probe points must lie on the boundary");
  if (d.normal(p.x_in).dot(vi) > -p.c_in) throw Error(ErrorKind::TangentialRay, "incoming direction below the c_in cutoff");
  if (d.normal(p.x_out).dot(vo) < p.c_in) throw Error(ErrorKind::TangentialRay, "outgoing direction below the c_in cutoff");
  if (p.mode == ProbeMode::Absorption) {
    double tau = exit_time(d, p.x_in, vi, Orientation::Forward);
    if (chord_angle_distance(p.v_in, p.v_out) > 1e-12 || (p.x_in + tau * vi - p.x_out).norm() > 1e-8)
      throw Error(ErrorKind::GeometryInfeasible, "absorption probe must measure along its own chord");
    return;
  }
  ProbeGeometry g = crossing_geometry(d, p.x_in, vi, p.x_out, vo);
  if (!(g.eta > 0)) throw Error(ErrorKind::GeometryInfeasible, "eta must be positive");
  if (!(g.eta > p.beta + p.delta)) throw Error(ErrorKind::ScheduleInfeasible, "need eta > beta + delta");
}

const Mollifier& phi0_profile(ProbeMode m) {
  static const Mollifier one(ProfileKind::Phi0, ProfileVariant::OneSided);
  static const Mollifier even(ProfileKind::Phi0, ProfileVariant::Even);
  return m == ProbeMode::Absorption ? one : even;
}

const Mollifier& psi0_profile() {
  static const Mollifier m(ProfileKind::Psi0, ProfileVariant::OneSided);
  return m;
}

std::pair<double, double> arc_window(const Domain& d, double s_c, const std::function<double(const Vec2d&)>& g) {
  const double L = d.perimeter();
  auto side = [&](double sign) {
    double inside = 0, out = 1e-7;
    while (g(d.boundary_point(s_c + sign * out)) < 0) {
      inside = out;
      out *= 2;
      if (out >= 0.5 * L) return 0.5 * L;
    }
    for (int it = 0; it < 60 && out - inside > 1e-13; ++it) {
      double mid = 0.5 * (inside + out);
      (g(d.boundary_point(s_c + sign * mid)) < 0 ? inside : out) = mid;
    }
    return out;
  };
  return {s_c - side(-1.0), s_c + side(1.0)};
}

BoundaryFunction build_incoming(const Domain& d, const ProbeConfig& p) {
  validate_probe(d, p);
  const Mollifier& m = phi0_profile(p.mode);
  const Vec2d xin = p.x_in, vi = p.dir_in();
  const double eps = p.eps, delta = p.delta, v_in = p.v_in, R = m.radius();
  const double scale = 1.0 / (eps * delta);
  std::function<double(const Vec2d&)> spatial;
  if (p.mode == ProbeMode::Absorption) {
    spatial = [=](const Vec2d& x) { return (x - xin).norm() / eps; };
  } else {
    Vec2d vp = intersect_rays(p.x_in, vi, p.x_out, p.dir_out()).v_perp;
    const double w = eps * p.eta;
    spatial = [=](const Vec2d& x) { return (x - xin).dot(vp) / w; };
  }
  double s_c = d.arclength_of(xin);
  auto [s_lo, s_hi] = arc_window(d, s_c, [&](const Vec2d& x) { return std::abs(spatial(x)) - R; });
  if (s_hi - s_lo >= d.perimeter() - 1e-12) throw Error(ErrorKind::SupportEscapesPatch, "incoming support covers the boundary");
  double half = angle_half_width(delta * R);
  for (double s : {s_lo, s_hi}) {
    Vec2d n = d.normal(d.boundary_point(s));
    for (double a : {v_in - half, v_in + half})
      if (n.dot(direction(a)) > -0.5 * p.c_in)
        throw Error(ErrorKind::SupportEscapesPatch, "incoming support reaches the tangency cutoff");
  }
  PhaseWindow w{s_lo, s_hi, v_in - half, v_in + half};
  return BoundaryFunction(Side::Incoming, [=, &m](const Vec2d& x, double a) {
    double r = chord_angle_distance(a, v_in) / delta;
    if (r >= R) return 0.0;
    double q = spatial(x);
    if (std::abs(q) >= R) return 0.0;
    return scale * m(q) * m(r);
  }, true, w);
}

BoundaryFunction build_measurement(const Domain& d, const ProbeConfig& p) {
  validate_probe(d, p);
  const Mollifier& m = psi0_profile();
  const Vec2d xo = p.x_out;
  const double theta = p.theta, width = p.psi_angle_width(), v_out = p.v_out, R = m.radius();
  const double scale = p.mode == ProbeMode::Absorption ? 1.0 : 1.0 / (theta * width);
  double s_c = d.arclength_of(xo);
  auto [s_lo, s_hi] = arc_window(d, s_c, [&](const Vec2d& x) { return (x - xo).norm() / theta - R; });
  double half = angle_half_width(width * R);
  PhaseWindow w{s_lo, s_hi, v_out - half, v_out + half};
  return BoundaryFunction(Side::Outgoing, [=, &m](const Vec2d& x, double a) {
    double r = chord_angle_distance(a, v_out) / width;
    if (r >= R) return 0.0;
    double q = (x - xo).norm() / theta;
    if (q >= R) return 0.0;
    return scale * m(q) * m(r);
  }, true, w);
}

double absorption_constant() {
  const Mollifier& phi = phi0_profile(ProbeMode::Absorption);
  const Mollifier& psi = psi0_profile();
  // angular pairing over the whole line, spatial profile over both sides of X_in
  return 2.0 * phi.pairing(psi) / kTwoPi * phi.line_integral();
}

double scattering_constant() {
  const Mollifier& phi = phi0_profile(ProbeMode::Scattering);
  const Mollifier& psi = psi0_profile();
  return psi.line_integral() * (psi.line_integral() / kTwoPi) * (phi.line_integral() / kTwoPi) * phi.line_integral();
}

}  // namespace rte
