#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <vector>

#include "rte/errors.hpp"
#include "rte/quadrature.hpp"

namespace rte {

template <class S>
using Vec2 = Eigen::Matrix<S, 2, 1>;
template <class S>
using Mat2 = Eigen::Matrix<S, 2, 2>;
using Vec2d = Vec2<double>;

enum class DomainKind { Disk, Ellipse, Superellipse };
enum class Orientation { Forward, Backward };
/// Incoming is the boundary phase set with n.v < 0, outgoing the one with n.v > 0.
enum class Side { Incoming, Outgoing };

struct Tolerance {
  static constexpr double root = 1e-12;
  static constexpr double boundary = 1e-10;
  static constexpr double tangency = 1e-3;
};

template <class S>
Vec2<S> direction(S angle) {
  return Vec2<S>(std::cos(angle), std::sin(angle));
}

/// Counterclockwise rotation by a right angle.
template <class S>
Vec2<S> perp(const Vec2<S>& v) {
  return Vec2<S>(-v.y(), v.x());
}

template <class S>
S angle_of(const Vec2<S>& v) {
  return std::atan2(v.y(), v.x());
}

/// Wrap an angle into [-pi, pi).
template <class S>
S wrap_angle(S a) {
  const S two_pi = S(2) * std::numbers::pi_v<S>;
  a = std::fmod(a + std::numbers::pi_v<S>, two_pi);
  if (a < 0) a += two_pi;
  return a - std::numbers::pi_v<S>;
}

/// Strictly convex planar domain described by a level-set function xi.
///
/// Disks and ellipses use xi = (x/a)^2 + (y/b)^2 - 1. The superellipse kind
/// blends an even power with a quadratic term,
/// xi = (x/a)^p + (y/b)^p + mu ((x/a)^2 + (y/b)^2) - (1 + mu), so the Hessian
/// stays uniformly positive definite.
template <class S>
class ConvexDomain {
 public:
  using V = Vec2<S>;

  static ConvexDomain disk(const V& c, S r) { return ConvexDomain(DomainKind::Disk, c, r, r, 2, S(0)); }
  static ConvexDomain ellipse(const V& c, S a, S b) { return ConvexDomain(DomainKind::Ellipse, c, a, b, 2, S(0)); }
  static ConvexDomain superellipse(const V& c, S a, S b, int p, S blend) {
    if (p < 4 || p % 2 != 0) throw Error(ErrorKind::InvalidDomain, "superellipse exponent must be even and >= 4");
    if (!(blend > 0)) throw Error(ErrorKind::InvalidDomain, "superellipse blend must be positive");
    return ConvexDomain(DomainKind::Superellipse, c, a, b, p, blend);
  }

  DomainKind kind() const { return kind_; }
  const V& center() const { return c_; }
  S semi_a() const { return a_; }
  S semi_b() const { return b_; }
  int exponent() const { return p_; }
  S blend() const { return mu_; }
  bool quadric() const { return kind_ != DomainKind::Superellipse; }

  S xi(const V& x) const {
    S u = (x.x() - c_.x()) / a_, w = (x.y() - c_.y()) / b_;
    if (quadric()) return u * u + w * w - S(1);
    return ipow(u, p_) + ipow(w, p_) + mu_ * (u * u + w * w) - (S(1) + mu_);
  }

  V grad_xi(const V& x) const {
    S u = (x.x() - c_.x()) / a_, w = (x.y() - c_.y()) / b_;
    if (quadric()) return V(S(2) * u / a_, S(2) * w / b_);
    return V((p_ * ipow(u, p_ - 1) + S(2) * mu_ * u) / a_, (p_ * ipow(w, p_ - 1) + S(2) * mu_ * w) / b_);
  }

  Mat2<S> hessian_xi(const V& x) const {
    Mat2<S> h = Mat2<S>::Zero();
    if (quadric()) {
      h(0, 0) = S(2) / (a_ * a_);
      h(1, 1) = S(2) / (b_ * b_);
      return h;
    }
    S u = (x.x() - c_.x()) / a_, w = (x.y() - c_.y()) / b_;
    h(0, 0) = (p_ * (p_ - 1) * ipow(u, p_ - 2) + S(2) * mu_) / (a_ * a_);
    h(1, 1) = (p_ * (p_ - 1) * ipow(w, p_ - 2) + S(2) * mu_) / (b_ * b_);
    return h;
  }

  V normal(const V& x) const { return grad_xi(x).normalized(); }

  /// Lower bound D0 on the Hessian quadratic form of xi.
  S convexity_constant() const {
    S m = std::max(a_, b_);
    return (quadric() ? S(2) : S(2) * mu_) / (m * m);
  }

  bool contains(const V& x, S tol = S(Tolerance::boundary)) const { return xi(x) <= tol; }
  V lower() const { return c_ - V(a_, b_); }
  V upper() const { return c_ + V(a_, b_); }
  S diameter_bound() const { return S(2) * std::hypot(a_, b_); }

  /// Largest root t of xi(x + t v) = 0, clamped at 0 for boundary points whose
  /// ray leaves at once. NaN when the line misses the closed domain.
  S ray_exit(const V& x, const V& v) const {
    if (quadric()) {
      S ux = (x.x() - c_.x()) / a_, uy = (x.y() - c_.y()) / b_;
      S px = v.x() / a_, py = v.y() / b_;
      S A = px * px + py * py, B = S(2) * (ux * px + uy * py), C = ux * ux + uy * uy - S(1);
      S D = B * B - S(4) * A * C;
      if (D < 0) return std::numeric_limits<S>::quiet_NaN();
      S sq = std::sqrt(D);
      S t = (B <= 0) ? (-B + sq) / (S(2) * A) : -S(2) * C / (sq + B);
      return t > 0 ? t : S(0);
    }
    return ray_exit_newton(x, v);
  }

  // Arc-length parametrization of the boundary, counterclockwise from the
  // point of parameter angle zero.
  S perimeter() const { return arc_->length; }

  V boundary_at_param(S t) const {
    V u(std::cos(t), std::sin(t));
    if (quadric()) return c_ + V(a_ * u.x(), b_ * u.y());
    return c_ + ray_exit(c_, u) * u;
  }

  S speed(S t) const {
    if (quadric()) return std::hypot(a_ * std::sin(t), b_ * std::cos(t));
    V u(std::cos(t), std::sin(t));
    S r = ray_exit(c_, u);
    V g = grad_xi(c_ + r * u);
    S dr = -r * g.dot(perp(u)) / g.dot(u);
    return std::hypot(dr, r);
  }

  S param_of(const V& x) const {
    V d = x - c_;
    S t = quadric() ? std::atan2(d.y() / b_, d.x() / a_) : std::atan2(d.y(), d.x());
    return t < 0 ? t + S(2) * std::numbers::pi_v<S> : t;
  }

  S arclength_at_param(S t) const {
    const S two_pi = S(2) * std::numbers::pi_v<S>;
    S turns = std::floor(t / two_pi);
    t -= turns * two_pi;
    S dt = two_pi / arc_->panels;
    int k = std::min(arc_->panels - 1, static_cast<int>(t / dt));
    S s = arc_->edge[k] + panel_integral(k * dt, t);
    return s + turns * arc_->length;
  }

  S arclength_of(const V& x) const { return arclength_at_param(param_of(x)); }

  V boundary_point(S s) const { return boundary_at_param(param_at_arclength(s)); }

  S param_at_arclength(S s) const {
    const ArcTable& tab = *arc_;
    S L = tab.length;
    s = std::fmod(s, L);
    if (s < 0) s += L;
    auto it = std::upper_bound(tab.edge.begin(), tab.edge.end(), s);
    int k = std::clamp(static_cast<int>(it - tab.edge.begin()) - 1, 0, tab.panels - 1);
    S dt = S(2) * std::numbers::pi_v<S> / tab.panels;
    S frac = (s - tab.edge[k]) / (tab.edge[k + 1] - tab.edge[k]);
    S t = (k + frac) * dt;
    for (int it2 = 0; it2 < 8; ++it2) {
      S f = tab.edge[k] + panel_integral(k * dt, t) - s;
      S step = f / speed(t);
      t -= step;
      if (std::abs(step) < S(1e-15)) break;
    }
    return t;
  }

 private:
  struct ArcTable {
    std::vector<S> edge;
    int panels = 0;
    S length = 0;
  };

  ConvexDomain(DomainKind kind, const V& c, S a, S b, int p, S mu) : kind_(kind), c_(c), a_(a), b_(b), p_(p), mu_(mu) {
    if (!(a > 0) || !(b > 0)) throw Error(ErrorKind::InvalidDomain, "semi-axes must be positive");
    build_arc_table();
  }

  static S ipow(S x, int n) {
    S r = 1;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
  }

  S ray_exit_newton(const V& x, const V& v) const {
    auto g = [&](S t) { return xi(x + t * v); };
    auto dg = [&](S t) { return grad_xi(x + t * v).dot(v); };
    S hi = diameter_bound() + (x - c_).norm();
    S lo = 0;
    S g0 = g(0);
    bool bracketed = g0 < 0;
    if (!bracketed && dg(0) >= 0) return g0 <= S(Tolerance::boundary) ? S(0) : std::numeric_limits<S>::quiet_NaN();
    if (bracketed) {
      for (int i = 0; i < 8; ++i) {
        S m = S(0.5) * (lo + hi);
        (g(m) < 0 ? lo : hi) = m;
      }
    }
    // Newton from the right of the largest root decreases monotonically for convex g.
    S t = hi;
    for (int it = 0; it < 200; ++it) {
      S gt = g(t), d = dg(t);
      if (gt == 0) return t;
      if (!(d > 0)) {
        if (!bracketed) return std::numeric_limits<S>::quiet_NaN();
        t = S(0.5) * (lo + t);
        continue;
      }
      S next = t - gt / d;
      if (bracketed && next < lo) next = S(0.5) * (lo + t);
      if (std::abs(next - t) <= S(0.1) * S(Tolerance::root)) return next;
      t = next;
    }
    return t;
  }

  S panel_integral(S t0, S t1) const {
    static const GaussRule rule = gauss_legendre(10);
    if (t1 <= t0) return 0;
    S half = S(0.5) * (t1 - t0), mid = S(0.5) * (t0 + t1), s = 0;
    for (size_t i = 0; i < rule.x.size(); ++i) s += S(rule.w[i]) * speed(mid + half * S(rule.x[i]));
    return s * half;
  }

  void build_arc_table() {
    auto tab = std::make_shared<ArcTable>();
    tab->panels = 512;
    tab->edge.resize(tab->panels + 1);
    S dt = S(2) * std::numbers::pi_v<S> / tab->panels;
    tab->edge[0] = 0;
    arc_ = tab;  // panel_integral only needs speed(), not the table
    for (int k = 0; k < tab->panels; ++k) tab->edge[k + 1] = tab->edge[k] + panel_integral(k * dt, (k + 1) * dt);
    tab->length = tab->edge.back();
  }

  DomainKind kind_;
  V c_;
  S a_, b_;
  int p_;
  S mu_;
  std::shared_ptr<const ArcTable> arc_;
};

using Domain = ConvexDomain<double>;

/// Position plus direction angle; the angle representation keeps |v| = 1.
template <class S>
struct PhasePoint {
  Vec2<S> x;
  S angle;
  Vec2<S> v() const { return direction(angle); }
};

/// Forward (x + t v) or backward (x - t v) exit time with validity checks.
template <class S>
S exit_time(const ConvexDomain<S>& d, const Vec2<S>& x, const Vec2<S>& v, Orientation o = Orientation::Forward,
            S cutoff = S(Tolerance::tangency)) {
  if (d.xi(x) > S(Tolerance::boundary)) throw Error(ErrorKind::PointOutsideDomain, "exit_time: point outside domain");
  Vec2<S> u = (o == Orientation::Forward) ? v : Vec2<S>(-v);
  S t = d.ray_exit(x, u);
  if (!(t == t)) throw Error(ErrorKind::TangentialRay, "exit_time: ray misses the domain");
  Vec2<S> y = x + t * u;
  if (std::abs(d.normal(y).dot(u)) < cutoff) throw Error(ErrorKind::TangentialRay, "exit_time: grazing exit");
  return t;
}

template <class S>
struct ExitGradient {
  S tau;
  Vec2<S> exit_point;
  Vec2<S> dx;  ///< gradient of the backward exit time with respect to x
  Vec2<S> dv;  ///< gradient with respect to v, with v treated as a free 2-vector
};

/// Derivatives of the backward exit time, from implicit differentiation of
/// xi(x - tau v) = 0: grad_x tau = n / (v.n), grad_v tau = -tau n / (v.n).
template <class S>
ExitGradient<S> grad_exit_time(const ConvexDomain<S>& d, const Vec2<S>& x, const Vec2<S>& v,
                               S cutoff = S(Tolerance::tangency)) {
  S tau = exit_time(d, x, v, Orientation::Backward, cutoff);
  Vec2<S> xm = x - tau * v;
  Vec2<S> n = d.normal(xm);
  S vn = v.dot(n);
  if (std::abs(vn) < cutoff) throw Error(ErrorKind::TangentialRay, "grad_exit_time: grazing exit");
  return {tau, xm, n / vn, -tau * n / vn};
}

template <class S>
struct ChordRay {
  Vec2<S> x_in;
  S angle;
  S tau_plus;
  Vec2<S> x_out;
  S flux_in;   ///< |n(x_in).v|
  S flux_out;  ///< |n(x_out).v|
  Vec2<S> v() const { return direction(angle); }
  Vec2<S> point(S s) const { return x_in + s * v(); }
};

template <class S>
ChordRay<S> make_chord(const ConvexDomain<S>& d, const Vec2<S>& x_in, S angle, S cutoff = S(Tolerance::tangency)) {
  if (std::abs(d.xi(x_in)) > S(10 * Tolerance::boundary))
    throw Error(ErrorKind::PointOutsideDomain, "make_chord: entry point is not on the boundary");
  Vec2<S> v = direction(angle);
  S nin = d.normal(x_in).dot(v);
  if (nin > -cutoff) throw Error(ErrorKind::TangentialRay, "make_chord: direction is not incoming");
  S tau = d.ray_exit(x_in, v);
  Vec2<S> xo = x_in + tau * v;
  S nout = d.normal(xo).dot(v);
  if (nout < cutoff) throw Error(ErrorKind::TangentialRay, "make_chord: grazing exit");
  return {x_in, angle, tau, xo, -nin, nout};
}

template <class S>
struct BoundaryNode {
  Vec2<S> x;
  S angle;
  S arclength;
  S ndotv;   ///< signed n(x).v
  S weight;  ///< |n.v| dS dv with dv of total mass one
};

template <class S>
struct BoundaryQuadrature {
  Side side;
  std::vector<BoundaryNode<S>> nodes;
};

/// Periodic trapezoid in arc length times periodic trapezoid in angle over a
/// whole half-space of the boundary phase set.
template <class S>
BoundaryQuadrature<S> boundary_quadrature(const ConvexDomain<S>& d, Side side, int n_arc, int n_ang) {
  BoundaryQuadrature<S> q{side, {}};
  const S L = d.perimeter(), two_pi = S(2) * std::numbers::pi_v<S>;
  const S ds = L / n_arc, dv = S(1) / n_ang;
  for (int i = 0; i < n_arc; ++i) {
    S s = i * ds;
    Vec2<S> x = d.boundary_point(s);
    Vec2<S> n = d.normal(x);
    for (int k = 0; k < n_ang; ++k) {
      S th = two_pi * (k + S(0.5)) / n_ang;
      S nv = n.dot(direction(th));
      if ((side == Side::Outgoing && nv > 0) || (side == Side::Incoming && nv < 0))
        q.nodes.push_back({x, th, s, nv, std::abs(nv) * ds * dv});
    }
  }
  return q;
}

/// Trapezoid rule (end points included) on an arc-length window times an
/// angular window. Nodes on the wrong side of the boundary are dropped.
template <class S>
BoundaryQuadrature<S> window_quadrature(const ConvexDomain<S>& d, Side side, S s_lo, S s_hi, S th_lo, S th_hi, int n_arc,
                                        int n_ang) {
  BoundaryQuadrature<S> q{side, {}};
  const S two_pi = S(2) * std::numbers::pi_v<S>;
  auto ws = trapezoid_weights(s_lo, s_hi, n_arc);
  auto wt = trapezoid_weights(th_lo, th_hi, n_ang);
  for (int i = 0; i < n_arc; ++i) {
    S s = s_lo + (s_hi - s_lo) * i / (n_arc - 1);
    Vec2<S> x = d.boundary_point(s);
    Vec2<S> n = d.normal(x);
    for (int k = 0; k < n_ang; ++k) {
      S th = th_lo + (th_hi - th_lo) * k / (n_ang - 1);
      S nv = n.dot(direction(th));
      if ((side == Side::Outgoing && nv > 0) || (side == Side::Incoming && nv < 0))
        q.nodes.push_back({x, th, s, nv, std::abs(nv) * S(ws[i]) * S(wt[k]) / two_pi});
    }
  }
  return q;
}

/// Arc-length interval [start, end] (end > start, possibly past the
/// perimeter) of boundary points with n.v > 0.
template <class S>
std::pair<S, S> outgoing_arc(const ConvexDomain<S>& d, const Vec2<S>& v) {
  const S L = d.perimeter();
  const int m = 1024;
  auto f = [&](S s) { return d.normal(d.boundary_point(s)).dot(v); };
  auto refine = [&](S a, S b) {
    S fa = f(a);
    for (int i = 0; i < 80; ++i) {
      S mid = S(0.5) * (a + b);
      S fm = f(mid);
      if ((fm > 0) == (fa > 0)) {
        a = mid;
        fa = fm;
      } else {
        b = mid;
      }
      if (b - a < S(1e-15) * L) break;
    }
    return S(0.5) * (a + b);
  };
  S start = 0, end = 0;
  bool have_start = false, have_end = false;
  S prev = f(0);
  for (int i = 1; i <= m; ++i) {
    S s = L * i / m;
    S cur = f(s);
    if (prev <= 0 && cur > 0 && !have_start) {
      start = refine(L * (i - 1) / m, s);
      have_start = true;
    }
    if (prev > 0 && cur <= 0 && !have_end) {
      end = refine(L * (i - 1) / m, s);
      have_end = true;
    }
    prev = cur;
  }
  if (!have_start || !have_end) throw Error(ErrorKind::InvalidDomain, "outgoing_arc: no tangency points found");
  if (end < start) end += L;
  return {start, end};
}

template <class S>
struct FluxIdentity {
  S outflow = 0;  ///< integral of n(x).v over the outgoing arc
  S inflow = 0;   ///< integral of -n(y).v over its backward image
  S residual = 0;
};

/// Compares the boundary flux through an arc of the outgoing set with the
/// flux through its image under the backward characteristic map.
template <class S>
FluxIdentity<S> flux_identity_residual(const ConvexDomain<S>& d, const Vec2<S>& v, S s_a, S s_b, int n_nodes,
                                       S cutoff = S(Tolerance::tangency)) {
  FluxIdentity<S> r;
  if (!(s_b > s_a)) return r;
  const S L = d.perimeter();
  auto w = trapezoid_weights(s_a, s_b, n_nodes);
  for (int i = 0; i < n_nodes; ++i) {
    S s = s_a + (s_b - s_a) * i / (n_nodes - 1);
    Vec2<S> x = d.boundary_point(s);
    S nv = d.normal(x).dot(v);
    if (nv < cutoff) throw Error(ErrorKind::TangentialRay, "flux_identity_residual: arc leaves the outgoing set");
    r.outflow += S(w[i]) * nv;
  }
  auto image = [&](S s) {
    Vec2<S> x = d.boundary_point(s);
    S tau = exit_time(d, x, v, Orientation::Backward, cutoff);
    return d.arclength_of(Vec2<S>(x - tau * v));
  };
  S ia = image(s_a), ib = image(s_b);
  S len = std::fmod(ia - ib, L);
  if (len < 0) len += L;
  auto wi = trapezoid_weights(S(0), len, n_nodes);
  for (int i = 0; i < n_nodes; ++i) {
    S s = ib + len * i / (n_nodes - 1);
    Vec2<S> y = d.boundary_point(s);
    r.inflow += S(wi[i]) * (-d.normal(y).dot(v));
  }
  r.residual = std::abs(r.outflow - r.inflow);
  return r;
}

/// Integral over the outgoing arc of n(x).v times the backward line integral
/// of g; equals the area integral of g by the change of variables along
/// characteristics.
template <class S, class G>
S volume_from_boundary_quadrature(const ConvexDomain<S>& d, const Vec2<S>& v, G&& g, int n_arc = 4000,
                                  int n_inner = 48) {
  auto [s0, s1] = outgoing_arc(d, v);
  static thread_local GaussRule rule;
  if (static_cast<int>(rule.x.size()) != n_inner) rule = gauss_legendre(n_inner);
  auto w = trapezoid_weights(s0, s1, n_arc);
  S total = 0;
  for (int i = 0; i < n_arc; ++i) {
    S s = s0 + (s1 - s0) * i / (n_arc - 1);
    Vec2<S> x = d.boundary_point(s);
    S nv = d.normal(x).dot(v);
    if (nv <= 0) continue;
    S tau = d.ray_exit(x, Vec2<S>(-v));
    if (!(tau > 0)) continue;
    S inner = integrate_gauss([&](S t) { return g(Vec2<S>(x - t * v)); }, S(0), tau, rule);
    total += S(w[i]) * nv * inner;
  }
  return total;
}

/// Smallest eigenvalue of the Hessian of xi over interior nodes of an n x n
/// grid on the bounding box.
template <class S>
S min_hessian_eigenvalue(const ConvexDomain<S>& d, int n) {
  S best = std::numeric_limits<S>::infinity();
  Vec2<S> lo = d.lower(), hi = d.upper();
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      Vec2<S> x(lo.x() + (hi.x() - lo.x()) * (i + S(0.5)) / n, lo.y() + (hi.y() - lo.y()) * (j + S(0.5)) / n);
      if (d.xi(x) >= 0) continue;
      Mat2<S> H = d.hessian_xi(x);
      S m = S(0.5) * (H(0, 0) + H(1, 1));
      S r = std::hypot(S(0.5) * (H(0, 0) - H(1, 1)), H(0, 1));
      best = std::min(best, m - r);
    }
  return best;
}

}  // namespace rte
