#pragma once

#include <string>
#include <vector>

#include "rte/mollifier.hpp"
#include "rte/transport.hpp"

namespace rte {

enum class ProbeMode { Absorption, Scattering };

const char* probe_mode_name(ProbeMode m);

/// Concentrated incoming data and the matching measurement window.
/// Directions are stored as angles.
struct ProbeConfig {
  ProbeMode mode = ProbeMode::Absorption;
  Vec2d x_in = Vec2d::Zero();
  double v_in = 0;
  Vec2d x_out = Vec2d::Zero();
  double v_out = 0;
  double eps = 0.02;    ///< spatial width of phi
  double delta = 4e-4;  ///< angular width of phi
  double theta = 1.0;   ///< spatial width of psi
  double beta = 4e-4;   ///< angular width of psi (scattering mode)
  double eta = 0;       ///< V_perp . V_out (scattering mode)
  double beta0 = 0;
  double c_in = 0.05;
  std::string id;

  Vec2d dir_in() const { return direction(v_in); }
  Vec2d dir_out() const { return direction(v_out); }
  /// Angular width of the measurement profile.
  double psi_angle_width() const { return mode == ProbeMode::Absorption ? delta : beta; }
};

struct ProbeGeometry {
  Vec2d x0 = Vec2d::Zero();
  double s0 = 0;        ///< x0 = X_out - s0 V_out
  double s0_prime = 0;  ///< x0 = X_in + s0' V_in
  Vec2d v_perp = Vec2d::Zero();
  double eta = 0;
};

/// Intersection of the ray from X_in along V_in with the ray from X_out
/// along -V_out by Cramer's rule. Raises ParallelRays only.
ProbeGeometry intersect_rays(const Vec2d& x_in, const Vec2d& v_in, const Vec2d& x_out, const Vec2d& v_out);

/// Guarded version: requires V_in . V_out > 0, an interior crossing, and
/// s0 strictly inside (0, tau_-(X_out, V_out)).
ProbeGeometry crossing_geometry(const Domain& d, const Vec2d& x_in, const Vec2d& v_in, const Vec2d& x_out,
                                const Vec2d& v_out, double margin = 1e-6);

struct Schedule {
  double eta = 0, beta0 = 0, r = 1.5;
  double eps = 0, delta = 0, theta = 0, beta = 0;
  bool feasible = false;      ///< eta > beta + delta
  double ratio_param1 = 0;    ///< delta^{-(r-1)/r} eta^{1/r}
  double ratio_eta = 0;       ///< (beta + delta) / eta
  double ratio_full = 0;      ///< theta^{-1/p2} eps^{-(r-1)/r} delta^{-(r-1)/r} eta^{1/r}
};

/// beta = delta = eta^{1 + beta0}; eps and theta default to eta^2 when <= 0.
/// Spatial widths tied to eta itself let the psi tube run along the whole
/// incoming chord, so the measurement stops localizing at x0.
/// p2 only enters ratio_full, which is reported rather than enforced.
Schedule parameter_schedule(double eta, double beta0, double r = 1.5, double eps = 0, double theta = 0, double p2 = 2.0);

/// Smallest beta0 with eta > 2 eta^{1 + beta0}.
double min_feasible_beta0(double eta);
/// Default exponent: delta = eta / 16. The angular spread biases the single
/// scattering limit by roughly (delta / eta)^2.
double default_beta0(double eta);

/// Absorption probe along the chord entering at x_in with angle v_in.
ProbeConfig absorption_probe(const Domain& d, const Vec2d& x_in, double v_in, double eps, double delta,
                             double theta = 1.0, double c_in = 0.05);
/// Scattering probe whose in and out rays cross at x0.
ProbeConfig scattering_probe(const Domain& d, const Vec2d& x0, double v_in, double v_out, const Schedule& s,
                             double c_in = 0.05);

/// Checks the invariants of the mode; raises GeometryInfeasible,
/// ScheduleInfeasible or TangentialRay.
void validate_probe(const Domain& d, const ProbeConfig& p);

const Mollifier& phi0_profile(ProbeMode m);
const Mollifier& psi0_profile();

BoundaryFunction build_incoming(const Domain& d, const ProbeConfig& p);
BoundaryFunction build_measurement(const Domain& d, const ProbeConfig& p);

/// Limit of M_psi(f_1) / (|n(X_in).V_in| e^{-X-ray}) in absorption mode.
double absorption_constant();
/// Limit of M_psi(f_2) / (|n(X_out).V_out| H) in scattering mode.
double scattering_constant();

/// Arc-length offsets [lo, hi] around s_c on which g(x(s)) <= 0 first fails,
/// found by bisection from each side. g must be negative at s_c.
std::pair<double, double> arc_window(const Domain& d, double s_c, const std::function<double(const Vec2d&)>& g);

}  // namespace rte
