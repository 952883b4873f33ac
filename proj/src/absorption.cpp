#include "rte/absorption.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "rte/io.hpp"
#include "rte/parallel.hpp"

namespace rte {

ChordEstimate probe_chord(const ProbeSolver& solver, const ProbeConfig& probe) {
  if (probe.mode != ProbeMode::Absorption) throw Error(ErrorKind::GeometryInfeasible, "probe_chord needs an absorption probe");
  const Domain& d = solver.domain();
  ChordEstimate c;
  c.id = probe.id;
  c.chord = make_chord(d, probe.x_in, probe.v_in);
  c.widths = {probe.eps, probe.delta, probe.theta};
  ProbeMeasurement m;
  try {
    m = solver.measure(probe);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::SupportEscapesPatch || e.kind() == ErrorKind::TangentialRay) throw;
    throw Error(ErrorKind::ForwardSolveFailed, std::string("forward solve failed: ") + e.what());
  }
  c.m1 = m.m1;
  c.m2 = m.m2;
  c.m3 = m.m3;
  c.M = m.total();
  c.E = c.M / (absorption_constant() * c.chord.flux_in);
  c.truth = solver.line_integral_a(c.chord.x_in, c.chord.v(), c.chord.tau_plus);
  if (!(c.E > 0)) throw Error(ErrorKind::NonPositiveTransmission, "measurement is not positive; widen the probe or refine");
  c.p = -std::log(c.E);
  return c;
}

ChordEstimate probe_chord(const ProbeSolver& solver, const Vec2d& x_in, double angle, const WidthSchedule& w,
                          double c_in) {
  return probe_chord(solver, absorption_probe(solver.domain(), x_in, angle, w.eps, w.delta, w.theta, c_in));
}

std::vector<ChordRay<double>> chord_family(const Domain& d, const ChordSet& s) {
  std::vector<ChordRay<double>> out;
  const double L = d.perimeter(), a = std::acos(s.c_in);
  for (int i = 0; i < s.sources; ++i) {
    Vec2d x = d.boundary_point(L * i / s.sources);
    double inward = angle_of(Vec2d(-d.normal(x)));
    for (int k = 0; k < s.directions; ++k) {
      double ang = inward - a + 2 * a * (k + 0.5) / s.directions;
      try {
        auto ch = make_chord(d, x, ang);
        if (ch.flux_in >= s.c_in && ch.flux_out >= s.c_in) out.push_back(ch);
      } catch (const Error&) {
      }
    }
  }
  return out;
}

double Sinogram::relative_error_quantile(double q) const {
  std::vector<double> e;
  for (const auto& r : rows)
    if (!r.failed && r.truth > 0) e.push_back(std::abs(r.p - r.truth) / r.truth);
  if (e.empty()) return 0;
  std::sort(e.begin(), e.end());
  std::size_t k = std::min(e.size() - 1, static_cast<std::size_t>(std::ceil(q * e.size())) - 1);
  return e[k];
}

Sinogram assemble_sinogram(const ProbeSolver& solver, const std::vector<ChordRay<double>>& chords,
                           const WidthSchedule& w, double c_in, int workers) {
  Sinogram s;
  s.rows.resize(chords.size());
  parallel_for(static_cast<int>(chords.size()), workers, [&](int i) {
    const auto& ch = chords[i];
    ChordEstimate& r = s.rows[i];
    try {
      r = probe_chord(solver, ch.x_in, ch.angle, w, c_in);
    } catch (const Error& e) {
      r = ChordEstimate{};
      r.chord = ch;
      r.widths = w;
      r.failed = true;
      r.error = kind_name(e.kind());
    }
    r.id = "c" + std::to_string(i);
  });
  for (const auto& r : s.rows) s.failures += r.failed;
  return s;
}

std::string sinogram_tsv(const Sinogram& s) {
  std::string out = tsv_row({"chord", "x_in", "y_in", "angle", "tau_plus", "E", "p", "eps", "delta", "theta", "m1",
                             "m2", "m3", "truth", "failed"});
  for (const auto& r : s.rows)
    out += tsv_row({r.id, fmt(r.chord.x_in.x()), fmt(r.chord.x_in.y()), fmt(r.chord.angle), fmt(r.chord.tau_plus),
                    fmt(r.E), fmt(r.p), fmt(r.widths.eps), fmt(r.widths.delta), fmt(r.widths.theta), fmt(r.m1),
                    fmt(r.m2), fmt(r.m3), fmt(r.truth), r.failed ? r.error : "0"});
  return out;
}

Grid pixel_grid(const Domain& d, int n) {
  if (n < 4) throw Error(ErrorKind::InvalidDomain, "need at least 4 pixels per side");
  Vec2d lo = d.lower(), hi = d.upper(), ext = hi - lo;
  Grid g;
  g.h = ext.maxCoeff() / n;
  g.nx = static_cast<int>(std::ceil(ext.x() / g.h - 1e-9));
  g.ny = static_cast<int>(std::ceil(ext.y() / g.h - 1e-9));
  g.origin = 0.5 * (lo + hi) - 0.5 * g.h * Vec2d(g.nx - 1, g.ny - 1);
  return g;
}

Eigen::SparseMatrix<double> xray_matrix(const GridDomain& gd, const std::vector<ChordRay<double>>& chords) {
  const Grid& g = gd.grid();
  std::vector<Eigen::Triplet<double>> trip;
  const Vec2d corner = g.origin - 0.5 * g.h * Vec2d(1, 1);
  for (int r = 0; r < static_cast<int>(chords.size()); ++r) {
    const auto& ch = chords[r];
    const Vec2d v = ch.v();
    // cell walk in pixel coordinates
    Vec2d p = (ch.x_in - corner) / g.h;
    int i = std::clamp(static_cast<int>(std::floor(p.x())), 0, g.nx - 1);
    int j = std::clamp(static_cast<int>(std::floor(p.y())), 0, g.ny - 1);
    const int si = v.x() > 0 ? 1 : -1, sj = v.y() > 0 ? 1 : -1;
    auto next_wall = [](double pos, int cell, int step, double dir) {
      if (dir == 0) return std::numeric_limits<double>::infinity();
      double wall = step > 0 ? cell + 1 : cell;
      return (wall - pos) / dir;
    };
    const double L = ch.tau_plus / g.h;
    double tx = next_wall(p.x(), i, si, v.x()), ty = next_wall(p.y(), j, sj, v.y());
    const double dx = v.x() != 0 ? 1.0 / std::abs(v.x()) : std::numeric_limits<double>::infinity();
    const double dy = v.y() != 0 ? 1.0 / std::abs(v.y()) : std::numeric_limits<double>::infinity();
    std::map<int, double> row;
    double t = 0;
    while (t < L) {
      double t1 = std::min({tx, ty, L});
      if (t1 > t && i >= 0 && j >= 0 && i < g.nx && j < g.ny) {
        int col = gd.interior_slot(gd.extension(g.index(i, j)));
        row[col] += (t1 - t) * g.h;
      }
      t = t1;
      if (t >= L) break;
      if (tx <= ty) {
        i += si;
        tx += dx;
      } else {
        j += sj;
        ty += dy;
      }
    }
    for (auto [c, len] : row) trip.emplace_back(r, c, len);
  }
  Eigen::SparseMatrix<double> A(static_cast<int>(chords.size()), gd.n_interior());
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

Inversion invert_xray(const Domain& d, const std::vector<ChordRay<double>>& chords, const std::vector<double>& p,
                      const InversionOptions& o) {
  if (chords.size() != p.size()) throw Error(ErrorKind::ConfigInvalid, "sinogram and chord list differ in length");
  Inversion out;
  out.gd = std::make_shared<const GridDomain>(d, pixel_grid(d, o.pixels));
  const GridDomain& gd = *out.gd;
  const Grid& g = gd.grid();
  const int n = gd.n_interior();
  Eigen::SparseMatrix<double> A = xray_matrix(gd, chords);

  Eigen::SparseMatrix<double, Eigen::ColMajor> Ac = A;
  out.min_coverage = std::numeric_limits<int>::max();
  for (int c = 0; c < n; ++c) {
    int cnt = 0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(Ac, c); it; ++it) cnt += it.value() > 0;
    out.min_coverage = std::min(out.min_coverage, cnt);
  }
  if (out.min_coverage < o.min_coverage)
    throw Error(ErrorKind::UnderdeterminedCoverage,
                "a pixel is crossed by " + std::to_string(out.min_coverage) + " chords");

  // graph Laplacian over adjacent interior pixels
  std::vector<Eigen::Triplet<double>> gt;
  for (int k : gd.interior()) {
    int i = k % g.nx, j = k / g.nx;
    const int a = gd.interior_slot(k);
    for (auto [ni, nj] : {std::pair{i + 1, j}, std::pair{i, j + 1}}) {
      if (ni >= g.nx || nj >= g.ny) continue;
      int b = gd.interior_slot(g.index(ni, nj));
      if (b < 0) continue;
      gt.emplace_back(a, a, 1.0);
      gt.emplace_back(b, b, 1.0);
      gt.emplace_back(a, b, -1.0);
      gt.emplace_back(b, a, -1.0);
    }
  }
  Eigen::SparseMatrix<double> G(n, n);
  G.setFromTriplets(gt.begin(), gt.end());

  Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
  Eigen::SparseMatrix<double> N = Eigen::SparseMatrix<double>(A.transpose()) * A + o.lambda * G;
  Eigen::VectorXd rhs = A.transpose() * b;
  Eigen::VectorXd m = Eigen::VectorXd::Zero(n);
  out.data_norm = b.norm();
  if (rhs.norm() > 0) {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(o.tol);
    cg.setMaxIterations(o.max_iter);
    cg.compute(N);
    m = cg.solve(rhs);
    out.iterations = static_cast<int>(cg.iterations());
    out.cg_error = cg.error();
    if (cg.info() != Eigen::Success) throw Error(ErrorKind::SolverStagnation, "conjugate gradients did not converge");
  }
  out.residual = (A * m - b).norm();
  m = m.cwiseMax(0.0);
  out.field = ScalarField(g, 0.0);
  for (int s = 0; s < n; ++s) out.field[gd.interior()[s]] = m[s];
  out.field.extend(gd);
  return out;
}

Inversion invert_xray(const Domain& d, const Sinogram& s, const InversionOptions& o) {
  std::vector<ChordRay<double>> ch;
  std::vector<double> p;
  for (const auto& r : s.rows)
    if (!r.failed) {
      ch.push_back(r.chord);
      p.push_back(r.p);
    }
  return invert_xray(d, ch, p, o);
}

ReconstructionReport compare_fields(const GridDomain& gd, const ScalarField& rec, const ScalarField& truth) {
  ReconstructionReport r;
  double num = 0, den = 0;
  for (int k : gd.interior()) {
    double t = truth(gd.grid().node(k)), e = rec[k] - t;
    num += e * e;
    den += t * t;
    r.linf = std::max(r.linf, std::abs(e));
  }
  r.rel_l2 = den > 0 ? std::sqrt(num / den) : std::sqrt(num);
  return r;
}

std::string ReconstructionReport::text() const {
  std::ostringstream os;
  os << "rel_l2 = " << fmt(rel_l2) << "\n"
     << "linf = " << fmt(linf) << "\n"
     << "chords = " << chords << "\n"
     << "failure_fraction = " << fmt(failure_fraction) << "\n"
     << "sinogram_p95 = " << fmt(sinogram_p95) << "\n";
  return os.str();
}

Reconstruction reconstruct_sigma_a(const ProbeSolver& solver, const ReconstructionRecipe& r) {
  auto t0 = std::chrono::steady_clock::now();
  Reconstruction out;
  auto chords = chord_family(solver.domain(), r.chords);
  out.sinogram = assemble_sinogram(solver, chords, r.widths, r.chords.c_in, r.workers);
  out.inversion = invert_xray(solver.domain(), out.sinogram, r.inversion);
  out.report = compare_fields(*out.inversion.gd, out.inversion.field, solver.sigma_a());
  out.report.chords = static_cast<int>(chords.size());
  out.report.failure_fraction = out.sinogram.failure_fraction();
  out.report.sinogram_p95 = out.sinogram.relative_error_quantile(0.95);
  out.report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace rte
