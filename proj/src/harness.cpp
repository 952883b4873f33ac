#include "rte/harness.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "rte/io.hpp"
#include "rte/oracles.hpp"
#include "rte/parallel.hpp"

namespace rte {

namespace fs = std::filesystem;

Subcommand parse_subcommand(const std::string& s) {
  if (s == "forward") return Subcommand::Forward;
  if (s == "recover-abs") return Subcommand::RecoverAbs;
  if (s == "recover-scat") return Subcommand::RecoverScat;
  if (s == "nonlinear") return Subcommand::Nonlinear;
  if (s == "verify") return Subcommand::Verify;
  throw Error(ErrorKind::ConfigInvalid, "unknown subcommand '" + s + "'");
}

const char* subcommand_name(Subcommand s) {
  switch (s) {
    case Subcommand::Forward: return "forward";
    case Subcommand::RecoverAbs: return "recover-abs";
    case Subcommand::RecoverScat: return "recover-scat";
    case Subcommand::Nonlinear: return "nonlinear";
    case Subcommand::Verify: return "verify";
  }
  return "?";
}

std::string RunManifest::text() const {
  std::ostringstream os;
  os << "config_hash = " << config_hash << "\n"
     << "version = " << version << "\n"
     << "subcommand = " << subcommand << "\n"
     << "seed = " << seed << "\n"
     << "workers = " << workers << "\n"
     << "exit_code = " << exit_code << "\n";
  for (const auto& s : stages)
    os << "stage." << s.name << " = " << (s.passed ? "pass" : "fail") << " " << fmt(s.seconds) << "s"
       << (s.detail.empty() ? "" : " " + s.detail) << "\n";
  for (const auto& a : artifacts) os << "artifact = " << a << "\n";
  for (const auto& o : oracles) os << "oracle = " << o << "\n";
  return os.str();
}

namespace {

struct Context {
  const ExperimentConfig& cfg;
  fs::path out;
  RunManifest& manifest;
  std::ostream& log;
  bool verbose;
  int workers;

  std::string header() const { return "# seed " + std::to_string(manifest.seed) + " config " + manifest.config_hash + "\n"; }

  void save(const std::string& name, const std::string& body) {
    write_atomic(out / name, header() + body);
    manifest.artifacts.push_back(name);
  }
  void save_field(const std::string& name, const ScalarField& f) {
    std::ostringstream os;
    write_field(os, f);
    save(name, os.str());
  }
  void save_plot(const std::string& name, const std::string& data, const std::string& using_clause,
                 const std::string& labels) {
    // gnuplot treats # lines as comments, so the provenance header is harmless
    save(name, "set terminal pngcairo size 900,600\nset output '" + name.substr(0, name.size() - 3) + ".png'\n" +
                   labels + "plot '" + data + "' " + using_clause + "\n");
  }

  /// Times fn; an Error marks the stage failed and is rethrown.
  bool stage(const std::string& name, const std::function<std::pair<bool, std::string>()>& fn) {
    auto t0 = std::chrono::steady_clock::now();
    StageRecord r;
    r.name = name;
    try {
      auto [ok, detail] = fn();
      r.passed = ok;
      r.detail = detail;
    } catch (const Error& e) {
      r.passed = false;
      r.detail = e.what();
      r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      manifest.stages.push_back(r);
      log << name << "\tFAIL\t" << r.detail << "\n";
      throw;
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest.stages.push_back(r);
    log << name << "\t" << (r.passed ? "PASS" : "FAIL") << "\t" << r.detail << "\n";
    return r.passed;
  }
};

std::string kv(const std::vector<std::pair<std::string, double>>& rows) {
  std::string s;
  for (const auto& [k, v] : rows) s += k + " = " + fmt(v) + "\n";
  return s;
}

BoundaryFunction forward_beam(const ExperimentConfig& c, double* sup) {
  const Domain& d = c.domain;
  Vec2d x = d.boundary_point(c.beam_arc);
  double ang = angle_of(Vec2d(-d.normal(x))) + c.beam_angle_offset;
  ProbeConfig p = absorption_probe(d, x, ang, c.beam_eps, c.beam_delta, 1.0, c.recipe.chords.c_in);
  if (sup) *sup = std::pow(phi0_profile(ProbeMode::Absorption)(0.0), 2) / (c.beam_eps * c.beam_delta);
  return build_incoming(d, p);
}

void run_forward(Context& cx) {
  const auto& c = cx.cfg;
  auto gd = make_grid_domain(c.domain, c.transport_grid);
  CoefficientPair cp = make_coefficients(c, *gd);
  double sup = 0;
  BoundaryFunction phi = forward_beam(c, &sup);
  TransportOptions o = c.transport;
  o.workers = cx.workers;
  KineticSolution f;
  cx.stage("solve", [&] {
    f = solve_rte(gd, cp, phi, o);
    return std::make_pair(true, "iterations " + std::to_string(f.iterations));
  });
  cx.stage("max_principle", [&] {
    bool ok = f.min_value() >= -1e-12 * sup && f.max_value() <= sup * (1 + 1e-9);
    return std::make_pair(ok, "min " + fmt(f.min_value()) + " max " + fmt(f.max_value()) + " sup " + fmt(sup));
  });
  EnergyDiagnostics e;
  cx.stage("energy", [&] {
    e = energy_diagnostics(f, cp, phi);
    return std::make_pair(e.bound_ok, "ortho " + fmt(e.ortho_norm) + " bound " + fmt(e.bound));
  });
  cx.save_field("sigma_a.field", cp.sigma_a);
  cx.save_field("sigma_s.field", cp.sigma_s);
  cx.save_field("mean.field", f.mean);
  cx.save("forward.txt", kv({{"iterations", f.iterations},
                             {"residual", f.residual},
                             {"ortho_norm", e.ortho_norm},
                             {"phi_norm", e.phi_norm},
                             {"bound", e.bound},
                             {"phi_sup", sup}}));
}

void run_nonlinear(Context& cx) {
  const auto& c = cx.cfg;
  auto gd = make_grid_domain(c.domain, c.transport_grid);
  CoefficientPair cp = make_coefficients(c, *gd);
  double sup = 0;
  BoundaryFunction phi = forward_beam(c, &sup);
  NonlinearOptions o = c.nonlinear;
  o.transport.workers = cx.workers;
  o.phi_sup = sup;
  NonlinearState st;
  cx.stage("solve", [&] {
    st = solve_coupled(gd, cp.sigma_a, phi, o);
    return std::make_pair(true, "outer " + std::to_string(st.info.outer_iterations) + " inner " +
                                    std::to_string(st.info.inner_iterations));
  });
  cx.stage("max_principle", [&] {
    const double tb = std::pow(st.phi_sup, 0.25);
    bool ok = st.info.T.minCoeff() >= 0 && st.info.T.maxCoeff() <= tb && st.I.min_value() >= 0 &&
              st.I.max_value() <= st.phi_sup * (1 + 1e-12);
    return std::make_pair(ok, "T_max " + fmt(st.info.T.maxCoeff()) + " bound " + fmt(tb));
  });
  cx.stage("monotone", [&] {
    return std::make_pair(st.info.monotonicity_violations == 0,
                          "violations " + std::to_string(st.info.monotonicity_violations));
  });
  NonlinearEnergy e;
  cx.stage("energy", [&] {
    e = nonlinear_energy_check(st, cp.sigma_0 > 0 ? cp.sigma_0 : cp.sigma_a.min_interior(*gd), phi);
    return std::make_pair(e.first_ok && e.second_ok, "gap " + fmt(e.emission_gap) + " half_phi " + fmt(e.half_phi));
  });
  cx.save_field("temperature.field", st.T);
  cx.save_field("mean_I.field", st.I.mean);
  std::string hist = tsv_row({"outer", "change", "t_sup"});
  for (std::size_t i = 0; i < st.info.outer_history.size(); ++i)
    hist += tsv_row({std::to_string(i + 1), fmt(st.info.outer_history[i]),
                     i < st.info.t_sup_history.size() ? fmt(st.info.t_sup_history[i]) : "nan"});
  cx.save("history.tsv", hist);
  cx.save("nonlinear.txt", kv({{"lambda", st.info.lambda},
                               {"outer_iterations", st.info.outer_iterations},
                               {"inner_iterations", st.info.inner_iterations},
                               {"emission_gap", e.emission_gap},
                               {"anisotropy", e.anisotropy},
                               {"half_phi", e.half_phi}}));
}

void run_recover_abs(Context& cx) {
  const auto& c = cx.cfg;
  auto fine = make_grid_domain(c.domain, c.fine_grid);
  CoefficientPair cp = make_coefficients(c, *fine);
  ResponseOptions ro = c.response;
  ro.workers = cx.workers;
  ScalarField ss = c.model == Model::Linear ? cp.sigma_s : constant_field(*fine, 0.0);
  ProbeSolver solver(c.domain, cp.sigma_a, ss, c.model, ro);
  ReconstructionRecipe r = c.recipe;
  r.workers = cx.workers;
  auto chords = chord_family(c.domain, r.chords);
  Sinogram sino;
  cx.stage("sinogram", [&] {
    sino = assemble_sinogram(solver, chords, r.widths, r.chords.c_in, cx.workers);
    bool ok = sino.failure_fraction() < 0.5;
    for (const auto& row : sino.rows)
      if (!row.failed && !(row.E > 0 && row.E <= 1 + 1e-6)) ok = false;
    return std::make_pair(ok, "chords " + std::to_string(sino.rows.size()) + " failed " +
                                  std::to_string(sino.failures) + " p95 " + fmt(sino.relative_error_quantile(0.95)));
  });
  cx.stage("oracle_line_integral", [&] {
    double worst = 0;
    auto g = [&](const Vec2d& x) { return cp.sigma_a(x); };
    int used = 0;
    for (std::size_t i = 0; i < sino.rows.size() && used < 5; i += std::max<std::size_t>(1, sino.rows.size() / 5)) {
      const auto& row = sino.rows[i];
      if (row.failed) continue;
      double o = oracle_line_integral(g, row.chord);
      worst = std::max(worst, std::abs(o - row.truth) / std::max(1e-300, std::abs(o)));
      ++used;
    }
    cx.manifest.oracles.push_back("oracle_line_integral chords=" + std::to_string(used) + " max_rel_gap=" + fmt(worst));
    return std::make_pair(worst <= 1e-6, "max_rel_gap " + fmt(worst));
  });
  Inversion inv;
  cx.stage("inversion", [&] {
    inv = invert_xray(c.domain, sino, r.inversion);
    return std::make_pair(inv.residual <= inv.data_norm,
                          "cg " + std::to_string(inv.iterations) + " coverage " + std::to_string(inv.min_coverage));
  });
  ReconstructionReport rep = compare_fields(*inv.gd, inv.field, cp.sigma_a);
  rep.chords = static_cast<int>(sino.rows.size());
  rep.failure_fraction = sino.failure_fraction();
  rep.sinogram_p95 = sino.relative_error_quantile(0.95);
  cx.log << "rel_l2\t" << fmt(rep.rel_l2) << "\n";

  ScalarField truth(inv.gd->grid(), 0.0);
  for (int k : inv.gd->interior()) truth[k] = cp.sigma_a(inv.gd->grid().node(k));
  cx.save("sinogram.tsv", sinogram_tsv(sino));
  cx.save_field("reconstruction.field", inv.field);
  cx.save_field("truth.field", truth);
  cx.save("report.txt", rep.text());
  // slice through the middle row
  const Grid& g = inv.gd->grid();
  std::string slice = tsv_row({"x", "truth", "reconstruction"});
  const int j = g.ny / 2;
  for (int i = 0; i < g.nx; ++i) {
    int k = g.index(i, j);
    if (inv.gd->inside(k)) slice += tsv_row({fmt(g.node(k).x()), fmt(truth[k]), fmt(inv.field[k])});
  }
  cx.save("slice.tsv", slice);
  cx.save_plot("slice.gp", "slice.tsv", "using 1:2 with lines title 'truth', '' using 1:3 with points title 'reconstruction'",
               "set xlabel 'x'\nset ylabel 'sigma_a'\n");
  cx.save_plot("sinogram.gp", "sinogram.tsv", "using 4:7 with points pt 7 ps 0.3 title 'p'",
               "set xlabel 'angle'\nset ylabel 'x-ray value'\n");
}

void run_recover_scat(Context& cx) {
  const auto& c = cx.cfg;
  auto fine = make_grid_domain(c.domain, c.fine_grid);
  CoefficientPair cp = make_coefficients(c, *fine);
  ResponseOptions ro = c.response;
  ro.workers = cx.workers;
  ProbeSolver solver(c.domain, cp.sigma_a, cp.sigma_s, Model::Linear, ro);

  std::vector<Vec2d> pts = interior_lattice(c.domain, c.lattice, c.lattice_lo, c.lattice_hi, c.scattering.margin);
  if (c.random_points > 0) {
    std::mt19937_64 rng(cx.manifest.seed);
    std::uniform_real_distribution<double> ux(c.domain.lower().x(), c.domain.upper().x());
    std::uniform_real_distribution<double> uy(c.domain.lower().y(), c.domain.upper().y());
    int added = 0;
    while (added < c.random_points) {
      Vec2d x(ux(rng), uy(rng));
      if (c.domain.xi(x) <= -c.scattering.margin) {
        pts.push_back(x);
        ++added;
      }
    }
  }
  const double deep = c.etas.back();
  Schedule s = parameter_schedule(deep, c.beta0 > 0 ? c.beta0 : default_beta0(deep));
  std::vector<ScatteringEstimate> est;
  cx.stage("sweep", [&] {
    est = sweep_sigma_s(solver, pts, c.v_in, s, c.scattering, cx.workers);
    bool ok = true;
    int failed = 0;
    for (const auto& e : est) {
      if (e.failed) {
        ++failed;
        continue;
      }
      ok = ok && e.m1_nonzero == 0 && e.estimate >= 0;
    }
    std::vector<double> a, t;
    for (const auto& e : est)
      if (!e.failed) {
        a.push_back(e.estimate);
        t.push_back(e.truth);
      }
    return std::make_pair(ok, "points " + std::to_string(est.size()) + " failed " + std::to_string(failed) +
                                  " correlation " + fmt(correlation(a, t)));
  });
  ConvergenceStudy study;
  cx.stage("convergence", [&] {
    study = schedule_convergence_study(solver, c.x0, c.v_in, c.etas, cp.sigma_s(c.x0), c.scattering);
    bool ok = study.rows.size() < 2 || (study.param1_decreasing && study.contamination_decreasing);
    return std::make_pair(ok, std::string("param1 ") + (study.param1_decreasing ? "decreasing" : "not decreasing") +
                                  ", contamination " +
                                  (study.contamination_decreasing ? "decreasing" : "not decreasing"));
  });
  cx.save("estimates.tsv", estimates_tsv(est));
  cx.save("convergence.tsv", convergence_tsv(study));
  cx.save_plot("convergence.gp", "convergence.tsv",
               "using 1:4 with linespoints title 'error', '' using 1:5 with linespoints title 'M3/M2'",
               "set logscale xy\nset xlabel 'eta'\n");
}

void run_verify(Context& cx) {
  const auto& c = cx.cfg;
  std::mt19937_64 rng(cx.manifest.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Domain disk = Domain::disk({0, 0}, 1.0), ell = Domain::ellipse({0, 0}, 2.0, 1.0);
  const int n = c.verify_cases;

  cx.stage("geometry_flux_identity", [&] {
    double worst = 0;
    for (const Domain* d : {&disk, &ell})
      for (int i = 0; i < n; ++i) {
        Vec2d v = direction(2 * std::numbers::pi * unit(rng));
        auto [a, b] = outgoing_arc(*d, v);
        double L = b - a, lo = a + (0.05 + 0.3 * unit(rng)) * L, hi = a + (0.6 + 0.35 * unit(rng)) * L;
        auto r = flux_identity_residual(*d, v, lo, hi, 4001);
        worst = std::max(worst, r.residual / r.outflow);
      }
    return std::make_pair(worst <= 1e-5, "max_rel " + fmt(worst));
  });
  cx.stage("geometry_change_of_variables", [&] {
    double worst = 0;
    for (const Domain* d : {&disk, &ell})
      for (int i = 0; i < n; ++i) {
        Vec2d ctr(0.4 * (unit(rng) - 0.5) * d->semi_a(), 0.4 * (unit(rng) - 0.5) * d->semi_b());
        double w = 0.2 + 0.3 * unit(rng);
        auto g = [&](const Vec2d& x) { return std::exp(-(x - ctr).squaredNorm() / (2 * w * w)); };
        double lhs = volume_from_boundary_quadrature(*d, direction(2 * std::numbers::pi * unit(rng)), g);
        double rhs = oracle_area_integral(*d, g);
        worst = std::max(worst, std::abs(lhs - rhs) / rhs);
      }
    cx.manifest.oracles.push_back("oracle_area_integral cases=" + std::to_string(2 * n) + " max_rel=" + fmt(worst));
    return std::make_pair(worst <= 1e-5, "max_rel " + fmt(worst));
  });
  cx.stage("exit_time_gradient", [&] {
    double worst = 0;
    int done = 0;
    while (done < 10 * n) {
      const Domain& d = done % 2 ? ell : disk;
      Vec2d x(d.semi_a() * (2 * unit(rng) - 1), d.semi_b() * (2 * unit(rng) - 1));
      double th = 2 * std::numbers::pi * unit(rng);
      if (d.xi(x) > -0.05) continue;
      Vec2d v = direction(th);
      auto g = grad_exit_time(d, x, v);
      if (std::abs(d.normal(g.exit_point).dot(v)) < 0.05) continue;
      ExitDerivatives fd = oracle_finite_difference(d, x, th);
      worst = std::max({worst, (fd.grad_x - g.dx).norm() / g.dx.norm(), (fd.grad_v - g.dv).norm() / g.dv.norm()});
      ++done;
    }
    cx.manifest.oracles.push_back("oracle_finite_difference points=" + std::to_string(done) + " max_rel=" + fmt(worst));
    return std::make_pair(worst <= 1e-5, "points " + std::to_string(done) + " max_rel " + fmt(worst));
  });
  cx.stage("energy_bound", [&] {
    auto gd = make_grid_domain(c.domain, 33);
    bool ok = true;
    double worst = 0;
    for (double ratio : {0.5, 1.0}) {
      ScalarField a = constant_field(*gd, 1.0), s = constant_field(*gd, ratio);
      CoefficientPair cp(a, s, ratio, *gd);
      TransportOptions o;
      o.n_dirs = 32;
      o.workers = cx.workers;
      BoundaryFunction phi = forward_beam(c, nullptr);
      KineticSolution f = solve_rte(gd, cp, phi, o);
      EnergyDiagnostics e = energy_diagnostics(f, cp, phi);
      ok = ok && e.bound_ok;
      worst = std::max(worst, e.ortho_norm / e.bound);
    }
    return std::make_pair(ok, "max ortho/bound " + fmt(worst));
  });
  cx.stage("monotone_iteration", [&] {
    auto gd = make_grid_domain(c.domain, 25);
    double sup = 0;
    BoundaryFunction phi = forward_beam(c, &sup);
    NonlinearOptions o;
    o.transport.n_dirs = 32;
    o.transport.workers = cx.workers;
    o.phi_sup = sup;
    NonlinearState st = solve_coupled(gd, constant_field(*gd, 1.0), phi, o);
    bool ok = st.info.monotonicity_violations == 0 && st.info.T.maxCoeff() <= std::pow(sup, 0.25);
    return std::make_pair(ok, "violations " + std::to_string(st.info.monotonicity_violations));
  });
}

}  // namespace

int run(Subcommand cmd, ExperimentConfig cfg, const RunOptions& opt, std::ostream& log, RunManifest* out_manifest) {
  RunManifest m;
  m.config_hash = cfg.hash();
  m.subcommand = subcommand_name(cmd);
  m.seed = opt.seed ? *opt.seed : cfg.seed;
  m.workers = opt.workers ? *opt.workers : (cfg.workers > 0 ? cfg.workers : default_workers());
  if (m.workers < 1) m.workers = 1;
  fs::path out = opt.out ? *opt.out : cfg.out;
  Context cx{cfg, out, m, log, opt.verbose, m.workers};
  if (opt.verbose) log << "config " << m.config_hash << " seed " << m.seed << " workers " << m.workers << "\n";
  int code = 0;
  try {
    switch (cmd) {
      case Subcommand::Forward: run_forward(cx); break;
      case Subcommand::RecoverAbs: run_recover_abs(cx); break;
      case Subcommand::RecoverScat: run_recover_scat(cx); break;
      case Subcommand::Nonlinear: run_nonlinear(cx); break;
      case Subcommand::Verify: run_verify(cx); break;
    }
    for (const auto& s : m.stages)
      if (!s.passed) code = 1;
  } catch (const Error& e) {
    code = e.kind() == ErrorKind::ConfigInvalid ? 2 : 1;
    if (m.stages.empty() || m.stages.back().passed) m.stages.push_back({"setup", 0.0, false, e.what()});
    log << "error: " << e.what() << "\n";
  }
  m.exit_code = code;
  write_atomic(out / "manifest.txt", m.text());
  if (out_manifest) *out_manifest = m;
  return code;
}

int run(Subcommand cmd, const RunOptions& opt, std::ostream& log) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(opt.config_path);
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return 2;
  }
  return run(cmd, std::move(cfg), opt, log);
}

}  // namespace rte
