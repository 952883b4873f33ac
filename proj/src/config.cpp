#include "rte/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <map>
#include <set>
#include <sstream>

#include "rte/io.hpp"

namespace rte {

namespace {

using boost::property_tree::ptree;

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorKind::ConfigInvalid, msg); }

std::vector<double> numbers(const std::string& key, const std::string& s) {
  std::istringstream is(s);
  std::vector<double> out;
  std::string tok;
  while (is >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      bad("'" + key + "' expects numbers, got '" + s + "'");
    }
  }
  return out;
}

class Section {
 public:
  Section(const std::string& name, const ptree* t) : name_(name), t_(t) {}

  bool has(const std::string& k) {
    seen_.insert(k);
    return t_ && t_->find(k) != t_->not_found();
  }
  std::string text(const std::string& k, const std::string& def) {
    if (!has(k)) return def;
    return t_->find(k)->second.data();
  }
  std::vector<double> list(const std::string& k, std::size_t lo, std::size_t hi) {
    auto v = numbers(name_ + "." + k, text(k, ""));
    if (v.size() < lo || v.size() > hi) bad("'" + name_ + "." + k + "' has the wrong number of values");
    return v;
  }
  double num(const std::string& k, double def) { return has(k) ? list(k, 1, 1)[0] : def; }
  int integer(const std::string& k, int def) {
    double v = num(k, def);
    if (v != std::floor(v) || std::abs(v) > 1e9) bad("'" + name_ + "." + k + "' must be an integer");
    return static_cast<int>(v);
  }
  bool flag(const std::string& k, bool def) {
    std::string s = text(k, def ? "true" : "false");
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    bad("'" + name_ + "." + k + "' must be true or false");
  }
  /// Keys starting with prefix, in order of appearance.
  std::vector<std::string> with_prefix(const std::string& prefix) {
    std::vector<std::string> out;
    if (!t_) return out;
    for (const auto& [k, v] : *t_)
      if (k.rfind(prefix, 0) == 0) {
        seen_.insert(k);
        out.push_back(v.data());
      }
    return out;
  }
  void finish() {
    if (!t_) return;
    for (const auto& [k, v] : *t_)
      if (!seen_.count(k)) bad("unknown key '" + name_ + "." + k + "'");
  }

 private:
  std::string name_;
  const ptree* t_;
  std::set<std::string> seen_;
};

PhantomSpec phantom(Section& s, double default_baseline) {
  PhantomSpec p;
  try {
    p.kind = parse_phantom_kind(s.text("kind", "constant"));
  } catch (const Error& e) {
    bad(e.what());
  }
  p.baseline = s.num("baseline", default_baseline);
  p.lower_bound = s.num("lower", 0.0);
  p.upper_bound = s.num("upper", 1e6);
  for (const auto& b : s.with_prefix("bump")) {
    auto v = numbers("bump", b);
    if (v.size() < 4 || v.size() > 5) bad("bump needs 'x y amplitude width [radius]'");
    p.bumps.push_back({Vec2d(v[0], v[1]), v[2], v[3], v.size() == 5 ? v[4] : 0.0});
  }
  if (p.kind == PhantomKind::Constant && !p.bumps.empty()) bad("bumps given for a constant coefficient");
  return p;
}

void positive(double v, const std::string& what) {
  if (!(v > 0)) bad(what + " must be positive");
}

}  // namespace

std::string ExperimentConfig::hash() const { return hex64(fnv1a64(source_text)); }

ExperimentConfig parse_config(const std::string& text) {
  ptree pt;
  try {
    std::istringstream is(text);
    boost::property_tree::ini_parser::read_ini(is, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    bad(std::string("syntax: ") + e.message() + " at line " + std::to_string(e.line()));
  }
  static const std::set<std::string> known{"run", "domain", "sigma_a", "sigma_s", "model", "solver",
                                           "forward", "absorption", "scattering", "verify"};
  for (const auto& [k, v] : pt) {
    if (!known.count(k)) bad("unknown section '" + k + "'");
    if (v.data().size()) bad("key '" + k + "' outside a section");
  }
  auto section = [&](const std::string& n) {
    auto it = pt.find(n);
    return Section(n, it == pt.not_found() ? nullptr : &it->second);
  };

  ExperimentConfig c;
  c.source_text = text;

  Section run = section("run");
  double seed = run.num("seed", 1);
  if (seed < 0 || seed != std::floor(seed)) bad("run.seed must be a nonnegative integer");
  c.seed = static_cast<std::uint64_t>(seed);
  c.workers = run.integer("workers", 0);
  c.out = run.text("out", "out");
  run.finish();

  Section dom = section("domain");
  std::string kind = dom.text("kind", "disk");
  auto ctr = dom.has("center") ? dom.list("center", 2, 2) : std::vector<double>{0, 0};
  double a = dom.num("a", 1.0), b = dom.num("b", kind == "disk" ? a : 1.0);
  try {
    if (kind == "disk") c.domain = Domain::disk({ctr[0], ctr[1]}, a);
    else if (kind == "ellipse") c.domain = Domain::ellipse({ctr[0], ctr[1]}, a, b);
    else if (kind == "superellipse")
      c.domain = Domain::superellipse({ctr[0], ctr[1]}, a, b, dom.integer("exponent", 4), dom.num("blend", 0.5));
    else bad("domain.kind must be disk, ellipse or superellipse");
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigInvalid) throw;
    bad(e.what());
  }
  positive(a, "domain.a");
  positive(b, "domain.b");
  dom.finish();

  Section sa = section("sigma_a");
  c.sigma_a = phantom(sa, 1.0);
  sa.finish();

  Section ss = section("sigma_s");
  if (ss.text("kind", "constant") == "proportional") {
    ss.has("kind");
    c.sigma_s.proportional = true;
    c.sigma_s.ratio = ss.num("ratio", 1.0);
    if (c.sigma_s.ratio < 0 || c.sigma_s.ratio > 1) bad("sigma_s.ratio must lie in [0, 1]");
  } else {
    c.sigma_s.phantom = phantom(ss, 0.0);
  }
  ss.finish();

  Section model = section("model");
  try {
    c.model = parse_model(model.text("kind", "linear"));
  } catch (const Error& e) {
    bad(e.what());
  }
  model.finish();

  Section sol = section("solver");
  c.fine_grid = sol.integer("fine_grid", 257);
  c.response.grid = sol.integer("response_grid", 64);
  c.response.n_dirs = sol.integer("response_dirs", 128);
  c.response.direct = sol.flag("response_direct", true);
  c.response.tol = sol.num("response_tol", 1e-10);
  c.transport_grid = sol.integer("transport_grid", 65);
  c.transport.n_dirs = sol.integer("transport_dirs", 128);
  c.transport.tol = sol.num("transport_tol", 1e-8);
  c.transport.max_iter = sol.integer("max_iter", 500);
  c.nonlinear.inner_tol = sol.num("inner_tol", 1e-8);
  c.nonlinear.outer_tol = sol.num("outer_tol", 1e-6);
  sol.finish();
  if (c.fine_grid < 9 || c.response.grid < 9 || c.transport_grid < 9) bad("grids need at least 9 nodes");
  positive(c.response.tol, "solver.response_tol");
  positive(c.transport.tol, "solver.transport_tol");
  positive(c.nonlinear.inner_tol, "solver.inner_tol");
  positive(c.nonlinear.outer_tol, "solver.outer_tol");
  if (c.response.n_dirs < 4 || c.transport.n_dirs < 4) bad("need at least 4 ordinates");
  c.nonlinear.transport = c.transport;
  c.response.nonlinear = c.nonlinear;

  Section fw = section("forward");
  c.beam_arc = fw.num("arc", 0.0);
  c.beam_angle_offset = fw.num("angle_offset", 0.0);
  c.beam_eps = fw.num("eps", 0.3);
  c.beam_delta = fw.num("delta", 0.5);
  fw.finish();
  positive(c.beam_eps, "forward.eps");
  positive(c.beam_delta, "forward.delta");

  Section ab = section("absorption");
  auto& r = c.recipe;
  r.chords.sources = ab.integer("sources", 60);
  r.chords.directions = ab.integer("directions", 40);
  r.chords.c_in = ab.num("c_in", 0.05);
  r.widths.eps = ab.num("eps", 0.02);
  r.widths.delta = ab.num("delta", r.widths.eps * r.widths.eps);
  r.widths.theta = ab.num("theta", 1.0);
  r.inversion.pixels = ab.integer("pixels", 48);
  r.inversion.lambda = ab.num("lambda", 1e-3);
  r.inversion.min_coverage = ab.integer("min_coverage", 10);
  ab.finish();
  positive(r.widths.eps, "absorption.eps");
  positive(r.widths.delta, "absorption.delta");
  positive(r.widths.theta, "absorption.theta");
  positive(r.chords.c_in, "absorption.c_in");
  if (r.chords.sources < 1 || r.chords.directions < 1) bad("absorption needs sources and directions");
  if (r.inversion.lambda < 0) bad("absorption.lambda must be nonnegative");

  Section sc = section("scattering");
  if (sc.has("etas")) c.etas = sc.list("etas", 1, 64);
  for (double e : c.etas)
    if (!(e > 0 && e < 1)) bad("scattering.etas must lie in (0, 1)");
  c.beta0 = sc.num("beta0", 0.0);
  if (sc.has("x0")) {
    auto v = sc.list("x0", 2, 2);
    c.x0 = Vec2d(v[0], v[1]);
  }
  c.v_in = sc.num("v_in", 0.0);
  c.lattice = sc.integer("lattice", 5);
  c.lattice_lo = sc.num("lo", -0.5);
  c.lattice_hi = sc.num("hi", 0.5);
  c.random_points = sc.integer("random_points", 0);
  c.scattering.margin = sc.num("margin", 0.05);
  c.scattering.max_contamination = sc.num("max_contamination", 1.0);
  c.scattering.c_in = sc.num("c_in", 0.05);
  sc.finish();
  if (c.lattice < 0 || c.random_points < 0) bad("point counts must be nonnegative");

  Section ver = section("verify");
  c.verify_cases = ver.integer("cases", 20);
  ver.finish();
  if (c.verify_cases < 1) bad("verify.cases must be positive");

  // the coefficient ordering is checked on a coarse grid at parse time
  auto gd = make_grid_domain(c.domain, 33);
  make_coefficients(c, *gd);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const Error& e) {
    bad(e.what());
  }
  return parse_config(text);
}

CoefficientPair make_coefficients(const ExperimentConfig& c, const GridDomain& gd) {
  try {
    ScalarField a = make_phantom(gd, c.sigma_a);
    ScalarField s(gd.grid(), 0.0);
    if (c.sigma_s.proportional) {
      for (int k = 0; k < gd.grid().size(); ++k) s[k] = c.sigma_s.ratio * a[k];
    } else {
      s = make_phantom(gd, c.sigma_s.phantom);
    }
    double s0 = s.min_interior(gd);
    return CoefficientPair(a, s, s0 > 0 ? s0 : 0.0, gd);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigInvalid) throw;
    bad(e.what());
  }
}

}  // namespace rte
