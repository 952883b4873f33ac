#include "rte/field.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "rte/io.hpp"

namespace rte {

Grid Grid::covering(const Domain& d, int n) {
  if (n < 4) throw Error(ErrorKind::InvalidDomain, "grid needs at least 4 nodes per side");
  Vec2d lo = d.lower(), hi = d.upper();
  Vec2d ext = hi - lo;
  Grid g;
  g.h = ext.maxCoeff() / (n - 1);
  g.nx = static_cast<int>(std::ceil(ext.x() / g.h - 1e-9)) + 3;
  g.ny = static_cast<int>(std::ceil(ext.y() / g.h - 1e-9)) + 3;
  // centre the node lattice on the box
  Vec2d span = g.h * Vec2d(g.nx - 1, g.ny - 1);
  g.origin = 0.5 * (lo + hi) - 0.5 * span;
  return g;
}

void Grid::stencil(const Vec2d& x, int idx[4], double w[4]) const {
  double fx = (x.x() - origin.x()) / h, fy = (x.y() - origin.y()) / h;
  int i = std::clamp(static_cast<int>(std::floor(fx)), 0, nx - 2);
  int j = std::clamp(static_cast<int>(std::floor(fy)), 0, ny - 2);
  double tx = std::clamp(fx - i, 0.0, 1.0), ty = std::clamp(fy - j, 0.0, 1.0);
  idx[0] = index(i, j);
  idx[1] = idx[0] + 1;
  idx[2] = idx[0] + nx;
  idx[3] = idx[2] + 1;
  w[0] = (1 - tx) * (1 - ty);
  w[1] = tx * (1 - ty);
  w[2] = (1 - tx) * ty;
  w[3] = tx * ty;
}

GridDomain::GridDomain(const Domain& d, const Grid& g) : domain_(d), grid_(g) {
  const int n = g.size();
  inside_.assign(n, 0);
  slot_.assign(n, -1);
  ext_.assign(n, -1);
  for (int k = 0; k < n; ++k) {
    if (d.xi(g.node(k)) < -1e-12) {
      inside_[k] = 1;
      slot_[k] = static_cast<int>(interior_.size());
      interior_.push_back(k);
      ext_[k] = k;
    }
  }
  if (interior_.empty()) throw Error(ErrorKind::InvalidDomain, "grid has no interior nodes");
  // breadth-first continuation from the interior outward
  std::deque<int> queue(interior_.begin(), interior_.end());
  while (!queue.empty()) {
    int k = queue.front();
    queue.pop_front();
    int i = k % g.nx, j = k / g.nx;
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di) {
        int ii = i + di, jj = j + dj;
        if (ii < 0 || jj < 0 || ii >= g.nx || jj >= g.ny) continue;
        int m = g.index(ii, jj);
        if (ext_[m] >= 0) continue;
        ext_[m] = ext_[k];
        queue.push_back(m);
      }
  }
}

GridDomainPtr make_grid_domain(const Domain& d, int n) { return std::make_shared<const GridDomain>(d, Grid::covering(d, n)); }

ScalarField::ScalarField(const Grid& g, std::vector<double> values) : grid_(g), values_(std::move(values)) {
  if (static_cast<int>(values_.size()) != g.size()) throw Error(ErrorKind::Io, "field size does not match grid");
}

double ScalarField::operator()(const Vec2d& x) const {
  int idx[4];
  double w[4];
  grid_.stencil(x, idx, w);
  return w[0] * values_[idx[0]] + w[1] * values_[idx[1]] + w[2] * values_[idx[2]] + w[3] * values_[idx[3]];
}

double ScalarField::ray_integral(const Vec2d& x, const Vec2d& v, double len) const {
  if (!(len > 0)) return 0.0;
  const double h = grid_.h;
  const double inf = std::numeric_limits<double>::infinity();
  double fx = (x.x() - grid_.origin.x()) / h, fy = (x.y() - grid_.origin.y()) / h;
  int i = static_cast<int>(std::floor(fx)), j = static_cast<int>(std::floor(fy));
  int si = v.x() > 0 ? 1 : -1, sj = v.y() > 0 ? 1 : -1;
  double dtx = v.x() != 0 ? h / std::abs(v.x()) : inf;
  double dty = v.y() != 0 ? h / std::abs(v.y()) : inf;
  double tx = v.x() != 0 ? ((si > 0 ? i + 1 - fx : fx - i) * h) / std::abs(v.x()) : inf;
  double ty = v.y() != 0 ? ((sj > 0 ? j + 1 - fy : fy - j) * h) / std::abs(v.y()) : inf;
  double t0 = 0.0, f0 = (*this)(x), total = 0.0;
  while (t0 < len) {
    double t1 = std::min({tx, ty, len});
    if (t1 > t0) {
      double fm = (*this)(x + (0.5 * (t0 + t1)) * v);
      double f1 = (*this)(x + t1 * v);
      total += (t1 - t0) / 6.0 * (f0 + 4.0 * fm + f1);
      f0 = f1;
    }
    t0 = t1;
    if (tx <= ty) tx += dtx;
    else ty += dty;
  }
  return total;
}

double ScalarField::max_interior(const GridDomain& gd) const {
  double m = -std::numeric_limits<double>::infinity();
  for (int k : gd.interior()) m = std::max(m, values_[k]);
  return m;
}

double ScalarField::min_interior(const GridDomain& gd) const {
  double m = std::numeric_limits<double>::infinity();
  for (int k : gd.interior()) m = std::min(m, values_[k]);
  return m;
}

void ScalarField::extend(const GridDomain& gd) {
  for (int k = 0; k < grid_.size(); ++k)
    if (!gd.inside(k)) values_[k] = values_[gd.extension(k)];
}

double PhantomSpec::operator()(const Vec2d& x) const {
  double v = baseline;
  switch (kind) {
    case PhantomKind::Constant: break;
    case PhantomKind::GaussianBumps:
      for (const Bump& b : bumps) v += b.amplitude * std::exp(-(x - b.center).squaredNorm() / (2 * b.width * b.width));
      break;
    case PhantomKind::SmoothedDiscs:
      for (const Bump& b : bumps) v += b.amplitude * 0.5 * (1.0 - std::tanh(((x - b.center).norm() - b.radius) / b.width));
      break;
  }
  return v;
}

PhantomKind parse_phantom_kind(const std::string& s) {
  if (s == "constant") return PhantomKind::Constant;
  if (s == "gaussian-bumps") return PhantomKind::GaussianBumps;
  if (s == "smoothed-disc-inclusions") return PhantomKind::SmoothedDiscs;
  throw Error(ErrorKind::InvalidPhantomParams, "unknown phantom kind '" + s + "'");
}

const char* phantom_kind_name(PhantomKind k) {
  switch (k) {
    case PhantomKind::Constant: return "constant";
    case PhantomKind::GaussianBumps: return "gaussian-bumps";
    case PhantomKind::SmoothedDiscs: return "smoothed-disc-inclusions";
  }
  return "?";
}

ScalarField make_phantom(const GridDomain& gd, const PhantomSpec& spec) {
  if (!std::isfinite(spec.baseline)) throw Error(ErrorKind::InvalidPhantomParams, "baseline must be finite");
  for (const Bump& b : spec.bumps) {
    if (!(b.width > 0) || !std::isfinite(b.amplitude) || !b.center.allFinite())
      throw Error(ErrorKind::InvalidPhantomParams, "bump needs finite amplitude/centre and positive width");
    if (spec.kind == PhantomKind::SmoothedDiscs && !(b.radius > 0))
      throw Error(ErrorKind::InvalidPhantomParams, "smoothed disc needs a positive radius");
  }
  ScalarField f(gd.grid(), 0.0);
  for (int k : gd.interior()) {
    double v = spec(gd.grid().node(k));
    if (!std::isfinite(v) || v < spec.lower_bound - 1e-12 || v > spec.upper_bound + 1e-12)
      throw Error(ErrorKind::InvalidPhantomParams, "phantom value " + fmt(v) + " outside declared bounds");
    f[k] = v;
  }
  f.extend(gd);
  return f;
}

ScalarField constant_field(const GridDomain& gd, double value) { return ScalarField(gd.grid(), value); }

CoefficientPair::CoefficientPair(ScalarField a, ScalarField s, double s0, const GridDomain& gd)
    : sigma_a(std::move(a)), sigma_s(std::move(s)), sigma_0(s0) {
  if (!(sigma_a.grid() == gd.grid()) || !(sigma_s.grid() == gd.grid()))
    throw Error(ErrorKind::CoefficientOrdering, "coefficients live on different grids");
  const double tol = 1e-12;
  double smax = 0;
  for (int k : gd.interior()) {
    double va = sigma_a[k], vs = sigma_s[k];
    if (!std::isfinite(va) || !std::isfinite(vs)) throw Error(ErrorKind::CoefficientOrdering, "non-finite coefficient");
    if (vs > va + tol) throw Error(ErrorKind::CoefficientOrdering, "sigma_s exceeds sigma_a at a grid node");
    if (vs < s0 - tol) throw Error(ErrorKind::CoefficientOrdering, "sigma_s falls below sigma_0 at a grid node");
    smax = std::max(smax, vs);
  }
  has_scattering_ = smax > 0;
  if (s0 < 0 || (has_scattering_ && !(s0 > 0)))
    throw Error(ErrorKind::CoefficientOrdering, "sigma_0 must be positive when sigma_s is nonzero");
}

double segment_integral(const ScalarField& f, const Vec2d& x, const Vec2d& v, double len, double step) {
  if (!(len > 0)) return 0.0;
  int n = std::max(1, static_cast<int>(std::ceil(len / step)));
  double dt = len / n, s = 0.5 * (f(x) + f(x + len * v));
  for (int m = 1; m < n; ++m) s += f(x + (m * dt) * v);
  return s * dt;
}

double line_integral(const ScalarField& f, const ChordRay<double>& c, double step) {
  return segment_integral(f, c.x_in, c.v(), c.tau_plus, step);
}

void write_field(std::ostream& os, const ScalarField& f) {
  const Grid& g = f.grid();
  os << g.nx << ' ' << g.ny << ' ' << fmt(g.h) << ' ' << fmt(g.origin.x()) << ' ' << fmt(g.origin.y()) << '\n';
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      if (i) os << ' ';
      os << fmt(f[g.index(i, j)]);
    }
    os << '\n';
  }
}

ScalarField read_field(std::istream& is) {
  // leading comment lines carry provenance
  while ((is >> std::ws).peek() == '#') is.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
  Grid g;
  double x0, y0;
  if (!(is >> g.nx >> g.ny >> g.h >> x0 >> y0) || g.nx < 2 || g.ny < 2 || !(g.h > 0))
    throw Error(ErrorKind::Io, "bad field header");
  g.origin = Vec2d(x0, y0);
  std::vector<double> v(g.size());
  for (double& x : v)
    if (!(is >> x)) throw Error(ErrorKind::Io, "truncated field data");
  return ScalarField(g, std::move(v));
}

}  // namespace rte
