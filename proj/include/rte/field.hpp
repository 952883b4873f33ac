#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "rte/geometry.hpp"

namespace rte {

/// Node-centred uniform grid. Node (i, j) sits at origin + h (i, j); storage
/// is row-major with index j * nx + i.
struct Grid {
  int nx = 0, ny = 0;
  double h = 0;
  Vec2d origin = Vec2d::Zero();

  /// Grid over the bounding box of d with n nodes along the longer side,
  /// padded by one node on every side.
  static Grid covering(const Domain& d, int n);

  int size() const { return nx * ny; }
  int index(int i, int j) const { return j * nx + i; }
  Vec2d node(int i, int j) const { return origin + h * Vec2d(i, j); }
  Vec2d node(int k) const { return node(k % nx, k / nx); }
  bool operator==(const Grid& o) const { return nx == o.nx && ny == o.ny && h == o.h && origin == o.origin; }

  /// Bilinear stencil of x: four node indices and weights. Points off the
  /// grid are clamped to the nearest cell.
  void stencil(const Vec2d& x, int idx[4], double w[4]) const;
};

/// A grid together with the domain mask. Interior nodes satisfy xi < 0; every
/// exterior node carries the index of a nearby interior node used for
/// constant continuation.
class GridDomain {
 public:
  GridDomain(const Domain& d, const Grid& g);

  const Domain& domain() const { return domain_; }
  const Grid& grid() const { return grid_; }
  bool inside(int k) const { return inside_[k] != 0; }
  const std::vector<int>& interior() const { return interior_; }
  /// Position of node k in interior(), or -1.
  int interior_slot(int k) const { return slot_[k]; }
  /// Interior node that stands in for node k (k itself when interior).
  int extension(int k) const { return ext_[k]; }
  int n_interior() const { return static_cast<int>(interior_.size()); }

 private:
  Domain domain_;
  Grid grid_;
  std::vector<char> inside_;
  std::vector<int> interior_, slot_, ext_;
};

using GridDomainPtr = std::shared_ptr<const GridDomain>;
GridDomainPtr make_grid_domain(const Domain& d, int n);

class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(const Grid& g, double value) : grid_(g), values_(g.size(), value) {}
  ScalarField(const Grid& g, std::vector<double> values);

  const Grid& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  double operator[](int k) const { return values_[k]; }
  double& operator[](int k) { return values_[k]; }

  /// Bilinear interpolation.
  double operator()(const Vec2d& x) const;

  /// Exact integral of the bilinear interpolant along x + t v, t in [0, len],
  /// by walking grid cells (the interpolant is quadratic in t on each cell).
  double ray_integral(const Vec2d& x, const Vec2d& v, double len) const;

  double max_interior(const GridDomain& gd) const;
  double min_interior(const GridDomain& gd) const;

  /// Copies interior values onto exterior nodes through the extension map.
  void extend(const GridDomain& gd);

 private:
  Grid grid_;
  std::vector<double> values_;
};

struct Bump {
  Vec2d center = Vec2d::Zero();
  double amplitude = 0;
  double width = 0.1;   ///< gaussian std or tanh edge width
  double radius = 0.0;  ///< disc radius, smoothed-disc only
};

enum class PhantomKind { Constant, GaussianBumps, SmoothedDiscs };

struct PhantomSpec {
  PhantomKind kind = PhantomKind::Constant;
  double baseline = 1.0;
  std::vector<Bump> bumps;
  double lower_bound = 0.0;  ///< declared minimum value
  double upper_bound = 1e6;  ///< declared maximum value

  double operator()(const Vec2d& x) const;
};

PhantomKind parse_phantom_kind(const std::string& s);
const char* phantom_kind_name(PhantomKind k);

/// Samples the phantom on interior nodes and extends outward.
ScalarField make_phantom(const GridDomain& gd, const PhantomSpec& spec);
ScalarField constant_field(const GridDomain& gd, double value);

/// sigma_0 <= sigma_s <= sigma_a at every interior node. sigma_0 = 0 is only
/// accepted when sigma_s vanishes identically.
struct CoefficientPair {
  ScalarField sigma_a, sigma_s;
  double sigma_0 = 0;

  CoefficientPair(ScalarField a, ScalarField s, double s0, const GridDomain& gd);
  bool scattering() const { return has_scattering_; }

 private:
  bool has_scattering_ = false;
};

/// Composite trapezoid of the field along a chord.
double line_integral(const ScalarField& f, const ChordRay<double>& c, double step);
/// Composite trapezoid along x + t v, t in [0, len].
double segment_integral(const ScalarField& f, const Vec2d& x, const Vec2d& v, double len, double step);

/// Field text format: header "nx ny h x0 y0", then one row of values per line.
/// Lines starting with # before the header are skipped.
void write_field(std::ostream& os, const ScalarField& f);
ScalarField read_field(std::istream& is);

}  // namespace rte
