#pragma once

#include <string>
#include <vector>

#include "rte/probe_solver.hpp"

namespace rte {

struct WidthSchedule {
  double eps = 0.02;
  double delta = 4e-4;
  double theta = 1.0;
};

struct ChordEstimate {
  std::string id;
  ChordRay<double> chord{};
  double M = 0;  ///< raw measurement
  double E = 0;  ///< M / (C |n(X_in).V_in|)
  double p = 0;  ///< -log E
  WidthSchedule widths{};
  double m1 = 0, m2 = 0, m3 = 0;
  double truth = 0;  ///< exact integral of the bilinear sigma_a along the chord
  bool failed = false;
  std::string error;
};

/// Raw measurement of an absorption probe turned into an X-ray value.
/// Raises NonPositiveTransmission when E <= 0.
ChordEstimate probe_chord(const ProbeSolver& solver, const ProbeConfig& probe);
ChordEstimate probe_chord(const ProbeSolver& solver, const Vec2d& x_in, double angle, const WidthSchedule& w,
                          double c_in = 0.05);

struct ChordSet {
  int sources = 60;
  int directions = 40;
  double c_in = 0.05;
};

/// Source points equispaced in arc length; directions equispaced in the
/// angle to the inward normal. Chords violating the c_in cutoff at either
/// end are dropped.
std::vector<ChordRay<double>> chord_family(const Domain& d, const ChordSet& s);

struct Sinogram {
  std::vector<ChordEstimate> rows;
  int failures = 0;
  double failure_fraction() const { return rows.empty() ? 0.0 : double(failures) / rows.size(); }
  /// Quantile of |p - truth| / truth over successful rows with truth > 0.
  double relative_error_quantile(double q) const;
};

Sinogram assemble_sinogram(const ProbeSolver& solver, const std::vector<ChordRay<double>>& chords,
                           const WidthSchedule& w, double c_in = 0.05, int workers = 1);

std::string sinogram_tsv(const Sinogram& s);

/// Square pixel lattice over the bounding box; pixel centres are the nodes.
Grid pixel_grid(const Domain& d, int n);

/// Sparse chord/pixel intersection lengths. Columns are interior pixels of
/// gd; pixels whose centre lies outside are folded onto their extension.
Eigen::SparseMatrix<double> xray_matrix(const GridDomain& gd, const std::vector<ChordRay<double>>& chords);

struct InversionOptions {
  int pixels = 48;
  double lambda = 1e-3;
  int min_coverage = 10;
  double tol = 1e-10;
  int max_iter = 5000;
};

struct Inversion {
  ScalarField field;  ///< clipped at 0, on the pixel grid
  GridDomainPtr gd;
  int iterations = 0;
  double cg_error = 0;
  double residual = 0;  ///< ||A m - p||
  double data_norm = 0;  ///< ||p||
  int min_coverage = 0;
};

/// Minimizes ||A m - p||^2 + lambda sum over adjacent pixels (m_a - m_b)^2
/// by conjugate gradients on the normal equations, then clips at 0.
/// Raises UnderdeterminedCoverage or SolverStagnation.
Inversion invert_xray(const Domain& d, const std::vector<ChordRay<double>>& chords, const std::vector<double>& p,
                      const InversionOptions& o = {});
Inversion invert_xray(const Domain& d, const Sinogram& s, const InversionOptions& o = {});

struct ReconstructionRecipe {
  ChordSet chords{};
  WidthSchedule widths{};
  InversionOptions inversion{};
  int workers = 1;
};

struct ReconstructionReport {
  double rel_l2 = 0;
  double linf = 0;
  int chords = 0;
  double failure_fraction = 0;
  double sinogram_p95 = 0;
  double seconds = 0;
  std::string text() const;
};

struct Reconstruction {
  Inversion inversion;
  Sinogram sinogram;
  ReconstructionReport report;
};

/// Errors are taken on interior pixels against the truth sampled at pixel centres.
ReconstructionReport compare_fields(const GridDomain& gd, const ScalarField& rec, const ScalarField& truth);

Reconstruction reconstruct_sigma_a(const ProbeSolver& solver, const ReconstructionRecipe& r);

}  // namespace rte
