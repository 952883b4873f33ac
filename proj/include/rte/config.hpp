#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rte/absorption.hpp"
#include "rte/scattering.hpp"

namespace rte {

/// sigma_s given directly, or as ratio * sigma_a.
struct ScatteringSpec {
  bool proportional = false;
  double ratio = 0;
  PhantomSpec phantom{PhantomKind::Constant, 0.0, {}, 0.0, 1e6};
};

/// Parsed experiment. The file is INI text; see README for the keys.
struct ExperimentConfig {
  std::string source_text;  ///< bytes the hash is taken over
  std::uint64_t seed = 1;
  int workers = 0;  ///< 0 defers to RTE_WORKERS
  std::string out = "out";

  Domain domain = Domain::disk({0, 0}, 1.0);
  PhantomSpec sigma_a{};
  ScatteringSpec sigma_s{};
  Model model = Model::Linear;

  int fine_grid = 257;
  ResponseOptions response{};
  TransportOptions transport{};
  int transport_grid = 65;
  NonlinearOptions nonlinear{};

  // forward beam
  double beam_arc = 0, beam_angle_offset = 0, beam_eps = 0.3, beam_delta = 0.5;

  ReconstructionRecipe recipe{};

  std::vector<double> etas{0.2, 0.1, 0.05};
  double beta0 = 0;  ///< 0 selects default_beta0(eta)
  Vec2d x0 = Vec2d::Zero();
  double v_in = 0;
  int lattice = 5;
  double lattice_lo = -0.5, lattice_hi = 0.5;
  int random_points = 0;
  ScatteringOptions scattering{};

  int verify_cases = 20;

  std::string hash() const;
};

/// Raises ConfigInvalid on syntax errors, unknown keys, bad values and
/// coefficient ordering violations.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Coefficients on a grid domain, checked for sigma_s <= sigma_a.
CoefficientPair make_coefficients(const ExperimentConfig& c, const GridDomain& gd);

}  // namespace rte
