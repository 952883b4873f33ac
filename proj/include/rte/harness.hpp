#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rte/config.hpp"

namespace rte {

inline constexpr const char* kVersion = "0.1.0";

enum class Subcommand { Forward, RecoverAbs, RecoverScat, Nonlinear, Verify };

Subcommand parse_subcommand(const std::string& s);
const char* subcommand_name(Subcommand s);

struct RunOptions {
  std::string config_path;
  std::optional<std::string> out;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
};

struct StageRecord {
  std::string name;
  double seconds = 0;
  bool passed = true;
  std::string detail;
};

struct RunManifest {
  std::string config_hash;
  std::string version = kVersion;
  std::string subcommand;
  std::uint64_t seed = 0;
  int workers = 1;
  int exit_code = 0;
  std::vector<StageRecord> stages;
  std::vector<std::string> artifacts;
  std::vector<std::string> oracles;  ///< oracle invocations behind the checks
  std::string text() const;
};

/// Runs one subcommand. Artifacts and manifest.txt go to the output
/// directory; the pass/fail table goes to `log`. Returns 0 on success,
/// 1 when a stage fails and 2 for an invalid configuration.
int run(Subcommand cmd, const RunOptions& opt, std::ostream& log);

/// Same with an already parsed configuration.
int run(Subcommand cmd, ExperimentConfig cfg, const RunOptions& opt, std::ostream& log, RunManifest* manifest = nullptr);

}  // namespace rte
