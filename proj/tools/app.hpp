#pragma once

// Command-line front end: configuration, subcommands and exit codes.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "semitoric/report.hpp"

namespace semitoric::app {

enum ExitCode : int { kPass = 0, kFailure = 1, kConfigError = 2, kNumericalFailure = 3 };

struct NodalConfig {
  std::string type;
  double step = 0.05;
  int max_steps = 200;
  std::optional<std::pair<double, double>> bounds;
  double radius = 0.05;
  /// Value axis plotted against f1; -1 picks the dominant direction.
  int axis = -1;
  SamplingSpec sampling;
};

struct RunConfig {
  std::string command;
  std::string system;
  std::optional<Region> region;
  std::optional<std::vector<double>> grid;
  std::map<std::string, double> tolerances;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out_dir = ".";
  bool svg = true;
  NodalConfig nodal;
  /// model-verify and flows.
  std::string type;
  std::optional<int> n;
  double t_max = 2.0 * kPi;
  bool wrong_orientation = false;
  /// classify.
  std::string chart;
  std::vector<double> point;

  double tol(const std::string& key, double fallback) const;
};

/// Applies a JSON config document to cfg. Unknown keys, wrong types,
/// non-positive steps or malformed axes throw ConfigError.
void apply_config(const Json& doc, RunConfig& cfg);

/// Region and grid used when the config names none.
std::pair<Region, GridSpec> default_scan(const MomentMapSystem& sys);

/// Runs one command line (without the program name) and returns the exit code.
int run(const std::vector<std::string>& args);

}  // namespace semitoric::app
