#pragma once

// Self-checking suites over the local models: pullbacks and symplecticity of
// zeta/eta, the transition structure checks, closed-form flows and upsilon.

#include <cstdint>
#include <string>
#include <vector>

#include "semitoric/localmodel.hpp"

namespace semitoric {

struct SuiteResult {
  std::string name;
  std::vector<StructureCheck> checks;
  /// Checks skipped for this input, with the reason.
  std::vector<std::string> notes;

  bool pass() const;
  const StructureCheck* find(const std::string& check) const;
};

struct ModelSuiteOptions {
  int points = 100;
  /// Random integer blocks have entries in [-bound, bound].
  int bound = 3;
  double pullback_tol = 1e-10;
  double symplectic_tol = 1e-5;
  double fd_step = 1e-6;
  /// Integer snapping tolerance of the structure checks.
  double structure_tol = 1e-6;
};

SuiteResult model_verify_suite(const WilliamsonType& w, std::uint64_t seed, const ModelSuiteOptions& options = {});

struct FlowSuiteOptions {
  /// Closed forms and periodicity use this type; it must have k_f = 1 and k_h = 0.
  WilliamsonType type = WilliamsonType::of(1, 1, 0, 1);
  double t_max = 2.0 * kPi;
  int points = 4;
  int times = 9;
  double integrator_tol = 1e-11;
  double conservation_tol = 1e-8;
  double periodicity_tol = 1e-6;
  double agreement_tol = 1e-7;
  int upsilon_samples = 100;
  double upsilon_tol = 1e-9;
  /// -1 flips every numerically integrated vector field (negative control).
  double orientation = 1.0;
  std::uint64_t seed = 0;
};

SuiteResult flow_suite(const FlowSuiteOptions& options = {});

}  // namespace semitoric
