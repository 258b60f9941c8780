#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"

#include "gravistab/equilibria.hpp"

namespace gravistab::checks {

using nlohmann::json;

/// Result of one check suite: a JSON report and the overall verdict.
struct CheckResult {
  json report;
  bool pass = false;
};

/// Interpolation inequalities on random box distributions and on the model.
CheckResult inequalities(const EquilibriumModel& model, std::uint64_t seed, int boxes = 100);
/// Antonov bound on random odd fields and the velocity identity at 10 radii.
CheckResult antonov(const EquilibriumModel& model, std::uint64_t seed, int fields = 50);
/// Constrained probes <M h, h> >= -tol and radial D^2 J > 0.
CheckResult coercivity(const EquilibriumModel& model, std::uint64_t seed, int probes = 50,
                       int radial = 20);
/// Translation-mode residuals of F, M, D^2 J and the Schrodinger operator.
CheckResult kernel(const EquilibriumModel& model);
/// Rearrangement fixed point, energy lemma, monotonicity chain, ball volume.
CheckResult rearrangement(const EquilibriumModel& model, std::uint64_t seed, int lemma_fields = 50,
                          int chain_fields = 20);

/// Dispatches by name; throws std::invalid_argument for unknown names.
CheckResult run(const std::string& name, const EquilibriumModel& model, std::uint64_t seed);

}  // namespace gravistab::checks
