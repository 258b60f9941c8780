#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gravistab/equilibria.hpp"
#include "gravistab/functionals.hpp"
#include "gravistab/particles.hpp"

namespace gravistab {

/// Largest N accepted by field_direct.
inline constexpr std::size_t kDirectBudget = 20000;

/// Mean-field solver used by the integrator.
enum class SolverKind {
  radial,    ///< exact shells around the origin
  direct,    ///< softened direct summation
  external,  ///< frozen field of a built model (test particles)
};

struct Solver {
  SolverKind kind = SolverKind::radial;
  double eps = 0.0;                          ///< softening for direct
  std::size_t budget = kDirectBudget;        ///< largest N for direct
  const EquilibriumModel* model = nullptr;   ///< field source for external
  bool parallel = true;                      ///< OpenMP kernels or serial reference
  /// Radius order reused between radial evaluations (filled on first use).
  std::shared_ptr<std::vector<std::size_t>> order_cache;
};

/// a_i = -(m_i / (4 pi r_i^2)) x_i / r_i with m_i the weight strictly inside
/// r_i plus half of the other weights at exactly r_i.  r_i = 0 gives zero.
std::vector<Vec3> field_radial(const ParticleEnsemble& e);
/// Same, reusing `order` (a permutation by radius from an earlier call) as
/// the starting point of the sort.  The result does not depend on it.
std::vector<Vec3> field_radial(const ParticleEnsemble& e, std::vector<std::size_t>& order);
/// Serial reference of field_radial (bitwise identical).
std::vector<Vec3> field_radial_serial(const ParticleEnsemble& e);

/// a_i = -sum_{j != i} w_j (x_i - x_j) / (4 pi (|x_i - x_j|^2 + eps^2)^{3/2}),
/// summed in increasing j.  Throws std::invalid_argument when N > budget.
std::vector<Vec3> field_direct(const ParticleEnsemble& e, double eps,
                               std::size_t budget = kDirectBudget);
/// Serial reference of field_direct (bitwise identical).
std::vector<Vec3> field_direct_serial(const ParticleEnsemble& e, double eps,
                                      std::size_t budget = kDirectBudget);

/// Accelerations for the chosen solver.
std::vector<Vec3> accelerations(const ParticleEnsemble& e, const Solver& s);

/// Energy whose gradient gives the solver's accelerations, with the sign of
/// H_pot (positive).  For external fields this is -sum w_i phi(r_i).
double solver_potential_energy(const ParticleEnsemble& e, const Solver& s);
/// sum w_i |v_i|^2 / 2.
double kinetic_energy(const ParticleEnsemble& e);
/// Weighted centre of mass.
Vec3 center_of_mass(const ParticleEnsemble& e);
/// Moves the centre of mass and the mean velocity to zero.
void recenter(ParticleEnsemble& e);

/// One kick-drift-kick step.  `acc` holds the accelerations at the current
/// positions on entry and at the new positions on exit.
void step_leapfrog(ParticleEnsemble& e, const Solver& s, double dt, std::vector<Vec3>& acc);
/// Convenience form that computes the initial accelerations.
ParticleEnsemble step_leapfrog(const ParticleEnsemble& e, const Solver& s, double dt);

/// Conservation diagnostics at one time.
struct DiagnosticsRecord {
  double t = 0.0;
  double H = 0.0, H_cin = 0.0, H_pot = 0.0;
  double mass = 0.0;
  double l1 = 0.0, l2 = 0.0, linf = 0.0;  ///< binned L^p norms
  Vec3 z{0.0, 0.0, 0.0};                  ///< shift used for the distance
  Vec3 cm{0.0, 0.0, 0.0};                 ///< centre of mass
  double dist = 0.0;                      ///< weighted distance to the reference
};

struct EvolveOptions {
  std::size_t cadence = 10;            ///< steps between records
  PhaseGrid lp_grid;                   ///< grid for binned norms (empty: skip)
  const GriddedF* reference = nullptr; ///< binned f0 for the distance (null: skip)
  bool track_shift = false;            ///< z from estimate_shift, else z = 0
  double blowup_drift = 0.5;           ///< relative H change treated as blow-up
};

struct EvolveResult {
  std::vector<DiagnosticsRecord> records;
  ParticleEnsemble final_state;  ///< last good state
  std::size_t steps = 0;
  bool blew_up = false;
  std::string reason;
};

/// Diagnostics of one state.
DiagnosticsRecord diagnose(const ParticleEnsemble& e, const Solver& s, const EvolveOptions& opt);

/// Runs ceil(T / dt) leapfrog steps, recording every `cadence` steps and at
/// the end.  A non-finite state or a relative H change above blowup_drift
/// stops the run with the last good record kept.
EvolveResult evolve(ParticleEnsemble e, const Solver& s, double dt, double T,
                    const EvolveOptions& opt = {});

/// Circular period at the support edge, 2 pi sqrt(4 pi R^3 / M).
double dynamical_time(const EquilibriumModel& model);
/// Default softening R N^{-1/3} / 10.
double default_softening(const EquilibriumModel& model, std::size_t N);
/// Coarse 16 x 16 x 4 grid over the default extents, used where sampling
/// noise would dominate finer bins.
PhaseGrid coarse_phase_grid(const EquilibriumModel& model);

enum class PerturbationKind { none, scale, boost, shell_reversal, kick_l2 };

/// Parses none | scale | boost | reversal | kick.
PerturbationKind parse_perturbation(const std::string& name);
std::string perturbation_name(PerturbationKind kind);

/// Applies a perturbation of amplitude eta to a sampled equilibrium:
///   scale     w -> (1 + eta) w
///   boost     v -> v + eta v_s e_z
///   reversal  v -> -v for |x| > (1 - eta) R
///   kick      v -> v + eta v_s (-x, -y, 2 z) / R
/// with v_s = sqrt(M / (4 pi R)).
void apply_perturbation(ParticleEnsemble& e, const EquilibriumModel& model, PerturbationKind kind,
                        double eta);

struct StabilityConfig {
  PerturbationKind kind = PerturbationKind::none;
  double eta = 0.0;
  std::size_t N = 100000;
  double T = 0.0;        ///< duration (absolute time)
  double dt = 0.0;       ///< step; 0 selects t_dyn / 200
  std::uint64_t seed = 42;
  Solver solver;         ///< direct runs with eps = 0 use default_softening
  std::size_t cadence = 20;
  double factor = 5.0;   ///< bounded if max distance <= factor x initial
};

/// Hypothesis proxies of the perturbed initial data, measured against the
/// unperturbed sample so that sampling noise cancels.
struct HypothesisProxies {
  double l1 = 0.0;    ///< binned ||f_in - f_sample||_1 / M on the coarse grid
  double dH = 0.0;    ///< (H(f_in) - H(f_sample)) / |H(f_sample)|
  double linf = 0.0;  ///< binned ||f_in||_inf / ||f_sample||_inf
  bool hold = true;   ///< l1 <= eta and dH <= eta
};

struct StabilityResult {
  std::vector<double> times;
  std::vector<double> distance;
  std::vector<Vec3> shift;            ///< z used for each distance
  std::vector<DiagnosticsRecord> records;
  HypothesisProxies proxies;
  double initial_distance = 0.0;
  double max_distance = 0.0;
  bool bounded = false;
  bool blew_up = false;
  std::vector<std::string> warnings;
  Vec3 boost{0.0, 0.0, 0.0};          ///< bulk velocity added by the perturbation
};

/// Samples the model, applies the perturbation and evolves it, recording the
/// weighted distance to f0 centred at the estimated shift (z = 0 for radial
/// runs).  Direct runs are recentred before the perturbation.
StabilityResult stability_experiment(const EquilibriumModel& model, const StabilityConfig& cfg);

}  // namespace gravistab
