#pragma once

#include <cstddef>

#include "gravistab/equilibria.hpp"
#include "gravistab/functionals.hpp"
#include "gravistab/radial_numerics.hpp"

namespace gravistab {

/// Distribution function of the levels of f: s -> |{f >= s}|.
struct LevelProfile {
  MonotoneMap volume;          ///< decreasing in s
  double s_min = 0.0;          ///< smallest sampled level
  double s_max = 0.0;          ///< ess sup f
  double mass = 0.0;           ///< int f
  double support_volume = 0.0; ///< |{f > 0}|

  /// Decreasing rearrangement f#(V) = inf{s : |{f >= s}| <= V}; zero beyond
  /// the volume of the lowest sampled level.
  double decreasing(double V) const;
};

/// Phase-space volume |{E_phi(x, v) < E}| = (4 pi)^2 / 3 int r^2 (2 (E - phi))_+^{3/2} dr
/// for E < 0, with phi from the profile and -M/(4 pi r) beyond its grid.
/// Throws std::domain_error for E >= 0 (the volume is infinite).
double energy_volume(const RadialProfile& phi, double E);

/// E -> |{E_phi < E}| sampled on n energies in (min phi, E_max], E_max < 0.
MonotoneMap energy_volume_map(const RadialProfile& phi, double E_max, std::size_t n = 1024);

/// Level profile on n_levels log-spaced levels in [1e-6 s_max, s_max].
LevelProfile level_profile(const DistributionView& f, std::size_t n_levels = 512);

/// Cell energies |v|^2/2 averaged over the speed bin plus phi averaged over the shell.
std::vector<double> cell_energies(const PhaseGrid& grid, const RadialProfile& phi);

/// Discrete rearrangement with respect to the energy E_phi: cells sorted by
/// energy receive the average of the decreasing rearrangement of f over their
/// volume interval; cells of equal energy share one value.
GriddedF rearrange_by_energy(const DistributionView& f, const RadialProfile& phi);
/// Same with explicit cell energies.
GriddedF rearrange_by_energy(const GriddedF& f, const std::vector<double>& energies);

/// int f^{*phi} E_phi and int f E_phi on the cells of f.
struct EnergyLemmaSides {
  double rearranged = 0.0;
  double original = 0.0;
};
EnergyLemmaSides rearrangement_energy_lemma_check(const DistributionView& f,
                                                  const RadialProfile& phi);

/// J(phi) = H(f*) + (1/2) ||grad phi - grad phi*||^2 where f* = f#(|{E_phi < E}|)
/// is built from the level profile and phi* is its potential.
double reduced_functional(const LevelProfile& levels, const RadialProfile& phi);

/// H(f) >= J(phi_f) >= H(f^) evaluated on the grid of f with exact shell
/// potentials, where f^ is the rearrangement of f with respect to E_{phi_f}.
struct MonotonicityChain {
  double H_f = 0.0;
  double J = 0.0;
  double H_hat = 0.0;
};
MonotonicityChain monotonicity_chain(const DistributionView& f);

/// int |a#(V) - b#(V)| dV between the decreasing rearrangements of two
/// gridded distributions (exact for piecewise-constant cells).
double level_profile_distance(const GriddedF& a, const GriddedF& b);

}  // namespace gravistab
