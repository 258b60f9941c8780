#pragma once

#include <functional>
#include <map>
#include <variant>
#include <vector>

#include "gravistab/equilibria.hpp"
#include "gravistab/particles.hpp"
#include "gravistab/radial_numerics.hpp"

namespace gravistab {

/// Tensor bins in (r, w, c) with w = |v| and c = x.v / (|x||v|).
/// Cells are indexed as (ir * nw + iw) * nc + ic.
struct PhaseGrid {
  std::vector<double> r_edges;
  std::vector<double> w_edges;
  std::vector<double> c_edges;

  static PhaseGrid uniform(std::size_t nr, std::size_t nw, std::size_t nc, double r_max,
                           double w_max);

  std::size_t nr() const { return r_edges.size() - 1; }
  std::size_t nw() const { return w_edges.size() - 1; }
  std::size_t nc() const { return c_edges.size() - 1; }
  std::size_t cells() const { return nr() * nw() * nc(); }
  std::size_t index(std::size_t ir, std::size_t iw, std::size_t ic) const {
    return (ir * nw() + iw) * nc() + ic;
  }
  /// Phase-space volume 8 pi^2 int r^2 dr int w^2 dw int dc of a cell.
  double volume(std::size_t ir, std::size_t iw, std::size_t ic) const;
  /// Spatial volume of radial bin ir.
  double shell_volume(std::size_t ir) const;
  /// Velocity-space volume 2 pi int w^2 dw int dc of bin (iw, ic).
  double velocity_volume(std::size_t iw, std::size_t ic) const;
  /// Mean of |v|^2 / 2 over speed bin iw with weight w^2.
  double mean_half_w2(std::size_t iw) const;
  /// Validates edges: strictly increasing, r and w start at 0, c spans [-1, 1].
  void validate() const;
};

/// Default grid 64 x 64 x 32 over [0, 1.5 R] x [0, 1.2 sqrt(2|phi_c|)] x [-1, 1].
PhaseGrid default_phase_grid(const EquilibriumModel& model);

/// Piecewise-constant distribution on a PhaseGrid, centred at `center`.
struct GriddedF {
  PhaseGrid grid;
  std::vector<double> values;  ///< cell averages, one per cell
  Vec3 center{0.0, 0.0, 0.0};
  double outside_mass = 0.0;      ///< binned mass that fell outside the grid
  double outside_weighted = 0.0;  ///< sum of w (1 + |v|^2) outside the grid
};

/// Model-backed f0(x, v) = F(|v|^2/2 + phi(|x|)).
struct AnalyticF {
  const EquilibriumModel* model = nullptr;
};

/// Particle ensemble with the grid used for binned quantities.
struct EnsembleF {
  const ParticleEnsemble* ensemble = nullptr;
  PhaseGrid grid;
  Vec3 center{0.0, 0.0, 0.0};
};

using DistributionView = std::variant<AnalyticF, EnsembleF, GriddedF>;

/// Cell averages of f0 by tensor Gauss-Legendre quadrature in (r, w).
GriddedF bin_model(const EquilibriumModel& model, const PhaseGrid& grid);
/// Particle weights per cell divided by the cell volume.  Accumulation runs
/// in particle index order.
GriddedF bin_ensemble(const ParticleEnsemble& e, const PhaseGrid& grid,
                      const Vec3& center = {0.0, 0.0, 0.0});
/// Any view as a GriddedF (analytic views use default_phase_grid).
GriddedF to_gridded(const DistributionView& f);

/// Exact potential of a density that is constant on each radial shell.
struct ShellField {
  std::vector<double> edges;   ///< shell edges, edges[0] = 0
  std::vector<double> rho;     ///< density per shell
  std::vector<double> m_edge;  ///< enclosed mass at each edge
  std::vector<double> tail;    ///< int_{edge}^inf s rho ds at each edge
  double M = 0.0;

  double phi(double r) const;
  double dphi(double r) const;
  /// Shell average int r^2 phi / int r^2 over shell i (exact).
  double shell_average_phi(std::size_t i) const;
  /// int |grad phi|^2 over all space (twice the potential energy).
  double gradient_norm2() const;
};

ShellField shell_field(std::vector<double> edges, std::vector<double> rho);
/// int grad phi_a . grad phi_b for two shell fields on the same edges.
double gradient_inner(const ShellField& a, const ShellField& b);
/// Shell densities of a gridded distribution.
std::vector<double> shell_density(const GriddedF& f);

/// Radial density of f on the given grid.
RadialProfile spatial_density(const DistributionView& f, const RadialGrid& grid);

/// Energies, mass and L^p norms (p = 1, 2, infinity) of a distribution.
struct EnergyReport {
  double H_cin = 0.0;
  double H_pot = 0.0;
  double H = 0.0;
  double mass = 0.0;
  std::map<double, double> lp_norms;
};

EnergyReport energy_report(const DistributionView& f);

/// Pair energy of point shells around `center`, consistent with field_radial:
/// each pair contributes w_i w_j / (4 pi max(r_i, r_j)); shell self energies
/// are excluded.
double shell_potential_energy(const ParticleEnsemble& e, const Vec3& center = {0.0, 0.0, 0.0});

/// Phase-space integral of C(f).  C(0) must vanish.
double casimir(const DistributionView& f, const std::function<double(double)>& C);
/// ||f||_p, p >= 1; p = infinity is the maximum (binned for ensembles).
double lp_norm(const DistributionView& f, double p);

/// Both sides of the density and potential-energy interpolation
/// inequalities, with the constants omitted.
struct InterpolationSides {
  double lhs_rho = 0.0;         ///< ||rho||_q, q = (5p - 3)/(3p - 1)
  double rhs_factor = 0.0;      ///< ||f||_p^{2p/(5p-3)} H_cin^{(3p-3)/(5p-3)}
  double pot_lhs = 0.0;         ///< H_pot
  double pot_rhs_factor = 0.0;  ///< ||f||_1^{(7p-9)/(6(p-1))} ||f||_p^{p/(3(p-1))} H_cin^{1/2}
};

/// Requires p > 1.  The potential pair needs p > 9/7; when `potential` is
/// set and p <= 9/7 this throws std::domain_error("supercritical exponent").
InterpolationSides interpolation_check(const DistributionView& f, double p,
                                       bool potential = true);

/// ||f - f0||_1 + |H(f) - H(f0)| on the grid of f (analytic views are
/// compared on the default grid).
double stability_distance(const DistributionView& f, const EquilibriumModel& model);

/// int (1 + |v|^2) |f(x, v) - f0(x - z, v)| on a (r, w, c) binning centred at z.
double weighted_shift_distance(const ParticleEnsemble& e, const EquilibriumModel& model,
                               const Vec3& z, const PhaseGrid& grid);
/// Same with a precomputed binned f0 on the grid used for the ensemble.
double weighted_shift_distance(const ParticleEnsemble& e, const GriddedF& f0_binned,
                               const Vec3& z);

/// Weighted centroid of the innermost 90% of the mass around the full centroid.
/// Throws std::invalid_argument("undersampled") for fewer than 100 particles.
Vec3 estimate_shift(const ParticleEnsemble& e);

/// Bound on the L1 change caused by reordering cell averages of f0:
/// sum over cells of volume times the oscillation of F inside the cell.
double binning_oscillation(const EquilibriumModel& model, const PhaseGrid& grid);

/// Box distribution h 1{|x| < a} 1{b1 < |v| < b2} represented exactly.
GriddedF box_distribution(double h, double a, double b1, double b2, std::size_t nr = 8);

/// g(x, v) = gamma f((x - x0)/lambda, mu v) for a gridded f.
GriddedF symmetry_transform(const GriddedF& f, double gamma, double lambda, double mu,
                            const Vec3& x0);

}  // namespace gravistab
