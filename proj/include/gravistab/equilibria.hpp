#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gravistab/particles.hpp"
#include "gravistab/radial_numerics.hpp"

namespace gravistab {

/// Family of the isotropic ansatz F(E).
enum class LawKind { polytrope, king, tabulated };

/// Isotropic steady-state law F(E), written through the depth s = E0 - E so
/// that the cutoff E0 can be fixed after the model is built.
struct AnsatzLaw {
  LawKind kind = LawKind::king;
  double n = 0.0;    ///< polytropic index
  double C_F = 1.0;  ///< polytropic amplitude
  std::optional<MonotoneMap> table;  ///< tabulated F as a function of depth

  /// F = C_F (E0 - E)_+^n.  Requires n > -1/2 and C_F > 0.
  static AnsatzLaw polytrope(double n, double C_F = 1.0);
  /// F = (exp(E0 - E) - 1)_+.
  static AnsatzLaw king();
  /// F given on depth breakpoints s >= 0, non-decreasing in s.
  static AnsatzLaw tabulated(MonotoneMap depth_table);

  /// F at depth s (zero for s <= 0).
  double F_depth(double s) const;
  /// dF/dE at depth s, i.e. minus the derivative in s (zero for s <= 0).
  double Fprime_depth(double s) const;
  /// rho(u) = int F dv at local depth u = E0 - phi.
  double density(double u) const;
  /// d rho / du, equal to the effective potential -int F'(E) dv.
  double density_derivative(double u) const;
  /// (1/2) int |v|^2 F dv at local depth u.
  double kinetic_density(double u) const;

  std::string name() const;
};

/// c_n with rho = c_n (E0 - phi)_+^{n + 3/2} for F = C_F (E0 - E)_+^n.
/// Throws std::domain_error for n <= -1.
double polytrope_density_constant(double n, double C_F);

/// Self-consistent isotropic steady state.
struct EquilibriumModel {
  AnsatzLaw law;
  double u_c = 0.0;    ///< central depth E0 - phi(0)
  double E0 = 0.0;     ///< cutoff energy, -M/(4 pi R)
  double M = 0.0;      ///< total mass
  double R = 0.0;      ///< support radius
  double phi_c = 0.0;  ///< central potential
  RadialProfile phi;   ///< exterior extrapolation -M/(4 pi r)
  RadialProfile rho;   ///< zero beyond R
  RadialProfile dphi;  ///< exterior extrapolation M/(4 pi r^2)
  std::size_t search_nodes = 0;  ///< node count of the build grid
  double search_radius = 0.0;    ///< outer radius of the build grid

  /// E0 - phi(r), clipped at zero outside the support.
  double depth(double r) const;
};

/// Maximum self-consistency and Poisson residuals of a built model.
struct ResidualReport {
  double self_consistency = 0.0;  ///< max |rho - int F dv| / rho(0), r < 0.99 R
  double edge = 0.0;              ///< same in the outer 1% of the support
  double poisson = 0.0;           ///< max |phi - phi[rho]| / |phi_c|
  double exterior_matching = 0.0; ///< |E0 + M/(4 pi R)| / |E0|
};

/// Error raised when the depth never reaches zero on the build grid.
class NonCompactSupport : public std::runtime_error {
 public:
  NonCompactSupport(std::vector<double> r, std::vector<double> u, std::vector<double> du);
  const std::vector<double>& radii() const { return r_; }
  const std::vector<double>& depth() const { return u_; }
  const std::vector<double>& depth_slope() const { return du_; }

 private:
  std::vector<double> r_, u_, du_;
};

/// Integrates (1/r^2)(r^2 u')' = -rho(u) outward from u(0) = u_c, u'(0) = 0
/// up to the first zero R of u.  The grid supplies the search radius and the
/// node count of the stored profiles, which live on a refined grid over
/// [0, R].  Throws NonCompactSupport if u stays positive on the grid.
EquilibriumModel build_equilibrium(const AnsatzLaw& law, double u_c, const RadialGrid& grid);

/// Residuals of the model equations at nodes and cell midpoints.
ResidualReport equilibrium_residuals(const EquilibriumModel& model);

/// F(E) of the model law, zero for E >= E0.
double eval_F(const EquilibriumModel& model, double E);
/// F'(E), zero for E >= E0.
double eval_Fprime(const EquilibriumModel& model, double E);

/// Kinetic, potential and total energy of f0 together with its mass.
struct ModelEnergies {
  double H_cin = 0.0;
  double H_pot = 0.0;
  double H = 0.0;
  double mass = 0.0;
};
ModelEnergies model_energies(const EquilibriumModel& model);

/// ||f0||_p (p >= 1, p = infinity allowed).
double model_lp_norm(const EquilibriumModel& model, double p);

/// g(x, v) = gamma f0((x - x0)/lambda, mu v), with profiles recomputed from
/// the transformed density.
struct TransformedModel {
  const EquilibriumModel* base = nullptr;
  double gamma = 1.0, lambda = 1.0, mu = 1.0;
  std::array<double, 3> x0{0.0, 0.0, 0.0};
  RadialProfile rho;  ///< about the centre x0
  RadialProfile phi;
  RadialProfile dphi;
  double mass = 0.0;
  double H_cin = 0.0;
  double H_pot = 0.0;
  double H = 0.0;

  /// Value g(x, v).
  double f(const std::array<double, 3>& x, const std::array<double, 3>& v) const;
  /// ||g||_p.
  double lp_norm(double p) const;
};

TransformedModel symmetry_transform(const EquilibriumModel& model, double gamma, double lambda,
                                    double mu, const std::array<double, 3>& x0);

/// Composition: applying `first` and then `second` equals the returned
/// parameters applied once.
struct SymmetryParams {
  double gamma = 1.0, lambda = 1.0, mu = 1.0;
  std::array<double, 3> x0{0.0, 0.0, 0.0};
};
SymmetryParams compose(const SymmetryParams& first, const SymmetryParams& second);

/// Monte Carlo sample of f0: radius by inverting m(r)/M, speed by rejection
/// against F at fixed radius, isotropic directions.  Equal weights M/N (the
/// last weight absorbs rounding so the sum equals M).  Each particle draws
/// from its own generator seeded by (seed, index).
ParticleEnsemble sample_particles(const EquilibriumModel& model, std::size_t N,
                                  std::uint64_t seed);

}  // namespace gravistab
