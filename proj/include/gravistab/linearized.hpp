#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "gravistab/equilibria.hpp"
#include "gravistab/radial_numerics.hpp"

namespace gravistab {

/// Tensor Gauss-Legendre mesh over the support K = {E < E0} of a model in
/// the coordinates (s, theta, c):
///   r = R (1 - (1 - s)^2),  |v| = sqrt(2 u(r)) sin(theta),  c = x.v / (|x||v|),
/// with u = E0 - phi, so that E0 - E = u cos^2(theta).  Derivatives and
/// integrals are spectral (Lagrange interpolation on the nodes).
struct PhaseMesh {
  const EquilibriumModel* model = nullptr;
  std::vector<double> s, ws;          ///< nodes and weights on [0, 1]
  std::vector<double> r, dr_ds;       ///< radius and dr/ds at s nodes
  std::vector<double> u, dphi, phi;   ///< depth, phi' and phi at s nodes
  std::vector<double> theta, wtheta;  ///< nodes and weights on [0, pi/2]
  std::vector<double> c, wc;          ///< nodes and weights on [-1, 1]
  std::vector<double> Ds, Dtheta, Dc; ///< row-major differentiation matrices
  std::vector<double> Scum;           ///< Scum[k][j] = int_0^{s_k} l_j(s) ds
  std::vector<double> lam_s, lam_t, lam_c;  ///< barycentric weights

  std::size_t ns() const { return s.size(); }
  std::size_t nt() const { return theta.size(); }
  std::size_t nc() const { return c.size(); }
  std::size_t size() const { return ns() * nt() * nc(); }
  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
    return (i * nt() + j) * nc() + k;
  }
  /// Speed at node (i, j).
  double speed(std::size_t i, std::size_t j) const;
  /// Energy at node (i, j).
  double energy(std::size_t i, std::size_t j) const;
  /// Quadrature weight of dx dv at node (i, j, k).
  double weight(std::size_t i, std::size_t j, std::size_t k) const;
  /// Weight of the velocity integral int dv at (i, j, k) for fixed r_i.
  double velocity_weight(std::size_t i, std::size_t j, std::size_t k) const;
};

std::shared_ptr<const PhaseMesh> make_phase_mesh(const EquilibriumModel& model, std::size_t n_s = 64,
                                                 std::size_t n_theta = 32, std::size_t n_c = 8);

/// Parity of a field under v -> -v, i.e. c -> -c.
enum class Parity { even, odd, none };

/// Perturbation h(x, v) = a(r, |v|, c) Y(x) on the support of a model, with
/// Y = 1 (ell = 0) or Y = x1/|x| (ell = 1).  Values are a at the mesh nodes.
struct PerturbationField {
  std::shared_ptr<const PhaseMesh> mesh;
  std::vector<double> values;
  Parity parity = Parity::none;
  int ell = 0;
  int axis = 0;                  ///< axis index of Y = x_axis/|x| when ell = 1
  bool support_flag = false;     ///< a vanishes for E >= E0 (boundary included)
  bool inside_support = true;    ///< a vanishes for E > E0

  /// Samples a(r, w, c) on the mesh and detects parity and support flags.
  static PerturbationField from_function(std::shared_ptr<const PhaseMesh> mesh,
                                         const std::function<double(double, double, double)>& a,
                                         int ell = 0, int axis = 0);
  /// Wraps nodal values; parity is detected from the values.
  static PerturbationField from_values(std::shared_ptr<const PhaseMesh> mesh,
                                       std::vector<double> values, int ell, bool support_flag,
                                       bool inside_support = true, int axis = 0);

  /// Spectral interpolation of a at an interior point (r < R, E < E0).
  double evaluate(double r, double w, double c) const;
  /// max |a| over the nodes.
  double max_abs() const;
};

/// Parity detected from values with relative tolerance 1e-12.
Parity detect_parity(const PhaseMesh& mesh, const std::vector<double>& values);

/// Radial perturbation u(r) Y_ell of a potential; u(0) = 0 for ell >= 1.
struct SpatialPerturbation {
  RadialProfile u;
  int ell = 0;
};

/// {g, E} for a spherically symmetric field (ell = 0).  Flips parity.
PerturbationField bracket_with_E(const PerturbationField& g);
/// h = {g, f0} = F'(E) {g, E}.  Throws std::invalid_argument("inaccessible support")
/// unless g vanishes for E >= E0.
PerturbationField dynamically_accessible(const PerturbationField& g);

/// rho_h(r) = int a dv at the s nodes.
std::vector<double> perturbation_density(const PerturbationField& h);
/// Potential of h at the s nodes (the radial factor for ell = 1).
std::vector<double> perturbation_potential(const PerturbationField& h);
/// int h g dx dv including the angular factor (1/3 for ell = 1).
double inner_product(const PerturbationField& h, const PerturbationField& g);

/// F(h) = -int h^2 / F'(E) - int |grad phi_h|^2.  Throws
/// std::invalid_argument("support violation") if h lives outside K.
double free_energy(const PerturbationField& h);

/// Both sides of the Antonov bound for h = (x.v) q with q even in v.
/// Throws std::invalid_argument("parity") if q is not even.
struct AntonovSides {
  double lhs = 0.0;  ///< F({h, f0})
  double rhs = 0.0;  ///< int |F'| [ (x.v)^2 {q, E}^2 + (phi'/r) h^2 ]
};
AntonovSides antonov_check(const PerturbationField& q);

/// -int ((x.v)/|x|)^2 F'(E) dv at radius r, which equals rho(r).
double antonov_velocity_identity(const EquilibriumModel& model, double r);

/// M h = -h / F'(E) + phi_h on K.
PerturbationField apply_M(const PerturbationField& h);

/// Subtracts from h its L2 projection on span(constraints).  Throws
/// std::invalid_argument("constraint collinearity") for a singular Gram matrix.
PerturbationField project_out(const PerturbationField& h,
                              const std::vector<PerturbationField>& constraints);
/// The constraint representers E 1_K and x_i 1_K (i = 1, 2, 3) on a mesh.
std::vector<PerturbationField> coercivity_constraints(std::shared_ptr<const PhaseMesh> mesh);
/// <M h_Z, h_Z> with h_Z the projection of h on {int h E = 0, int x_i h = 0}.
double constrained_coercivity_probe(const PerturbationField& h);

/// V(r) = -int F'(E) dv on the model grid, zero beyond R.
RadialProfile effective_potential(const EquilibriumModel& model);

/// u'' + (2/r) u' - ell(ell+1) u / r^2 + V u on the model grid by
/// five-point finite differences.
RadialProfile schrodinger_residual(const EquilibriumModel& model, const SpatialPerturbation& sp);

/// Function of E sampled on increasing energies with cubic interpolation.
struct EnergyFunction {
  std::vector<double> E;
  std::vector<double> values;
  std::vector<double> slopes;  ///< Hermite slopes; linear interpolation when empty
  double operator()(double e) const;
};

/// (P g)(E) = int_{phi < E} (E - phi)^{1/2} g dx / int_{phi < E} (E - phi)^{1/2} dx
/// for g(r, E) on n energies in (phi_c, E0).
EnergyFunction project_on_energy(const EquilibriumModel& model,
                                 const std::function<double(double, double)>& g,
                                 std::size_t n = 256);
/// P h for a radial h (ell = 0).
EnergyFunction projection_P(const SpatialPerturbation& h, const EquilibriumModel& model,
                            std::size_t n = 256);

/// D^2 J(phi_0)(h, h) = int |grad h|^2 - int int |F'(E)| (h - P h)^2 (P h = 0 for ell >= 1).
/// The angular factor Y has mean square 1/3 for ell >= 1.  The exterior of
/// the profile follows its extrapolation tag.
double reduced_hessian(const SpatialPerturbation& h, const EquilibriumModel& model);

/// Result of a linearized run.
struct LinearizedRun {
  std::vector<double> times;
  std::vector<double> free_energy;
  std::size_t markers = 0;
  double min_radial_period = 0.0;
};

/// Advances a spherically symmetric h along the steady characteristics with
/// markers on an (E, L) grid of orbits and equally spaced radial phases.
/// Phases advance exactly; the source F'(E) (x.v / |x|) phi_h'(r) is
/// integrated with RK4.  Throws std::invalid_argument with a suggested step
/// if dt exceeds a tenth of the shortest radial period.
LinearizedRun evolve_linearized(const PerturbationField& h0, double dt, double T,
                                std::size_t n_E = 40, std::size_t n_L = 20, std::size_t n_phase = 64);

}  // namespace gravistab
