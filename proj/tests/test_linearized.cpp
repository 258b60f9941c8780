#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "gravistab/linearized.hpp"
#include "gravistab/rearrangement.hpp"

using namespace gravistab;

namespace {
constexpr double kPi = std::numbers::pi;

const EquilibriumModel& poly1() {
  static const EquilibriumModel m =
      build_equilibrium(AnsatzLaw::polytrope(1.0), 1.0, RadialGrid::uniform(4096, 200.0));
  return m;
}
std::shared_ptr<const PhaseMesh> mesh() {
  static const auto p = make_phase_mesh(poly1());
  return p;
}
double depth(double r, double w) {
  const EquilibriumModel& m = poly1();
  return m.E0 - 0.5 * w * w - m.phi(r);
}
}  // namespace

TEST_CASE("mesh weights integrate the support volume and the mass") {
  const PhaseMesh& pm = *mesh();
  const EquilibriumModel& m = poly1();
  double vol = 0.0, mass = 0.0;
  for (std::size_t i = 0; i < pm.ns(); ++i)
    for (std::size_t j = 0; j < pm.nt(); ++j)
      for (std::size_t k = 0; k < pm.nc(); ++k) {
        vol += pm.weight(i, j, k);
        mass += pm.weight(i, j, k) * eval_F(m, pm.energy(i, j));
      }
  CHECK(vol == doctest::Approx(energy_volume(m.phi, m.E0)).epsilon(1e-6));
  CHECK(mass == doctest::Approx(m.M).epsilon(1e-6));
}

TEST_CASE("parity detection and the bracket with E") {
  auto odd = PerturbationField::from_function(mesh(), [](double r, double w, double c) {
    return std::max(depth(r, w), 0.0) * c * w;
  });
  auto even = PerturbationField::from_function(mesh(), [](double r, double w, double c) {
    return std::max(depth(r, w), 0.0) * (1.0 + c * c);
  });
  CHECK(odd.parity == Parity::odd);
  CHECK(even.parity == Parity::even);
  CHECK(bracket_with_E(odd).parity == Parity::even);
  CHECK(bracket_with_E(even).parity == Parity::odd);
  CHECK(dynamically_accessible(even).parity == Parity::odd);
  auto open = PerturbationField::from_function(mesh(), [](double, double, double c) { return c; });
  CHECK_THROWS_AS(dynamically_accessible(open), std::invalid_argument);
  CHECK_THROWS_AS(antonov_check(odd), std::invalid_argument);
}

TEST_CASE("density of the indicator of the support") {
  const EquilibriumModel& m = poly1();
  auto one = PerturbationField::from_function(mesh(), [](double, double, double) { return 1.0; });
  const auto rho = perturbation_density(one);
  const PhaseMesh& pm = *mesh();
  for (std::size_t i = 0; i < pm.ns(); i += 7) {
    const double u = m.E0 - m.phi(pm.r[i]);
    CHECK(rho[i] == doctest::Approx(4.0 * kPi / 3.0 * std::pow(2.0 * u, 1.5)).epsilon(1e-9));
  }
}

TEST_CASE("inner product is symmetric and the free energy is negative definite on odd fields") {
  auto a = PerturbationField::from_function(mesh(), [](double r, double w, double c) {
    return std::max(depth(r, w), 0.0) * c * (1.0 + r);
  });
  auto b = PerturbationField::from_function(mesh(), [](double r, double w, double c) {
    return std::max(depth(r, w), 0.0) * c * w * w;
  });
  CHECK(inner_product(a, b) == doctest::Approx(inner_product(b, a)).epsilon(1e-13));
  CHECK(inner_product(a, a) > 0.0);
  // odd fields carry no density, so F(h) = -int h^2 / F' > 0
  CHECK(free_energy(a) > 0.0);
  const auto rho = perturbation_density(a);
  for (double x : rho) CHECK(std::abs(x) < 1e-12);
}

TEST_CASE("antonov velocity identity") {
  const EquilibriumModel& m = poly1();
  for (double f : {0.1, 0.4, 0.7, 0.95})
    CHECK(antonov_velocity_identity(m, f * m.R) == doctest::Approx(m.rho(f * m.R)).epsilon(1e-6));
}

TEST_CASE("projection removes the constraint components") {
  auto h = PerturbationField::from_function(mesh(), [](double r, double w, double c) {
    return std::max(depth(r, w), 0.0) * (1.0 + r * c + w);
  });
  const auto cons = coercivity_constraints(mesh());
  CHECK(cons.size() == 4);
  const PerturbationField p = project_out(h, {cons[0]});
  CHECK(std::abs(inner_product(p, cons[0])) <= 1e-10 * std::sqrt(inner_product(h, h) * inner_product(cons[0], cons[0])));
  CHECK_THROWS_AS(project_out(h, {cons[0], cons[0]}), std::invalid_argument);
}

TEST_CASE("translation mode is in the kernel of M") {
  const EquilibriumModel& m = poly1();
  auto d1 = PerturbationField::from_function(
      mesh(), [&m](double r, double w, double) {
        return eval_Fprime(m, 0.5 * w * w + m.phi(r)) * m.dphi(r);
      },
      1, 0);
  const PerturbationField Mh = apply_M(d1);
  double phimax = 0.0;
  for (std::size_t i = 0; i < mesh()->ns(); ++i) phimax = std::max(phimax, std::abs(mesh()->dphi[i]));
  CHECK(Mh.max_abs() <= 1e-4 * phimax);
}

TEST_CASE("effective potential and the schrodinger kernel") {
  const EquilibriumModel& m = poly1();
  const RadialProfile V = effective_potential(m);
  for (double f : {0.2, 0.6, 0.9})
    CHECK(V(f * m.R) == doctest::Approx(m.law.density_derivative(m.depth(f * m.R))).epsilon(1e-8));
  CHECK(V(1.5 * m.R) == 0.0);
  const RadialProfile res = schrodinger_residual(m, {m.dphi, 1});
  double worst = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < res.grid().size(); ++i) {
    const double r = res.grid()[i];
    if (r >= 0.98 * m.R) break;
    worst = std::max(worst, std::abs(res.values()[i]));
    scale = std::max(scale, std::abs(V(r) * m.dphi(r)));
  }
  CHECK(worst <= 1e-4 * scale);
}

TEST_CASE("energy projection of constants and functions of E") {
  const EquilibriumModel& m = poly1();
  const EnergyFunction c = project_on_energy(m, [](double, double) { return 2.5; }, 64);
  const EnergyFunction e = project_on_energy(m, [](double, double E) { return E * E; }, 64);
  for (double t : {0.2, 0.5, 0.8}) {
    const double E = m.phi_c + t * (m.E0 - m.phi_c);
    CHECK(c(E) == doctest::Approx(2.5).epsilon(1e-10));
    CHECK(e(E) == doctest::Approx(E * E).epsilon(1e-6));
  }
}

TEST_CASE("reduced hessian: translation kernel and positivity on radial fields") {
  const EquilibriumModel& m = poly1();
  const double k = reduced_hessian({m.dphi, 1}, m);
  const RadialGrid& g = m.phi.grid();
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = 1.0 / (1.0 + g[i] * g[i]);
  const RadialProfile h(g, v, Extrapolation::inverse_r);
  const double radial = reduced_hessian({h, 0}, m);
  CHECK(radial > 0.0);
  double grad = integrate_radial_function(g, [&](double r) { return h.derivative(r) * h.derivative(r); });
  CHECK(std::abs(k) <= 1e-4 * grad);
}

TEST_CASE("linearized evolution conserves the free energy on a short run") {
  const EquilibriumModel& m = poly1();
  auto g = PerturbationField::from_function(mesh(), [](double r, double w, double c) {
    const double d = std::max(depth(r, w), 0.0);
    return d * d * (1.0 + 0.3 * r + 0.2 * w * c);
  });
  const PerturbationField h = dynamically_accessible(g);
  const double tdyn = 2.0 * kPi * std::sqrt(4.0 * kPi * std::pow(m.R, 3) / m.M);
  const LinearizedRun run = evolve_linearized(h, tdyn / 400.0, 0.5 * tdyn, 20, 10, 32);
  const double F0 = run.free_energy.front();
  double drift = 0.0;
  for (double F : run.free_energy) drift = std::max(drift, std::abs(F - F0) / std::abs(F0));
  CHECK(drift <= 1e-3);
  CHECK_THROWS_AS(evolve_linearized(h, 10.0 * tdyn, tdyn), std::invalid_argument);
}
