#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "gravistab/functionals.hpp"

using namespace gravistab;

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

const EquilibriumModel& king1() {
  static const EquilibriumModel m = build_equilibrium(AnsatzLaw::king(), 1.0, RadialGrid::uniform(2048, 200.0));
  return m;
}

/// Closed-form quantities of h 1{|x| < a} 1{b1 < |v| < b2}.
struct BoxOracle {
  double mass, H_cin, H_pot, vol;
  BoxOracle(double h, double a, double b1, double b2) {
    const double vx = 4.0 * kPi / 3.0 * a * a * a;
    const double vv = 4.0 * kPi / 3.0 * (b2 * b2 * b2 - b1 * b1 * b1);
    vol = vx * vv;
    mass = h * vol;
    H_cin = h * vx * 4.0 * kPi * (std::pow(b2, 5) - std::pow(b1, 5)) / 10.0;
    const double rho = h * vv;
    H_pot = rho * rho * 4.0 * kPi / 15.0 * std::pow(a, 5);
  }
};
}  // namespace

TEST_CASE("box distribution energies and norms") {
  const double h = 0.7, a = 1.3, b1 = 0.4, b2 = 1.1;
  const BoxOracle o(h, a, b1, b2);
  const GriddedF f = box_distribution(h, a, b1, b2);
  const EnergyReport r = energy_report(f);
  CHECK(r.mass == doctest::Approx(o.mass).epsilon(1e-12));
  CHECK(r.H_cin == doctest::Approx(o.H_cin).epsilon(1e-12));
  CHECK(r.H_pot == doctest::Approx(o.H_pot).epsilon(1e-12));
  CHECK(r.H == doctest::Approx(o.H_cin - o.H_pot).epsilon(1e-12));
  CHECK(lp_norm(f, 2.0) == doctest::Approx(h * std::sqrt(o.vol)).epsilon(1e-12));
  CHECK(lp_norm(f, 3.0) == doctest::Approx(h * std::cbrt(o.vol)).epsilon(1e-12));
  CHECK(lp_norm(f, kInf) == doctest::Approx(h));
  CHECK(casimir(f, [](double x) { return x * x; }) == doctest::Approx(h * h * o.vol).epsilon(1e-12));
  CHECK_THROWS(casimir(f, [](double x) { return x + 1.0; }));
}

TEST_CASE("shell field of a uniform ball") {
  const ShellField s = shell_field({0.0, 0.5, 1.0}, {1.0, 1.0});
  CHECK(s.M == doctest::Approx(4.0 * kPi / 3.0));
  CHECK(s.phi(0.0) == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(s.phi(0.3) == doctest::Approx(0.09 / 6.0 - 0.5).epsilon(1e-14));
  CHECK(s.dphi(0.7) == doctest::Approx(0.7 / 3.0).epsilon(1e-14));
  CHECK(s.phi(2.0) == doctest::Approx(-1.0 / 6.0).epsilon(1e-14));
  CHECK(s.gradient_norm2() == doctest::Approx(8.0 * kPi / 15.0).epsilon(1e-13));
  CHECK(gradient_inner(s, s) == doctest::Approx(s.gradient_norm2()).epsilon(1e-13));
  // shell average over [0.5, 1] of r^2/6 - 1/2: int r^4/6 / int r^2 = (3/30)(1 - 1/32)/(1 - 1/8)
  const double avg = (3.0 / 30.0) * (1.0 - 1.0 / 32.0) / (1.0 - 1.0 / 8.0) - 0.5;
  CHECK(s.shell_average_phi(1) == doctest::Approx(avg).epsilon(1e-13));
}

TEST_CASE("point shell pair energy") {
  ParticleEnsemble e;
  e.x = {{1.0, 0.0, 0.0}, {0.0, 2.0, 0.0}, {0.0, 0.0, 2.0}};
  e.v.assign(3, {0.0, 0.0, 0.0});
  e.w = {1.0, 2.0, 3.0};
  // pairs: (1,2) 2/(4 pi 2), (1,3) 3/(4 pi 2), (2,3) 6/(4 pi 2)
  const double expect = (2.0 + 3.0 + 6.0) / (8.0 * kPi);
  CHECK(shell_potential_energy(e) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(shell_potential_energy(e, {0.0, 0.0, 0.0}) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("analytic view reproduces model energies") {
  const EquilibriumModel& m = king1();
  const ModelEnergies me = model_energies(m);
  const EnergyReport r = energy_report(AnalyticF{&m});
  CHECK(r.mass == doctest::Approx(me.mass).epsilon(1e-6));
  CHECK(r.H_cin == doctest::Approx(me.H_cin).epsilon(1e-6));
  CHECK(r.H_pot == doctest::Approx(me.H_pot).epsilon(1e-6));
  CHECK(casimir(AnalyticF{&m}, [](double f) { return f; }) == doctest::Approx(me.mass).epsilon(1e-6));
}

TEST_CASE("binned model conserves mass and has small binning bound") {
  const EquilibriumModel& m = king1();
  const PhaseGrid g = default_phase_grid(m);
  CHECK_NOTHROW(g.validate());
  const GriddedF f = bin_model(m, g);
  double mass = 0.0;
  for (std::size_t ir = 0; ir < g.nr(); ++ir)
    for (std::size_t iw = 0; iw < g.nw(); ++iw)
      for (std::size_t ic = 0; ic < g.nc(); ++ic) mass += f.values[g.index(ir, iw, ic)] * g.volume(ir, iw, ic);
  // cells cut by the edge E = E0 limit the cell quadrature
  CHECK(mass == doctest::Approx(m.M).epsilon(1e-5));
  const double osc = binning_oscillation(m, g);
  CHECK(osc > 0.0);
  CHECK(osc < m.M);
}

TEST_CASE("phase grid volumes") {
  const PhaseGrid g = PhaseGrid::uniform(4, 3, 2, 2.0, 1.5);
  double total = 0.0;
  for (std::size_t ir = 0; ir < g.nr(); ++ir)
    for (std::size_t iw = 0; iw < g.nw(); ++iw)
      for (std::size_t ic = 0; ic < g.nc(); ++ic) total += g.volume(ir, iw, ic);
  const double expect = (4.0 * kPi / 3.0 * 8.0) * (4.0 * kPi / 3.0 * 3.375);
  CHECK(total == doctest::Approx(expect).epsilon(1e-13));
  CHECK(g.shell_volume(0) == doctest::Approx(4.0 * kPi / 3.0 * 0.125));
  // mean of w^2/2 over [0, 0.5] with weight w^2: (1/2) (3/5) 0.25
  CHECK(g.mean_half_w2(0) == doctest::Approx(0.075));
  PhaseGrid bad = g;
  bad.c_edges = {-1.0, 0.5};
  CHECK_THROWS(bad.validate());
}

TEST_CASE("interpolation inequality sides and exponent guards") {
  const GriddedF f = box_distribution(1.0, 1.0, 0.0, 1.0);
  CHECK_THROWS_AS(interpolation_check(f, 1.2), std::domain_error);
  CHECK_NOTHROW(interpolation_check(f, 1.2, false));
  CHECK_THROWS(interpolation_check(f, 1.0, false));
  const InterpolationSides s = interpolation_check(f, 2.0);
  CHECK(s.lhs_rho > 0.0);
  CHECK(s.rhs_factor > 0.0);
  CHECK(s.pot_lhs == doctest::Approx(energy_report(f).H_pot));
  // ||rho||_q with q = 7/5 for a uniform ball of density rho0 = 4 pi / 3
  const double rho0 = 4.0 * kPi / 3.0, V = 4.0 * kPi / 3.0;
  CHECK(s.lhs_rho == doctest::Approx(rho0 * std::pow(V, 5.0 / 7.0)).epsilon(1e-12));
}

TEST_CASE("gridded symmetry transform scales mass and L^p norms") {
  const GriddedF f = box_distribution(0.5, 1.0, 0.2, 0.9);
  const double g = 1.4, l = 0.7, mu = 1.2;
  const GriddedF t = symmetry_transform(f, g, l, mu, {0.3, 0.0, 0.0});
  const EnergyReport a = energy_report(f), b = energy_report(t);
  CHECK(b.mass == doctest::Approx(g * std::pow(l / mu, 3) * a.mass).epsilon(1e-12));
  CHECK(b.H_cin == doctest::Approx(g * std::pow(l, 3) * std::pow(mu, -5) * a.H_cin).epsilon(1e-12));
  CHECK(b.H_pot == doctest::Approx(g * g * std::pow(l, 5) * std::pow(mu, -6) * a.H_pot).epsilon(1e-12));
  CHECK(t.center[0] == doctest::Approx(0.3));
}

TEST_CASE("sampled model: distance, shift and undersampling guard") {
  const EquilibriumModel& m = king1();
  ParticleEnsemble e = sample_particles(m, 50000, 3);
  CHECK(stability_distance(AnalyticF{&m}, m) <= 1e-6);
  const Vec3 shift{0.2, -0.1, 0.05};
  for (auto& x : e.x)
    for (int k = 0; k < 3; ++k) x[k] += shift[k];
  const Vec3 z = estimate_shift(e);
  for (int k = 0; k < 3; ++k) CHECK(std::abs(z[k] - shift[k]) < 0.05);
  const PhaseGrid g = default_phase_grid(m);
  const double right = weighted_shift_distance(e, m, shift, g);
  const double wrong = weighted_shift_distance(e, m, {0.0, 0.0, 0.0}, g);
  CHECK(right < wrong);
  ParticleEnsemble small = sample_particles(m, 50, 3);
  CHECK_THROWS_AS(estimate_shift(small), std::invalid_argument);
}
