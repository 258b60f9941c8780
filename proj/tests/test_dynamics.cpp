#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "gravistab/dynamics.hpp"

using namespace gravistab;

namespace {
constexpr double kPi = std::numbers::pi;

const EquilibriumModel& king1() {
  static const EquilibriumModel m = build_equilibrium(AnsatzLaw::king(), 1.0, RadialGrid::uniform(2048, 200.0));
  return m;
}

ParticleEnsemble two_bodies() {
  ParticleEnsemble e;
  e.x = {{1.0, 0.0, 0.0}, {0.0, 2.0, 0.0}};
  e.v = {{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};
  e.w = {1.0, 3.0};
  return e;
}
}  // namespace

TEST_CASE("radial field of two shells") {
  const auto a = field_radial(two_bodies());
  // inner particle feels nothing, outer one feels the inner weight
  CHECK(a[0][0] == 0.0);
  CHECK(a[1][1] == doctest::Approx(-1.0 / (4.0 * kPi * 4.0)).epsilon(1e-15));
  CHECK(a[1][0] == 0.0);
}

TEST_CASE("radial field: equal radii share half weight and the origin feels nothing") {
  ParticleEnsemble e;
  e.x = {{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {0.0, -1.0, 0.0}};
  e.v.assign(3, {0.0, 0.0, 0.0});
  e.w = {2.0, 1.0, 3.0};
  const auto a = field_radial(e);
  CHECK(a[0] == Vec3{0.0, 0.0, 0.0});
  CHECK(a[1][0] == doctest::Approx(-(2.0 + 1.5) / (4.0 * kPi)).epsilon(1e-15));
  CHECK(a[2][1] == doctest::Approx((2.0 + 0.5) / (4.0 * kPi)).epsilon(1e-15));
}

TEST_CASE("radial field: serial, parallel and cached orders agree bitwise") {
  const ParticleEnsemble e = sample_particles(king1(), 5000, 11);
  const auto a = field_radial(e), b = field_radial_serial(e);
  CHECK(a == b);
  std::vector<std::size_t> order;
  const auto c = field_radial(e, order);
  CHECK(c == a);
  std::vector<std::size_t> reversed(order.rbegin(), order.rend());
  CHECK(field_radial(e, reversed) == a);
}

TEST_CASE("radial field matches the model field for a large sample") {
  const EquilibriumModel& m = king1();
  const ParticleEnsemble e = sample_particles(m, 100000, 5);
  const auto a = field_radial(e);
  double err = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < e.size(); i += 50) {
    const double r = std::sqrt(dot(e.x[i], e.x[i]));
    // shot noise of m(r) / r^2 dominates near the centre
    if (r < 0.2 * m.R) continue;
    const double ar = -dot(a[i], e.x[i]) / r;
    err = std::max(err, std::abs(ar - m.dphi(r)));
    scale = std::max(scale, m.dphi(r));
  }
  CHECK(err <= 0.02 * scale);
}

TEST_CASE("direct field of two bodies") {
  const double eps = 0.1;
  const auto a = field_direct(two_bodies(), eps);
  const double d2 = 5.0 + eps * eps;
  const double k = 1.0 / (4.0 * kPi * std::pow(d2, 1.5));
  CHECK(a[0][0] == doctest::Approx(-3.0 * k * 1.0).epsilon(1e-14));
  CHECK(a[0][1] == doctest::Approx(-3.0 * k * -2.0).epsilon(1e-14));
  CHECK(a[1][0] == doctest::Approx(-1.0 * k * -1.0).epsilon(1e-14));
  CHECK(a[1][1] == doctest::Approx(-1.0 * k * 2.0).epsilon(1e-14));
}

TEST_CASE("direct field: momentum balance, bitwise serial agreement and guards") {
  const EquilibriumModel& m = king1();
  const ParticleEnsemble e = sample_particles(m, 3000, 9);
  const double eps = default_softening(m, e.size());
  const auto a = field_direct(e, eps), b = field_direct_serial(e, eps);
  CHECK(a == b);
  Vec3 P{0.0, 0.0, 0.0};
  double scale = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i)
    for (int k = 0; k < 3; ++k) {
      P[k] += e.w[i] * a[i][k];
      scale += e.w[i] * std::abs(a[i][k]);
    }
  for (int k = 0; k < 3; ++k) CHECK(std::abs(P[k]) <= 1e-12 * scale);
  CHECK_THROWS_AS(field_direct(e, eps, 100), std::invalid_argument);
  CHECK_THROWS_AS(field_direct(e, 0.0), std::invalid_argument);
}

TEST_CASE("solver potential energy is consistent with the accelerations") {
  // the potential energy is -H_pot, so dH_pot/dx_i = w_i a_i
  const EquilibriumModel& m = king1();
  ParticleEnsemble e = sample_particles(m, 400, 2);
  Solver direct;
  direct.kind = SolverKind::direct;
  direct.eps = 0.3;
  Solver ext;
  ext.kind = SolverKind::external;
  ext.model = &m;
  for (const Solver* s : {&direct, &ext}) {
    const auto a = accelerations(e, *s);
    const std::size_t i = 17;
    const double h = 1e-6;
    for (int k = 0; k < 3; ++k) {
      ParticleEnsemble p = e, q = e;
      p.x[i][k] += h;
      q.x[i][k] -= h;
      const double dU = (solver_potential_energy(p, *s) - solver_potential_energy(q, *s)) / (2.0 * h);
      CHECK(dU == doctest::Approx(e.w[i] * a[i][k]).epsilon(1e-5));
    }
  }
}

TEST_CASE("circular orbit in the frozen model field") {
  const EquilibriumModel& m = king1();
  Solver s;
  s.kind = SolverKind::external;
  s.model = &m;
  const double rc = 0.5 * m.R, vc = std::sqrt(rc * m.dphi(rc));
  ParticleEnsemble e;
  e.x = {{rc, 0.0, 0.0}};
  e.v = {{0.0, vc, 0.0}};
  e.w = {1.0};
  const double P = 2.0 * kPi * rc / vc;
  std::vector<Vec3> acc = accelerations(e, s);
  double dev = 0.0;
  for (int n = 0; n < 10000 * 10; ++n) {
    step_leapfrog(e, s, P / 10000.0, acc);
    dev = std::max(dev, std::abs(std::sqrt(dot(e.x[0], e.x[0])) / rc - 1.0));
  }
  CHECK(dev <= 1e-6);
}

TEST_CASE("evolve: exact mass, record cadence and energy drift") {
  const EquilibriumModel& m = king1();
  const ParticleEnsemble e = sample_particles(m, 20000, 4);
  const double td = dynamical_time(m);
  CHECK(td == doctest::Approx(2.0 * kPi * std::sqrt(4.0 * kPi * std::pow(m.R, 3) / m.M)));
  Solver s;
  EvolveOptions o;
  o.cadence = 10;
  const EvolveResult r = evolve(e, s, td / 200.0, td, o);
  CHECK(r.steps == 200);
  CHECK(r.records.size() == 21);
  CHECK_FALSE(r.blew_up);
  const double H0 = r.records.front().H;
  for (const auto& d : r.records) {
    CHECK(d.mass == e.mass());
    CHECK(std::abs(d.H - H0) <= 1e-3 * std::abs(H0));
  }
  CHECK(r.records.back().t == doctest::Approx(td));
}

TEST_CASE("evolve flags blow-up and keeps the last good state") {
  const EquilibriumModel& m = king1();
  const ParticleEnsemble e = sample_particles(m, 2000, 4);
  Solver s;
  EvolveOptions o;
  o.cadence = 1;
  const EvolveResult r = evolve(e, s, 3.0 * dynamical_time(m), 30.0 * dynamical_time(m), o);
  CHECK(r.blew_up);
  CHECK_FALSE(r.reason.empty());
  for (const auto& x : r.final_state.x) CHECK(std::isfinite(x[0]));
}

TEST_CASE("recentering and perturbations") {
  const EquilibriumModel& m = king1();
  ParticleEnsemble e = sample_particles(m, 5000, 6);
  recenter(e);
  const Vec3 cm = center_of_mass(e);
  for (int k = 0; k < 3; ++k) CHECK(std::abs(cm[k]) < 1e-12 * m.R);
  const double vs = std::sqrt(m.M / (4.0 * kPi * m.R));

  ParticleEnsemble b = e;
  apply_perturbation(b, m, PerturbationKind::boost, 0.1);
  CHECK(b.v[7][2] == doctest::Approx(e.v[7][2] + 0.1 * vs));

  ParticleEnsemble sc = e;
  apply_perturbation(sc, m, PerturbationKind::scale, 0.01);
  CHECK(sc.mass() == doctest::Approx(1.01 * e.mass()).epsilon(1e-12));

  ParticleEnsemble k = e;
  apply_perturbation(k, m, PerturbationKind::kick_l2, 0.01);
  CHECK(k.v[3][2] - e.v[3][2] == doctest::Approx(0.01 * vs * 2.0 * e.x[3][2] / m.R));
  CHECK(k.v[3][0] - e.v[3][0] == doctest::Approx(-0.01 * vs * e.x[3][0] / m.R));

  ParticleEnsemble rv = e;
  apply_perturbation(rv, m, PerturbationKind::shell_reversal, 0.5);
  for (std::size_t i = 0; i < e.size(); ++i) {
    const bool outer = std::sqrt(dot(e.x[i], e.x[i])) > 0.5 * m.R;
    CHECK(rv.v[i][0] == (outer ? -e.v[i][0] : e.v[i][0]));
  }

  for (auto kind : {PerturbationKind::none, PerturbationKind::scale, PerturbationKind::boost,
                    PerturbationKind::shell_reversal, PerturbationKind::kick_l2})
    CHECK(parse_perturbation(perturbation_name(kind)) == kind);
  CHECK_THROWS(parse_perturbation("twist"));
}

TEST_CASE("leapfrog is time reversible") {
  const EquilibriumModel& m = king1();
  Solver s;
  s.kind = SolverKind::external;
  s.model = &m;
  const ParticleEnsemble e = sample_particles(m, 200, 8);
  ParticleEnsemble f = e;
  std::vector<Vec3> acc = accelerations(f, s);
  const double dt = dynamical_time(m) / 100.0;
  for (int n = 0; n < 100; ++n) step_leapfrog(f, s, dt, acc);
  for (auto& v : f.v)
    for (double& c : v) c = -c;
  for (int n = 0; n < 100; ++n) step_leapfrog(f, s, dt, acc);
  for (std::size_t i = 0; i < e.size(); ++i)
    for (int k = 0; k < 3; ++k) CHECK(std::abs(f.x[i][k] - e.x[i][k]) < 1e-9 * m.R);
}

TEST_CASE("stability experiment with no perturbation stays bounded") {
  const EquilibriumModel& m = king1();
  StabilityConfig c;
  c.N = 20000;
  c.T = 2.0 * dynamical_time(m);
  const StabilityResult r = stability_experiment(m, c);
  CHECK(r.bounded);
  CHECK_FALSE(r.blew_up);
  CHECK(r.proxies.hold);
  CHECK(r.proxies.l1 == 0.0);
  CHECK(r.times.size() == r.distance.size());
  CHECK(r.max_distance <= c.factor * r.initial_distance);
}
