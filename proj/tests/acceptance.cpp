/// Acceptance run: one PASS/FAIL line per criterion.  Pass criterion numbers
/// as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "checks.hpp"
#include "gravistab/dynamics.hpp"
#include "gravistab/linearized.hpp"
#include "gravistab/rearrangement.hpp"

using namespace gravistab;

namespace {

constexpr double kPi = std::numbers::pi;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RadialGrid build_grid() { return RadialGrid::uniform(4096, 200.0); }

const EquilibriumModel& king() {
  static const EquilibriumModel m = build_equilibrium(AnsatzLaw::king(), 1.0, build_grid());
  return m;
}

const EquilibriumModel& poly1() {
  static const EquilibriumModel m = build_equilibrium(AnsatzLaw::polytrope(1.0), 1.0, build_grid());
  return m;
}

double max_relative_drift(const std::vector<DiagnosticsRecord>& records) {
  const double H0 = records.front().H;
  double d = 0.0;
  for (const auto& r : records) d = std::max(d, std::abs(r.H - H0) / std::abs(H0));
  return d;
}

// ---------------------------------------------------------------------------

bool criterion1() {
  struct Case {
    std::string name;
    AnsatzLaw law;
  };
  const std::vector<Case> cases{{"king u_c=1", AnsatzLaw::king()},
                                {"polytrope n=0.5", AnsatzLaw::polytrope(0.5)},
                                {"polytrope n=1", AnsatzLaw::polytrope(1.0)},
                                {"polytrope n=2", AnsatzLaw::polytrope(2.0)},
                                {"polytrope n=3", AnsatzLaw::polytrope(3.0)}};
  bool pass = true;
  for (const Case& c : cases) {
    const auto t0 = std::chrono::steady_clock::now();
    const EquilibriumModel m = build_equilibrium(c.law, 1.0, build_grid());
    const ResidualReport r = equilibrium_residuals(m);
    const double secs = seconds_since(t0);
    const double bulk = std::max(r.self_consistency, r.poisson);
    const bool ok = bulk <= 1e-6 && r.edge <= 1e-4 && secs < 10.0;
    std::printf("  %-16s bulk %.3g  edge %.3g  M %.6g  R %.6g  %.2fs\n", c.name.c_str(), bulk, r.edge,
                m.M, m.R, secs);
    pass = pass && ok;
  }
  return pass;
}

bool criterion2() {
  const double n = 3.5, uc = 1.0;
  const double a = 1.0 / std::sqrt(polytrope_density_constant(n, 1.0) * std::pow(uc, 4.0));
  try {
    build_equilibrium(AnsatzLaw::polytrope(n), uc, build_grid());
  } catch (const NonCompactSupport& e) {
    double err = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < e.radii().size(); ++i) {
      const double xi = e.radii()[i] / a;
      if (xi > 10.0) break;
      err = std::max(err, std::abs(e.depth()[i] / uc - 1.0 / std::sqrt(1.0 + xi * xi / 3.0)));
      ++used;
    }
    std::printf("  sup |theta - (1 + xi^2/3)^(-1/2)| on [0, 10] = %.3g (%zu nodes)\n", err, used);
    return err <= 1e-6 && used > 100;
  }
  std::printf("  n = 7/2 unexpectedly produced a compact model\n");
  return false;
}

bool criterion3() {
  const RadialGrid g = RadialGrid::uniform(1025, 1.0);
  const PoissonSolution s = solve_radial_poisson(RadialProfile(g, std::vector<double>(g.size(), 1.0)));
  const double e_phi0 = std::abs(s.phi(0.0) + 0.5);
  double e_dphi = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) e_dphi = std::max(e_dphi, std::abs(s.dphi(g[i]) - g[i] / 3.0));
  const double e_pot = std::abs(s.H_pot - 4.0 * kPi / 15.0);
  std::printf("  |phi(0) + 1/2| %.3g  max|phi' - r/3| %.3g  |H_pot - 4pi/15| %.3g\n", e_phi0, e_dphi, e_pot);
  return e_phi0 <= 1e-8 && e_dphi <= 1e-8 && e_pot <= 1e-8;
}

bool criterion4() {
  const checks::CheckResult r = checks::inequalities(king(), 4, 100);
  std::printf("  min rhs/lhs %.4g  max invariance error %.3g\n", r.report["min_ratio"].get<double>(),
              r.report["max_invariance"].get<double>());
  return r.pass;
}

bool criterion5() {
  bool pass = true;
  for (const auto& [name, m] : {std::pair{"king", &king()}, std::pair{"polytrope n=1", &poly1()}}) {
    const checks::CheckResult r = checks::antonov(*m, 5, 50);
    double margin = std::numeric_limits<double>::infinity(), id = 0.0;
    for (const auto& c : r.report["cases"])
      margin = std::min(margin, (c["lhs"].get<double>() - c["rhs"].get<double>()) / std::abs(c["lhs"].get<double>()));
    for (const auto& c : r.report["identity"]) id = std::max(id, c["error"].get<double>());
    std::printf("  %-14s min (lhs - rhs)/|lhs| %.3g  identity error %.3g  %s\n", name, margin, id,
                r.pass ? "ok" : "violated");
    pass = pass && r.pass;
  }
  return pass;
}

bool criterion6() {
  bool pass = true;
  for (const auto& [name, m] : {std::pair{"king", &king()}, std::pair{"polytrope n=1", &poly1()}}) {
    const checks::CheckResult k = checks::kernel(*m);
    for (const auto& c : k.report["cases"])
      std::printf("  %-14s %-14s %.3g\n", name, c["form"].get<std::string>().c_str(), c["value"].get<double>());
    const checks::CheckResult c = checks::coercivity(*m, 6, 50, 20);
    double probe = std::numeric_limits<double>::infinity(), radial = probe;
    for (const auto& e : c.report["cases"]) {
      const double v = e["value"].get<double>() / std::max(e["tolerance"].get<double>(), 1e-300);
      if (e["form"] == "radial D2J") radial = std::min(radial, e["value"].get<double>());
      else probe = std::min(probe, v);
    }
    std::printf("  %-14s min <Mh,h>/tol %.3g  min radial D2J %.3g\n", name, probe, radial);
    pass = pass && k.pass && c.pass;
  }
  return pass;
}

bool criterion7() {
  bool pass = true;
  for (const auto& [name, m] : {std::pair{"king", &king()}, std::pair{"polytrope n=1", &poly1()}}) {
    const checks::CheckResult r = checks::rearrangement(*m, 7, 50, 20);
    const auto& fp = r.report["fixed_point"];
    const auto& ball = r.report["ball_volume"];
    int lemma_bad = 0, chain_bad = 0;
    for (const auto& c : r.report["energy_lemma"]) lemma_bad += c["verdict"] != "pass";
    for (const auto& c : r.report["monotonicity_chain"]) chain_bad += c["verdict"] != "pass";
    std::printf("  %-14s fixed-point L1 %.3g (bound %.3g)  lemma failures %d  chain failures %d  "
                "mu(-1/3) error %.3g\n",
                name, fp["l1"].get<double>(), fp["oscillation_bound"].get<double>(), lemma_bad, chain_bad,
                std::abs(ball["value"].get<double>() - ball["exact"].get<double>()));
    pass = pass && r.pass;
  }
  return pass;
}

bool criterion8() {
  const EquilibriumModel& m = king();
  const double td = dynamical_time(m);
  const std::size_t N = 100000;
  const ParticleEnsemble e = sample_particles(m, N, 42);
  const PhaseGrid coarse = coarse_phase_grid(m);

  const auto t0 = std::chrono::steady_clock::now();
  Solver radial;
  EvolveOptions o;
  o.cadence = 200;
  const EvolveResult run = evolve(e, radial, td / 200.0, 20.0 * td, o);
  const double secs = seconds_since(t0);
  const double drift = max_relative_drift(run.records);
  bool mass_exact = true;
  for (const auto& r : run.records) mass_exact = mass_exact && r.mass == e.mass();
  mass_exact = mass_exact && run.final_state.mass() == e.mass();
  std::printf("  radial N=%zu, 20 t_dyn, dt = t_dyn/200: max |dH/H| %.3g, %zu steps, %.1fs%s\n", N, drift,
              run.steps, secs, run.blew_up ? " (blew up)" : "");
  std::printf("  mass exact at every record: %s\n", mass_exact ? "yes" : "no");

  // Level-profile drift against the spread between independent samples.
  const GriddedF before = bin_ensemble(e, coarse), after = bin_ensemble(run.final_state, coarse);
  const double lp_drift = level_profile_distance(before, after);
  double noise = 0.0;
  for (std::uint64_t s = 0; s < 3; ++s) {
    const ParticleEnsemble a = sample_particles(m, N, 1000 + 2 * s), b = sample_particles(m, N, 1001 + 2 * s);
    noise = std::max(noise, level_profile_distance(bin_ensemble(a, coarse), bin_ensemble(b, coarse)));
  }
  std::printf("  level-profile drift %.4g, two-sample noise %.4g\n", lp_drift, noise);

  // Convergence order with the frozen model field in the asymptotic window.
  auto drift_at = [&](const Solver& s, double div) {
    EvolveOptions c;
    c.cadence = 1;
    return max_relative_drift(evolve(e, s, td / div, 0.25 * td, c).records);
  };
  Solver frozen;
  frozen.kind = SolverKind::external;
  frozen.model = &m;
  const std::array<double, 3> divs{800.0, 1600.0, 3200.0};
  std::array<double, 3> df{}, dr{};
  for (int k = 0; k < 3; ++k) {
    df[k] = drift_at(frozen, divs[k]);
    dr[k] = drift_at(radial, divs[k]);
  }
  bool order_ok = true;
  for (int k = 0; k < 2; ++k) {
    const double p = std::log2(df[k] / df[k + 1]);
    order_ok = order_ok && std::abs(p - 2.0) <= 0.2;
    std::printf("  order, frozen field, t_dyn/%g -> t_dyn/%g: %.3f\n", divs[k], divs[k + 1], p);
  }
  for (int k = 0; k < 2; ++k)
    std::printf("  order, radial self-field (information), t_dyn/%g -> t_dyn/%g: %.3f\n", divs[k], divs[k + 1],
                std::log2(dr[k] / dr[k + 1]));
  return drift <= 1e-3 && !run.blew_up && mass_exact && lp_drift <= noise && order_ok && secs < 300.0;
}

bool criterion9() {
  const EquilibriumModel& m = king();
  const double td = dynamical_time(m);
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;

  auto report = [&](const char* label, const StabilityResult& r) {
    std::printf("  %-26s distance init %.4g max %.4g (ratio %.3g)  proxies l1 %.3g dH %.3g hold %s%s\n", label,
                r.initial_distance, r.max_distance, r.max_distance / r.initial_distance, r.proxies.l1,
                r.proxies.dH, r.proxies.hold ? "yes" : "no", r.blew_up ? "  blew up" : "");
    pass = pass && r.bounded && !r.blew_up;
  };

  StabilityConfig scale;
  scale.kind = PerturbationKind::scale;
  scale.eta = 0.01;
  scale.N = 100000;
  scale.T = 20.0 * td;
  report("scale eta=0.01 radial", stability_experiment(m, scale));

  const std::size_t n_direct = 2000;
  StabilityConfig kick;
  kick.kind = PerturbationKind::kick_l2;
  kick.eta = 0.01;
  kick.N = n_direct;
  kick.T = 20.0 * td;
  kick.solver.kind = SolverKind::direct;
  kick.solver.eps = m.R / std::cbrt(double(n_direct));
  report("l=2 kick eta=0.01 direct", stability_experiment(m, kick));

  StabilityConfig boost = kick;
  boost.kind = PerturbationKind::boost;
  boost.eta = 0.1;
  const StabilityResult b = stability_experiment(m, boost);
  report("boost eta=0.1 direct", b);
  double track = 0.0;
  for (std::size_t k = 0; k < b.times.size(); ++k)
    for (int c = 0; c < 3; ++c) track = std::max(track, std::abs(b.records[k].cm[c] - b.boost[c] * b.times[k]));
  std::printf("  boost: max |z(t) - v0 t| %.3g with |v0| %.4g\n", track, std::sqrt(dot(b.boost, b.boost)));
  pass = pass && track <= 1e-6;

  const double secs = seconds_since(t0);
  std::printf("  total %.1fs\n", secs);
  return pass && secs < 900.0;
}

bool criterion10() {
  const EquilibriumModel& m = poly1();
  const auto mesh = make_phase_mesh(m);
  const PerturbationField h0 = PerturbationField::from_function(mesh, [&m](double r, double w, double c) {
    const double E = 0.5 * w * w + m.phi(r);
    return r * w * c * (1.0 + r / m.R) * std::max(0.0, m.E0 - E);
  });
  const double td = dynamical_time(m);
  const auto t0 = std::chrono::steady_clock::now();
  const LinearizedRun probe = evolve_linearized(h0, td / 100.0, 0.0);
  const double dt = std::min(td / 100.0, 0.1 * probe.min_radial_period);
  const LinearizedRun run = evolve_linearized(h0, dt, 10.0 * td);
  const double F0 = run.free_energy.front();
  double drift = 0.0;
  for (double F : run.free_energy) drift = std::max(drift, std::abs(F - F0) / std::abs(F0));
  std::printf("  parity %s, F(h0) %.6g, max relative drift %.3g over 10 t_dyn, %zu markers, %.1fs\n",
              h0.parity == Parity::odd ? "odd" : "not odd", F0, drift, run.markers, seconds_since(t0));
  return drift <= 1e-3 && h0.parity == Parity::odd;
}

}  // namespace

int main(int argc, char** argv) {
  std::setvbuf(stdout, nullptr, _IONBF, 0);
  const std::vector<std::pair<const char*, std::function<bool()>>> criteria{
      {"equilibrium self-consistency", criterion1},
      {"Lane-Emden closed form", criterion2},
      {"uniform-ball Poisson oracle", criterion3},
      {"interpolation inequality", criterion4},
      {"Antonov coercivity", criterion5},
      {"kernel and coercivity suite", criterion6},
      {"rearrangement suite", criterion7},
      {"conservation in evolution", criterion8},
      {"orbital stability demonstration", criterion9},
      {"linearized free-energy conservation", criterion10},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = int(k) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    bool ok = false;
    try {
      ok = criteria[k].second();
    } catch (const std::exception& e) {
      std::printf("  exception: %s\n", e.what());
    }
    std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, criteria[k].first);
    failed += !ok;
  }
  return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
