#include "gravistab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace gravistab {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> radii(const ParticleEnsemble& e, bool parallel) {
  const std::size_t N = e.size();
  std::vector<double> r(N);
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < N; ++i) r[i] = std::sqrt(dot(e.x[i], e.x[i]));
  } else {
    for (std::size_t i = 0; i < N; ++i) r[i] = std::sqrt(dot(e.x[i], e.x[i]));
  }
  return r;
}

/// Sorts `order` by (r, index).  A permutation of the right size is reused
/// as the starting point, which keeps the sort cheap between nearby states.
void sort_by_radius(const std::vector<double>& r, std::vector<std::size_t>& order) {
  const std::size_t N = r.size();
  if (order.size() != N) {
    order.resize(N);
    std::iota(order.begin(), order.end(), std::size_t(0));
  }
  std::vector<std::pair<double, std::size_t>> keys(N);
  for (std::size_t k = 0; k < N; ++k) keys[k] = {r[order[k]], order[k]};
  std::sort(keys.begin(), keys.end());
  for (std::size_t k = 0; k < N; ++k) order[k] = keys[k].second;
}

/// Effective enclosed mass per particle: strictly inside plus half of the
/// other weights at the same radius.
std::vector<double> enclosed_mass(const ParticleEnsemble& e, const std::vector<double>& r,
                                  std::vector<std::size_t>& order) {
  const std::size_t N = e.size();
  sort_by_radius(r, order);
  std::vector<double> m(N);
  double before = 0.0;
  std::size_t k = 0;
  while (k < N) {
    std::size_t j = k;
    double group = 0.0;
    while (j < N && r[order[j]] == r[order[k]]) group += e.w[order[j++]];
    for (std::size_t q = k; q < j; ++q) m[order[q]] = before + 0.5 * (group - e.w[order[q]]);
    before += group;
    k = j;
  }
  return m;
}

void radial_acceleration(const ParticleEnsemble& e, const std::vector<double>& r,
                         const std::vector<double>& m, std::size_t i, Vec3& a) {
  if (r[i] == 0.0) {
    a = {0.0, 0.0, 0.0};
    return;
  }
  const double s = -m[i] / (4.0 * kPi * r[i] * r[i] * r[i]);
  a = {s * e.x[i][0], s * e.x[i][1], s * e.x[i][2]};
}

void check_direct(const ParticleEnsemble& e, double eps, std::size_t budget) {
  if (!(eps > 0.0)) throw std::invalid_argument("field_direct: softening must be positive");
  if (e.size() > budget)
    throw std::invalid_argument("field_direct: N = " + std::to_string(e.size()) +
                                " exceeds the direct-sum budget " + std::to_string(budget) +
                                "; use field_radial");
}

Vec3 direct_row(const ParticleEnsemble& e, double eps2, std::size_t i) {
  const std::size_t N = e.size();
  double ax = 0.0, ay = 0.0, az = 0.0;
  const double xi = e.x[i][0], yi = e.x[i][1], zi = e.x[i][2];
  for (std::size_t j = 0; j < N; ++j) {
    if (j == i) continue;
    const double dx = xi - e.x[j][0], dy = yi - e.x[j][1], dz = zi - e.x[j][2];
    const double d2 = dx * dx + dy * dy + dz * dz + eps2;
    const double s = e.w[j] / (d2 * std::sqrt(d2));
    ax -= s * dx;
    ay -= s * dy;
    az -= s * dz;
  }
  const double c = 1.0 / (4.0 * kPi);
  return {c * ax, c * ay, c * az};
}

double direct_row_energy(const ParticleEnsemble& e, double eps2, std::size_t i) {
  double s = 0.0;
  for (std::size_t j = i + 1; j < e.size(); ++j) {
    const double dx = e.x[i][0] - e.x[j][0], dy = e.x[i][1] - e.x[j][1], dz = e.x[i][2] - e.x[j][2];
    s += e.w[j] / std::sqrt(dx * dx + dy * dy + dz * dz + eps2);
  }
  return e.w[i] * s / (4.0 * kPi);
}

double model_phi(const EquilibriumModel& m, double r) {
  return r <= m.phi.r_max() ? m.phi(r) : -m.M / (4.0 * kPi * r);
}

double model_dphi(const EquilibriumModel& m, double r) {
  return r <= m.dphi.r_max() ? m.dphi(r) : m.M / (4.0 * kPi * r * r);
}

bool finite_state(const ParticleEnsemble& e) {
  const std::size_t N = e.size();
  int bad = 0;
#pragma omp parallel for schedule(static) reduction(| : bad)
  for (std::size_t i = 0; i < N; ++i)
    for (int k = 0; k < 3; ++k)
      if (!std::isfinite(e.x[i][k]) || !std::isfinite(e.v[i][k])) bad |= 1;
  return bad == 0;
}

}  // namespace

std::vector<Vec3> field_radial(const ParticleEnsemble& e, std::vector<std::size_t>& order) {
  const std::vector<double> r = radii(e, true);
  const std::vector<double> m = enclosed_mass(e, r, order);
  const std::size_t N = e.size();
  std::vector<Vec3> a(N);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < N; ++i) radial_acceleration(e, r, m, i, a[i]);
  return a;
}

std::vector<Vec3> field_radial(const ParticleEnsemble& e) {
  std::vector<std::size_t> order;
  return field_radial(e, order);
}

std::vector<Vec3> field_radial_serial(const ParticleEnsemble& e) {
  std::vector<std::size_t> order;
  const std::vector<double> r = radii(e, false);
  const std::vector<double> m = enclosed_mass(e, r, order);
  std::vector<Vec3> a(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) radial_acceleration(e, r, m, i, a[i]);
  return a;
}

std::vector<Vec3> field_direct(const ParticleEnsemble& e, double eps, std::size_t budget) {
  check_direct(e, eps, budget);
  const std::size_t N = e.size();
  const double eps2 = eps * eps;
  std::vector<Vec3> a(N);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < N; ++i) a[i] = direct_row(e, eps2, i);
  return a;
}

std::vector<Vec3> field_direct_serial(const ParticleEnsemble& e, double eps, std::size_t budget) {
  check_direct(e, eps, budget);
  const double eps2 = eps * eps;
  std::vector<Vec3> a(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) a[i] = direct_row(e, eps2, i);
  return a;
}

std::vector<Vec3> accelerations(const ParticleEnsemble& e, const Solver& s) {
  switch (s.kind) {
    case SolverKind::radial:
      if (!s.parallel) return field_radial_serial(e);
      return s.order_cache ? field_radial(e, *s.order_cache) : field_radial(e);
    case SolverKind::direct:
      return s.parallel ? field_direct(e, s.eps, s.budget) : field_direct_serial(e, s.eps, s.budget);
    case SolverKind::external: {
      if (s.model == nullptr) throw std::invalid_argument("external solver: model missing");
      std::vector<Vec3> a(e.size());
      for (std::size_t i = 0; i < e.size(); ++i) {
        const double r = std::sqrt(dot(e.x[i], e.x[i]));
        if (r == 0.0) {
          a[i] = {0.0, 0.0, 0.0};
          continue;
        }
        const double f = -model_dphi(*s.model, r) / r;
        a[i] = {f * e.x[i][0], f * e.x[i][1], f * e.x[i][2]};
      }
      return a;
    }
  }
  throw std::invalid_argument("unknown solver");
}

double solver_potential_energy(const ParticleEnsemble& e, const Solver& s) {
  switch (s.kind) {
    case SolverKind::radial: return shell_potential_energy(e);
    case SolverKind::direct: {
      check_direct(e, s.eps, s.budget);
      const std::size_t N = e.size();
      const double eps2 = s.eps * s.eps;
      std::vector<double> rows(N);
#pragma omp parallel for schedule(dynamic, 64)
      for (std::size_t i = 0; i < N; ++i) rows[i] = direct_row_energy(e, eps2, i);
      double total = 0.0;
      for (double v : rows) total += v;
      return total;
    }
    case SolverKind::external: {
      if (s.model == nullptr) throw std::invalid_argument("external solver: model missing");
      double total = 0.0;
      for (std::size_t i = 0; i < e.size(); ++i)
        total -= e.w[i] * model_phi(*s.model, std::sqrt(dot(e.x[i], e.x[i])));
      return total;
    }
  }
  throw std::invalid_argument("unknown solver");
}

double kinetic_energy(const ParticleEnsemble& e) {
  double s = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) s += 0.5 * e.w[i] * dot(e.v[i], e.v[i]);
  return s;
}

Vec3 center_of_mass(const ParticleEnsemble& e) {
  Vec3 c{0.0, 0.0, 0.0};
  double m = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    for (int k = 0; k < 3; ++k) c[k] += e.w[i] * e.x[i][k];
    m += e.w[i];
  }
  for (int k = 0; k < 3; ++k) c[k] /= m;
  return c;
}

void recenter(ParticleEnsemble& e) {
  const Vec3 c = center_of_mass(e);
  Vec3 u{0.0, 0.0, 0.0};
  double m = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    for (int k = 0; k < 3; ++k) u[k] += e.w[i] * e.v[i][k];
    m += e.w[i];
  }
  for (std::size_t i = 0; i < e.size(); ++i)
    for (int k = 0; k < 3; ++k) {
      e.x[i][k] -= c[k];
      e.v[i][k] -= u[k] / m;
    }
}

void step_leapfrog(ParticleEnsemble& e, const Solver& s, double dt, std::vector<Vec3>& acc) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_leapfrog: dt must be positive");
  if (acc.size() != e.size()) throw std::invalid_argument("step_leapfrog: acceleration size");
  const std::size_t N = e.size();
  const double h = 0.5 * dt;
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < N; ++i)
    for (int k = 0; k < 3; ++k) {
      e.v[i][k] += h * acc[i][k];
      e.x[i][k] += dt * e.v[i][k];
    }
  acc = accelerations(e, s);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < N; ++i)
    for (int k = 0; k < 3; ++k) e.v[i][k] += h * acc[i][k];
  e.t += dt;
}

ParticleEnsemble step_leapfrog(const ParticleEnsemble& e, const Solver& s, double dt) {
  ParticleEnsemble out = e;
  std::vector<Vec3> acc = accelerations(out, s);
  step_leapfrog(out, s, dt, acc);
  return out;
}

DiagnosticsRecord diagnose(const ParticleEnsemble& e, const Solver& s, const EvolveOptions& opt) {
  DiagnosticsRecord d;
  d.t = e.t;
  d.H_cin = kinetic_energy(e);
  d.H_pot = solver_potential_energy(e, s);
  d.H = d.H_cin - d.H_pot;
  d.mass = e.mass();
  d.cm = center_of_mass(e);
  if (opt.track_shift) d.z = estimate_shift(e);
  if (!opt.lp_grid.r_edges.empty()) {
    const DistributionView g = bin_ensemble(e, opt.lp_grid, d.z);
    d.l1 = lp_norm(g, 1.0);
    d.l2 = lp_norm(g, 2.0);
    d.linf = lp_norm(g, std::numeric_limits<double>::infinity());
  }
  if (opt.reference != nullptr) d.dist = weighted_shift_distance(e, *opt.reference, d.z);
  return d;
}

EvolveResult evolve(ParticleEnsemble e, const Solver& s, double dt, double T,
                    const EvolveOptions& opt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("evolve: dt must be positive");
  if (!(T >= 0.0)) throw std::invalid_argument("evolve: T must be non-negative");
  if (opt.cadence == 0) throw std::invalid_argument("evolve: cadence must be positive");
  const std::size_t steps = static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
  EvolveResult out;
  out.records.push_back(diagnose(e, s, opt));
  const double H0 = out.records.front().H;
  Solver solver = s;
  if (solver.kind == SolverKind::radial && !solver.order_cache)
    solver.order_cache = std::make_shared<std::vector<std::size_t>>();
  std::vector<Vec3> acc = accelerations(e, solver);
  ParticleEnsemble good = e;
  for (std::size_t n = 1; n <= steps; ++n) {
    step_leapfrog(e, solver, dt, acc);
    if (!finite_state(e)) {
      out.blew_up = true;
      out.reason = "non-finite state at step " + std::to_string(n);
      break;
    }
    if (n % opt.cadence == 0 || n == steps) {
      const DiagnosticsRecord d = diagnose(e, s, opt);
      if (!std::isfinite(d.H) || std::abs(d.H - H0) > opt.blowup_drift * std::abs(H0)) {
        out.blew_up = true;
        out.reason = "energy drift " + std::to_string(std::abs(d.H - H0) / std::abs(H0)) +
                     " at step " + std::to_string(n);
        break;
      }
      out.records.push_back(d);
      good = e;
    }
    out.steps = n;
  }
  out.final_state = out.blew_up ? good : e;
  return out;
}

double dynamical_time(const EquilibriumModel& model) {
  return 2.0 * kPi * std::sqrt(4.0 * kPi * model.R * model.R * model.R / model.M);
}

double default_softening(const EquilibriumModel& model, std::size_t N) {
  return model.R * std::cbrt(1.0 / static_cast<double>(N)) / 10.0;
}

PhaseGrid coarse_phase_grid(const EquilibriumModel& model) {
  return PhaseGrid::uniform(16, 16, 4, 1.5 * model.R, 1.2 * std::sqrt(2.0 * std::abs(model.phi_c)));
}

PerturbationKind parse_perturbation(const std::string& name) {
  if (name == "none") return PerturbationKind::none;
  if (name == "scale") return PerturbationKind::scale;
  if (name == "boost") return PerturbationKind::boost;
  if (name == "reversal") return PerturbationKind::shell_reversal;
  if (name == "kick") return PerturbationKind::kick_l2;
  throw std::invalid_argument("unknown perturbation '" + name + "'");
}

std::string perturbation_name(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::none: return "none";
    case PerturbationKind::scale: return "scale";
    case PerturbationKind::boost: return "boost";
    case PerturbationKind::shell_reversal: return "reversal";
    case PerturbationKind::kick_l2: return "kick";
  }
  return "none";
}

void apply_perturbation(ParticleEnsemble& e, const EquilibriumModel& model, PerturbationKind kind,
                        double eta) {
  const double vs = std::sqrt(model.M / (4.0 * kPi * model.R));
  switch (kind) {
    case PerturbationKind::none: break;
    case PerturbationKind::scale:
      for (double& w : e.w) w *= 1.0 + eta;
      break;
    case PerturbationKind::boost:
      for (auto& v : e.v) v[2] += eta * vs;
      break;
    case PerturbationKind::shell_reversal: {
      const double r_s = (1.0 - eta) * model.R;
      for (std::size_t i = 0; i < e.size(); ++i)
        if (std::sqrt(dot(e.x[i], e.x[i])) > r_s)
          for (int k = 0; k < 3; ++k) e.v[i][k] = -e.v[i][k];
      break;
    }
    case PerturbationKind::kick_l2: {
      const double c = eta * vs / model.R;
      for (std::size_t i = 0; i < e.size(); ++i) {
        e.v[i][0] -= c * e.x[i][0];
        e.v[i][1] -= c * e.x[i][1];
        e.v[i][2] += 2.0 * c * e.x[i][2];
      }
      break;
    }
  }
}

StabilityResult stability_experiment(const EquilibriumModel& model, const StabilityConfig& cfg) {
  if (!(cfg.eta >= 0.0)) throw std::invalid_argument("stability_experiment: eta must be >= 0");
  if (!(cfg.T > 0.0)) throw std::invalid_argument("stability_experiment: T must be positive");
  Solver solver = cfg.solver;
  if (solver.kind == SolverKind::external)
    throw std::invalid_argument("stability_experiment: self-consistent solver required");
  if (solver.kind == SolverKind::direct && solver.eps == 0.0)
    solver.eps = default_softening(model, cfg.N);
  const double dt = cfg.dt > 0.0 ? cfg.dt : dynamical_time(model) / 200.0;

  ParticleEnsemble base = sample_particles(model, cfg.N, cfg.seed);
  if (solver.kind == SolverKind::direct) recenter(base);
  ParticleEnsemble e = base;
  apply_perturbation(e, model, cfg.kind, cfg.eta);

  StabilityResult out;
  if (cfg.kind == PerturbationKind::boost) out.boost = {0.0, 0.0, cfg.eta * std::sqrt(model.M / (4.0 * kPi * model.R))};
  if (cfg.kind == PerturbationKind::kick_l2 && solver.kind == SolverKind::radial)
    out.warnings.push_back("non-radial kick evolved with the radial solver keeps only the monopole field");
  if (cfg.kind == PerturbationKind::boost && solver.kind == SolverKind::radial)
    out.warnings.push_back("bulk boost with the radial solver is pulled back to the origin");

  const PhaseGrid grid = coarse_phase_grid(model);
  const GriddedF f0 = bin_model(model, grid);
  {
    const GriddedF gb = bin_ensemble(base, grid), ge = bin_ensemble(e, grid);
    double l1 = std::abs(ge.outside_mass - gb.outside_mass), inf_b = 0.0, inf_e = 0.0;
    for (std::size_t ir = 0; ir < grid.nr(); ++ir)
      for (std::size_t iw = 0; iw < grid.nw(); ++iw)
        for (std::size_t ic = 0; ic < grid.nc(); ++ic) {
          const std::size_t k = grid.index(ir, iw, ic);
          l1 += grid.volume(ir, iw, ic) * std::abs(ge.values[k] - gb.values[k]);
          inf_b = std::max(inf_b, gb.values[k]);
          inf_e = std::max(inf_e, ge.values[k]);
        }
    const double Hb = kinetic_energy(base) - solver_potential_energy(base, solver);
    const double He = kinetic_energy(e) - solver_potential_energy(e, solver);
    out.proxies.l1 = l1 / base.mass();
    out.proxies.dH = (He - Hb) / std::abs(Hb);
    out.proxies.linf = inf_e / inf_b;
    const double slack = 1e-9 * cfg.eta + 1e-12;
    out.proxies.hold = out.proxies.l1 <= cfg.eta + slack && out.proxies.dH <= cfg.eta + slack;
    if (!out.proxies.hold)
      out.warnings.push_back("hypothesis proxies violated at t = 0; proceeding in exploration mode");
  }

  EvolveOptions opt;
  opt.cadence = cfg.cadence;
  opt.reference = &f0;
  opt.track_shift = solver.kind == SolverKind::direct;
  opt.lp_grid = grid;
  const EvolveResult run = evolve(std::move(e), solver, dt, cfg.T, opt);
  out.records = run.records;
  out.blew_up = run.blew_up;
  if (run.blew_up) out.warnings.push_back(run.reason);
  for (const DiagnosticsRecord& d : run.records) {
    out.times.push_back(d.t);
    out.distance.push_back(d.dist);
    out.shift.push_back(d.z);
    out.max_distance = std::max(out.max_distance, d.dist);
  }
  out.initial_distance = out.distance.front();
  out.bounded = !run.blew_up && out.max_distance <= cfg.factor * out.initial_distance;
  return out;
}

}  // namespace gravistab
