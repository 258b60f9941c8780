#include "checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "gravistab/functionals.hpp"
#include "gravistab/io.hpp"
#include "gravistab/linearized.hpp"
#include "gravistab/rearrangement.hpp"

namespace gravistab::checks {

namespace {

constexpr double kPi = std::numbers::pi;

double uniform(std::mt19937_64& rng, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(rng);
}

json p_label(double p) { return std::isinf(p) ? json("inf") : json(p); }

/// Masked polynomial a(r, w, c) = (E0 - E)_+ sum_k coef_k r^i (w^2)^j c^m,
/// with odd or even powers of c as requested.
std::function<double(double, double, double)> random_field(const EquilibriumModel& m,
                                                            std::mt19937_64& rng, bool even_in_c) {
  std::array<double, 6> a;
  for (double& x : a) x = uniform(rng, -1.0, 1.0);
  const double R = m.R, u2 = 2.0 * m.u_c;
  const int cp = even_in_c ? 0 : 1;
  return [&m, a, R, u2, cp](double r, double w, double c) {
    const double depth = m.E0 - (0.5 * w * w + m.phi(r));
    if (!(depth > 0.0)) return 0.0;
    const double x = r / R, y = w * w / u2;
    const double poly = a[0] + a[1] * x + a[2] * x * x + a[3] * y + a[4] * x * y + a[5] * c * c;
    return depth * poly * std::pow(c, cp);
  };
}

/// -int h^2 / F'(E) on the mesh, the natural scale of the quadratic forms.
double kinetic_scale(const PerturbationField& h) {
  const PhaseMesh& m = *h.mesh;
  std::vector<double> g(h.values.size(), 0.0);
  for (std::size_t i = 0; i < m.ns(); ++i)
    for (std::size_t j = 0; j < m.nt(); ++j) {
      const double Fp = eval_Fprime(*m.model, m.energy(i, j));
      for (std::size_t k = 0; k < m.nc(); ++k) {
        const std::size_t n = m.index(i, j, k);
        g[n] = Fp != 0.0 ? h.values[n] / std::abs(Fp) : 0.0;
      }
    }
  const PerturbationField gf = PerturbationField::from_values(h.mesh, g, h.ell, h.support_flag,
                                                              h.inside_support, h.axis);
  return std::abs(inner_product(h, gf));
}

RadialProfile random_radial(const EquilibriumModel& m, std::mt19937_64& rng) {
  std::array<double, 3> a, b;
  for (int k = 0; k < 3; ++k) {
    a[k] = uniform(rng, -1.0, 1.0);
    b[k] = uniform(rng, 0.2, 1.5);
  }
  const RadialGrid& g = m.phi.grid();
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g[i] / m.R;
    for (int k = 0; k < 3; ++k) v[i] += a[k] / (1.0 + (x / b[k]) * (x / b[k]));
  }
  return RadialProfile(g, v, Extrapolation::inverse_r);
}

}  // namespace

CheckResult inequalities(const EquilibriumModel& model, std::uint64_t seed, int boxes) {
  std::mt19937_64 rng(seed);
  const std::array<double, 4> ps{1.5, 2.0, 3.0, std::numeric_limits<double>::infinity()};
  json cases = json::array();
  double min_ratio = std::numeric_limits<double>::infinity(), max_invariance = 0.0;
  for (int b = 0; b < boxes; ++b) {
    const double h = uniform(rng, 0.1, 10.0), a = uniform(rng, 0.2, 3.0);
    const double b1 = uniform(rng, 0.0, 1.0), b2 = b1 + uniform(rng, 0.1, 3.0);
    const double gamma = uniform(rng, 0.5, 2.0), lambda = uniform(rng, 0.5, 2.0), mu = uniform(rng, 0.5, 2.0);
    const Vec3 x0{uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0)};
    const GriddedF f = box_distribution(h, a, b1, b2);
    const GriddedF g = symmetry_transform(f, gamma, lambda, mu, x0);
    for (double p : ps) {
      const InterpolationSides s = interpolation_check(f, p), t = interpolation_check(g, p);
      const double r1 = s.rhs_factor / s.lhs_rho, r2 = s.pot_rhs_factor / s.pot_lhs;
      const double t1 = t.rhs_factor / t.lhs_rho, t2 = t.pot_rhs_factor / t.pot_lhs;
      const double inv = std::max(std::abs(t1 / r1 - 1.0), std::abs(t2 / r2 - 1.0));
      min_ratio = std::min({min_ratio, r1, r2});
      max_invariance = std::max(max_invariance, inv);
      cases.push_back({{"box", b}, {"p", p_label(p)}, {"ratio_rho", r1}, {"ratio_pot", r2}, {"invariance", inv}});
    }
  }
  json model_cases = json::array();
  for (double p : ps) {
    const InterpolationSides s = interpolation_check(AnalyticF{&model}, p);
    const double r1 = s.rhs_factor / s.lhs_rho, r2 = s.pot_rhs_factor / s.pot_lhs;
    min_ratio = std::min({min_ratio, r1, r2});
    model_cases.push_back({{"p", p_label(p)}, {"ratio_rho", r1}, {"ratio_pot", r2}});
  }
  const bool pass = min_ratio > 0.0 && std::isfinite(min_ratio) && max_invariance <= 1e-6;
  return {{{"check", "inequalities"},
           {"pass", pass},
           {"min_ratio", min_ratio},
           {"max_invariance", max_invariance},
           {"invariance_tolerance", 1e-6},
           {"model", model_cases},
           {"cases", cases}},
          pass};
}

CheckResult antonov(const EquilibriumModel& model, std::uint64_t seed, int fields) {
  std::mt19937_64 rng(seed);
  const auto mesh = make_phase_mesh(model);
  json cases = json::array();
  bool pass = true;
  for (int n = 0; n < fields; ++n) {
    const PerturbationField q = PerturbationField::from_function(mesh, random_field(model, rng, true));
    const AntonovSides s = antonov_check(q);
    const double scale = std::max(std::abs(s.lhs), std::abs(s.rhs));
    const bool ok = s.lhs >= s.rhs - 1e-6 * scale && s.rhs >= -1e-6 * scale;
    pass = pass && ok;
    cases.push_back({{"field", n}, {"lhs", s.lhs}, {"rhs", s.rhs}, {"verdict", ok ? "pass" : "fail"}});
  }
  json identity = json::array();
  const double rho0 = model.rho(0.0);
  for (int k = 0; k < 10; ++k) {
    const double r = (k + 0.5) / 10.0 * 0.99 * model.R;
    const double lhs = antonov_velocity_identity(model, r), rhs = model.rho(r);
    const double err = std::abs(lhs - rhs) / rho0;
    const bool ok = err <= 1e-6;
    pass = pass && ok;
    identity.push_back({{"r", r}, {"lhs", lhs}, {"rho", rhs}, {"error", err}, {"verdict", ok ? "pass" : "fail"}});
  }
  return {{{"check", "antonov"}, {"pass", pass}, {"cases", cases}, {"identity", identity}}, pass};
}

CheckResult coercivity(const EquilibriumModel& model, std::uint64_t seed, int probes, int radial) {
  std::mt19937_64 rng(seed);
  const auto mesh = make_phase_mesh(model);
  json cases = json::array();
  bool pass = true;
  for (int n = 0; n < probes; ++n) {
    const int ell = n % 2;
    const PerturbationField h =
        PerturbationField::from_function(mesh, random_field(model, rng, n % 4 < 2), ell, 0);
    const double value = constrained_coercivity_probe(h);
    const double tol = 1e-6 * kinetic_scale(h);
    const json rep = io::coercivity_report("constrained <M h, h>", value, tol);
    pass = pass && rep["verdict"] == "pass";
    cases.push_back(rep);
  }
  for (int n = 0; n < radial; ++n) {
    const double value = reduced_hessian({random_radial(model, rng), 0}, model);
    const json rep = {{"form", "radial D2J"}, {"value", value}, {"tolerance", 0.0},
                      {"verdict", value > 0.0 ? "pass" : "fail"}};
    pass = pass && value > 0.0;
    cases.push_back(rep);
  }
  return {{{"check", "coercivity"}, {"pass", pass}, {"cases", cases}}, pass};
}

CheckResult kernel(const EquilibriumModel& model) {
  const auto mesh = make_phase_mesh(model);
  // d/dx1 f0 = F'(E) phi'(r) x1 / r
  const PerturbationField h = PerturbationField::from_function(
      mesh, [&](double r, double w, double) {
        return eval_Fprime(model, 0.5 * w * w + model.phi(r)) * model.dphi(r);
      }, 1, 0);
  const double scale_F = kinetic_scale(h);
  const double F = free_energy(h);
  const PerturbationField Mh = apply_M(h);
  double scale_M = 0.0;
  for (double r : mesh->dphi) scale_M = std::max(scale_M, r);
  const SpatialPerturbation dphi{model.dphi, 1};
  const double d2j = reduced_hessian(dphi, model);
  const double scale_J =
      integrate_radial_function(model.dphi.grid(), [&](double r) {
        const double u = model.dphi(r), du = model.dphi.derivative(r);
        return (du * du + (r > 0.0 ? 2.0 * u * u / (r * r) : 0.0)) / 3.0;
      });
  const RadialProfile res = schrodinger_residual(model, dphi);
  const RadialProfile V = effective_potential(model);
  double res_max = 0.0, scale_A = 0.0;
  const RadialGrid& g = model.rho.grid();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] >= 0.98 * model.R) continue;  // five-point stencils straddle the density edge
    res_max = std::max(res_max, std::abs(res.values()[i]));
    scale_A = std::max(scale_A, std::abs(V.values()[i] * model.dphi(g[i])));
  }
  const double tol = 1e-4;
  const std::array<std::pair<const char*, double>, 4> items{{
      {"F(d1 f0)", std::abs(F) / scale_F},
      {"M d1 f0", Mh.max_abs() / scale_M},
      {"D2J(d1 phi0)", std::abs(d2j) / scale_J},
      {"A(phi0')", res_max / scale_A},
  }};
  json cases = json::array();
  bool pass = true;
  for (const auto& [name, v] : items) {
    const bool ok = v <= tol;
    pass = pass && ok;
    cases.push_back({{"form", name}, {"value", v}, {"tolerance", tol}, {"verdict", ok ? "pass" : "fail"}});
  }
  return {{{"check", "kernel"}, {"pass", pass}, {"cases", cases}}, pass};
}

CheckResult rearrangement(const EquilibriumModel& model, std::uint64_t seed, int lemma_fields,
                          int chain_fields) {
  std::mt19937_64 rng(seed);
  const PhaseGrid grid = PhaseGrid::uniform(32, 32, 8, 1.5 * model.R,
                                            1.2 * std::sqrt(2.0 * std::abs(model.phi_c)));
  const GriddedF f0 = bin_model(model, grid);
  bool pass = true;

  const GriddedF hat = rearrange_by_energy(f0, model.phi);
  double l1 = 0.0;
  for (std::size_t ir = 0; ir < grid.nr(); ++ir)
    for (std::size_t iw = 0; iw < grid.nw(); ++iw)
      for (std::size_t ic = 0; ic < grid.nc(); ++ic) {
        const std::size_t k = grid.index(ir, iw, ic);
        l1 += grid.volume(ir, iw, ic) * std::abs(hat.values[k] - f0.values[k]);
      }
  const double osc = binning_oscillation(model, grid);
  const bool fixed_ok = l1 <= osc;
  pass = pass && fixed_ok;

  json lemma = json::array();
  for (int n = 0; n < lemma_fields; ++n) {
    GriddedF f = f0;
    const double amp = uniform(rng, 0.05, 0.9);
    for (double& v : f.values) v *= 1.0 + amp * uniform(rng, -1.0, 1.0);
    const EnergyLemmaSides s = rearrangement_energy_lemma_check(f, model.phi);
    const bool ok = s.rearranged <= s.original + 1e-12 * std::abs(s.original);
    pass = pass && ok;
    lemma.push_back({{"rearranged", s.rearranged}, {"original", s.original}, {"verdict", ok ? "pass" : "fail"}});
  }

  json chain = json::array();
  for (int n = 0; n < chain_fields; ++n) {
    GriddedF f = f0;
    const double tilt = uniform(rng, 0.01, 0.3), noise = uniform(rng, 0.0, 0.2);
    for (std::size_t ir = 0; ir < grid.nr(); ++ir)
      for (std::size_t iw = 0; iw < grid.nw(); ++iw)
        for (std::size_t ic = 0; ic < grid.nc(); ++ic) {
          const double c = 0.5 * (grid.c_edges[ic] + grid.c_edges[ic + 1]);
          f.values[grid.index(ir, iw, ic)] *= 1.0 + tilt * c + noise * uniform(rng, -1.0, 1.0);
        }
    const MonotonicityChain mc = monotonicity_chain(f);
    const double tol = 1e-6 * std::abs(mc.H_f);
    const bool ok = mc.H_f >= mc.J - tol && mc.J >= mc.H_hat - tol;
    pass = pass && ok;
    chain.push_back({{"H_f", mc.H_f}, {"J", mc.J}, {"H_hat", mc.H_hat}, {"verdict", ok ? "pass" : "fail"}});
  }

  // Uniform ball of unit density and radius: phi = r^2/6 - 1/2 inside.
  const RadialGrid bg = RadialGrid::uniform(1025, 1.0);
  std::vector<double> phi(bg.size()), dphi(bg.size());
  for (std::size_t i = 0; i < bg.size(); ++i) {
    phi[i] = bg[i] * bg[i] / 6.0 - 0.5;
    dphi[i] = bg[i] / 3.0;
  }
  const double mu = energy_volume(RadialProfile(bg, phi, Extrapolation::inverse_r, dphi), -1.0 / 3.0);
  const double mu_exact = std::pow(kPi, 3) / (18.0 * std::sqrt(3.0));
  const bool ball_ok = std::abs(mu - mu_exact) <= 1e-6 * mu_exact;
  pass = pass && ball_ok;

  return {{{"check", "rearrangement"},
           {"pass", pass},
           {"fixed_point", {{"l1", l1}, {"oscillation_bound", osc}, {"verdict", fixed_ok ? "pass" : "fail"}}},
           {"energy_lemma", lemma},
           {"monotonicity_chain", chain},
           {"ball_volume", {{"value", mu}, {"exact", mu_exact}, {"verdict", ball_ok ? "pass" : "fail"}}}},
          pass};
}

CheckResult run(const std::string& name, const EquilibriumModel& model, std::uint64_t seed) {
  if (name == "inequalities") return inequalities(model, seed);
  if (name == "antonov") return antonov(model, seed);
  if (name == "coercivity") return coercivity(model, seed);
  if (name == "kernel") return kernel(model);
  if (name == "rearrangement") return rearrangement(model, seed);
  throw std::invalid_argument("unknown check '" + name + "'");
}

}  // namespace gravistab::checks
