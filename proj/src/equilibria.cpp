#include "gravistab/equilibria.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <boost/numeric/odeint.hpp>

namespace gravistab {

namespace {

constexpr double kPi = std::numbers::pi;
const double kSqrt2 = std::sqrt(2.0);

// sum_{k>=1} u^{k+a} / Gamma(k+a+1), the series behind the King moments.
double king_series(double u, double a) {
  if (!(u > 0.0)) return 0.0;
  double term = std::pow(u, 1.0 + a) / std::tgamma(2.0 + a);
  double sum = 0.0;
  for (int k = 1; k < 2000; ++k) {
    sum += term;
    if (term < 1e-18 * sum) break;
    term *= u / (k + 1.0 + a);
  }
  return sum;
}

using State = std::array<double, 2>;

}  // namespace

// ---------------------------------------------------------------------------
// AnsatzLaw

AnsatzLaw AnsatzLaw::polytrope(double n, double C_F) {
  if (!(n > -0.5)) throw std::invalid_argument("polytrope: index must exceed -1/2");
  if (!(C_F > 0.0)) throw std::invalid_argument("polytrope: C_F must be positive");
  AnsatzLaw law;
  law.kind = LawKind::polytrope;
  law.n = n;
  law.C_F = C_F;
  return law;
}

AnsatzLaw AnsatzLaw::king() {
  AnsatzLaw law;
  law.kind = LawKind::king;
  return law;
}

AnsatzLaw AnsatzLaw::tabulated(MonotoneMap depth_table) {
  if (depth_table.direction() != Direction::increasing || depth_table.x_min() < 0.0) {
    throw std::invalid_argument("tabulated law: F must be non-decreasing in depth s >= 0");
  }
  // Flatten round-off ties so that strict decrease in E holds where F > 0.
  std::vector<double> s = depth_table.breakpoints();
  std::vector<double> f = depth_table.values();
  const double scale = *std::max_element(f.begin(), f.end());
  if (!(scale > 0.0)) throw std::invalid_argument("tabulated law: F must be positive somewhere");
  for (std::size_t i = 1; i < f.size(); ++i) {
    if (std::abs(f[i] - f[i - 1]) <= 1e-14 * scale) f[i] = f[i - 1];
  }
  AnsatzLaw law;
  law.kind = LawKind::tabulated;
  law.table = MonotoneMap(std::move(s), std::move(f), Direction::increasing);
  return law;
}

double AnsatzLaw::F_depth(double s) const {
  if (!(s > 0.0)) return 0.0;
  switch (kind) {
    case LawKind::polytrope: return n == 0.0 ? C_F : C_F * std::pow(s, n);
    case LawKind::king: return std::expm1(s);
    case LawKind::tabulated: return (*table)(s);
  }
  return 0.0;
}

double AnsatzLaw::Fprime_depth(double s) const {
  if (!(s > 0.0)) return 0.0;
  switch (kind) {
    case LawKind::polytrope: return n == 0.0 ? 0.0 : -C_F * n * std::pow(s, n - 1.0);
    case LawKind::king: return -std::exp(s);
    case LawKind::tabulated: return -table->derivative(s);
  }
  return 0.0;
}

double AnsatzLaw::density(double u) const {
  if (!(u > 0.0)) return 0.0;
  switch (kind) {
    case LawKind::polytrope: return polytrope_density_constant(n, C_F) * std::pow(u, n + 1.5);
    case LawKind::king: return 4.0 * kPi * kSqrt2 * std::tgamma(1.5) * king_series(u, 1.5);
    case LawKind::tabulated:
      return velocity_moment([this, u](double E) { return F_depth(-E); }, -u, 0.0, 0);
  }
  return 0.0;
}

double AnsatzLaw::density_derivative(double u) const {
  if (!(u > 0.0)) return 0.0;
  switch (kind) {
    case LawKind::polytrope:
      return (n + 1.5) * polytrope_density_constant(n, C_F) * std::pow(u, n + 0.5);
    case LawKind::king: return 4.0 * kPi * kSqrt2 * std::tgamma(1.5) * king_series(u, 0.5);
    case LawKind::tabulated: {
      // d rho/du = 4 pi sqrt2 [F(0+) sqrt(u) + int_0^u F_s(s) (u - s)^{1/2} ds]
      const double jump = table->values().front();
      const double smooth = velocity_moment(
          [this](double E) { return table->derivative(-E); }, -u, 0.0, 0);
      return 4.0 * kPi * kSqrt2 * jump * std::sqrt(u) + smooth;
    }
  }
  return 0.0;
}

double AnsatzLaw::kinetic_density(double u) const {
  if (!(u > 0.0)) return 0.0;
  switch (kind) {
    case LawKind::polytrope: {
      const double c = 2.0 * kPi * std::pow(2.0, 1.5) * C_F * std::tgamma(n + 1.0) *
                       std::tgamma(2.5) / std::tgamma(n + 3.5);
      return c * std::pow(u, n + 2.5);
    }
    case LawKind::king:
      return 2.0 * kPi * std::pow(2.0, 1.5) * std::tgamma(2.5) * king_series(u, 2.5);
    case LawKind::tabulated:
      return 0.5 * velocity_moment([this](double E) { return F_depth(-E); }, -u, 0.0, 2);
  }
  return 0.0;
}

std::string AnsatzLaw::name() const {
  switch (kind) {
    case LawKind::polytrope: return "polytrope";
    case LawKind::king: return "king";
    case LawKind::tabulated: return "tabulated";
  }
  return "unknown";
}

double polytrope_density_constant(double n, double C_F) {
  if (!(n > -1.0)) throw std::domain_error("polytrope density constant diverges for n <= -1");
  return C_F * std::pow(2.0, 1.5) * std::pow(kPi, 1.5) * std::tgamma(n + 1.0) /
         std::tgamma(n + 2.5);
}

double EquilibriumModel::depth(double r) const {
  if (r >= R) return 0.0;
  return std::max(0.0, E0 - phi(r));
}

NonCompactSupport::NonCompactSupport(std::vector<double> r, std::vector<double> u,
                                     std::vector<double> du)
    : std::runtime_error("non-compact support"), r_(std::move(r)), u_(std::move(u)),
      du_(std::move(du)) {}

// ---------------------------------------------------------------------------
// Shooting

namespace {

namespace odeint = boost::numeric::odeint;

struct ShootingResult {
  double R = 0.0;
  double du_R = 0.0;
  bool found = false;
};

// Runs the integrator from r0 and reports sampled states at the requested
// radii (sorted, all > r0) and the first zero of u.
class Shooter {
 public:
  Shooter(const AnsatzLaw& law, double u_c) : law_(law), u_c_(u_c) {
    rho_c_ = law.density(u_c);
    const double vc = law.density_derivative(u_c);
    const double length = std::sqrt(u_c / std::max(rho_c_, 1e-300));
    r0_ = 1e-3 * length;
    b2_ = -rho_c_ / 6.0;
    b4_ = vc * rho_c_ / 120.0;
  }

  double r0() const { return r0_; }
  State series(double r) const {
    return {u_c_ + b2_ * r * r + b4_ * r * r * r * r, 2.0 * b2_ * r + 4.0 * b4_ * r * r * r};
  }

  // Integrates up to r_stop.  Samples are written for every requested radius
  // below the zero (or below r_stop).
  ShootingResult run(double r_stop, const std::vector<double>& sample_r,
                     std::vector<State>& samples) const {
    auto rhs = [this](const State& y, State& dy, double r) {
      dy[0] = y[1];
      dy[1] = -law_.density(std::max(y[0], 0.0)) - 2.0 * y[1] / r;
    };
    auto stepper = odeint::make_dense_output(1e-10, 1e-10, odeint::runge_kutta_dopri5<State>());
    stepper.initialize(series(r0_), r0_, 1e-2 * r0_);
    samples.assign(sample_r.size(), State{0.0, 0.0});
    std::size_t next = 0;
    while (next < sample_r.size() && sample_r[next] <= r0_) {
      samples[next] = series(sample_r[next]);
      ++next;
    }
    ShootingResult res;
    for (int step = 0; step < 10000000; ++step) {
      const auto [t0, t1] = stepper.do_step(rhs);
      const State y1 = stepper.current_state();
      const bool crossed = y1[0] <= 0.0;
      double t_end = t1;
      if (crossed) {
        double a = t0, b = t1;
        State y;
        for (int it = 0; it < 200; ++it) {
          const double mid = 0.5 * (a + b);
          if (mid <= a || mid >= b) break;
          stepper.calc_state(mid, y);
          if (y[0] > 0.0) a = mid; else b = mid;
        }
        stepper.calc_state(b, y);
        res.R = b;
        res.du_R = y[1];
        res.found = true;
        t_end = b;
      }
      while (next < sample_r.size() && sample_r[next] <= std::min(t_end, r_stop)) {
        State y;
        stepper.calc_state(sample_r[next], y);
        samples[next] = y;
        ++next;
      }
      if (crossed || t1 >= r_stop) break;
    }
    return res;
  }

 private:
  const AnsatzLaw& law_;
  double u_c_;
  double rho_c_ = 0.0, r0_ = 0.0, b2_ = 0.0, b4_ = 0.0;
};

}  // namespace

EquilibriumModel build_equilibrium(const AnsatzLaw& law, double u_c, const RadialGrid& grid) {
  if (!(u_c > 0.0)) throw std::invalid_argument("build_equilibrium: u_c must be positive");
  Shooter shooter(law, u_c);

  // Pass 1: locate the support edge and keep the search-grid samples.
  std::vector<double> search_r(grid.nodes().begin() + 1, grid.nodes().end());
  std::vector<State> search_samples;
  const ShootingResult first = shooter.run(grid.r_max(), search_r, search_samples);
  if (!first.found) {
    std::vector<double> r{0.0}, u{u_c}, du{0.0};
    for (std::size_t i = 0; i < search_r.size(); ++i) {
      r.push_back(search_r[i]);
      u.push_back(search_samples[i][0]);
      du.push_back(search_samples[i][1]);
    }
    throw NonCompactSupport(std::move(r), std::move(u), std::move(du));
  }

  const double R = first.R;
  const double du_R = first.du_R;
  const RadialGrid fine = RadialGrid::refined(grid.size(), R);
  std::vector<double> fine_r(fine.nodes().begin() + 1, fine.nodes().end() - 1);
  std::vector<State> fine_samples;
  // Pass 2 repeats the same deterministic steps and samples the final grid.
  shooter.run(R, fine_r, fine_samples);

  const std::size_t n = fine.size();
  std::vector<double> u(n), du(n);
  u[0] = u_c;
  du[0] = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    u[i] = std::max(fine_samples[i - 1][0], 0.0);
    du[i] = fine_samples[i - 1][1];
  }
  u[n - 1] = 0.0;
  du[n - 1] = du_R;

  EquilibriumModel model;
  model.law = law;
  model.u_c = u_c;
  model.R = R;
  model.M = -4.0 * kPi * R * R * du_R;
  model.E0 = -model.M / (4.0 * kPi * R);
  model.phi_c = model.E0 - u_c;
  model.search_nodes = grid.size();
  model.search_radius = grid.r_max();

  const auto& r = fine.nodes();
  std::vector<double> phi(n), dphi(n), rho(n), dphi_slope(n), rho_slope(n);
  for (std::size_t i = 0; i < n; ++i) {
    phi[i] = model.E0 - u[i];
    dphi[i] = -du[i];
    rho[i] = law.density(u[i]);
    rho_slope[i] = law.density_derivative(u[i]) * du[i];
    dphi_slope[i] = (i == 0) ? rho[0] / 3.0 : rho[i] - 2.0 * dphi[i] / r[i];
  }
  model.phi = RadialProfile(fine, phi, Extrapolation::inverse_r, dphi);
  model.dphi = RadialProfile(fine, dphi, Extrapolation::inverse_r2, dphi_slope);
  model.rho = RadialProfile(fine, rho, Extrapolation::zero, rho_slope);
  return model;
}

ResidualReport equilibrium_residuals(const EquilibriumModel& model) {
  ResidualReport rep;
  const auto& r = model.rho.grid().nodes();
  const double rho0 = model.rho.values().front();
  auto F = [&model](double E) { return eval_F(model, E); };
  auto check = [&](double x) {
    if (x >= model.R) return;
    const double moment = velocity_moment(F, model.phi(x), model.E0, 0);
    const double res = std::abs(model.rho(x) - moment) / rho0;
    if (x < 0.99 * model.R) rep.self_consistency = std::max(rep.self_consistency, res);
    else rep.edge = std::max(rep.edge, res);
  };
  for (std::size_t i = 0; i + 1 < r.size(); ++i) {
    check(r[i]);
    check(0.5 * (r[i] + r[i + 1]));
  }
  const PoissonSolution sol = solve_radial_poisson(model.rho);
  for (std::size_t i = 0; i < r.size(); ++i) {
    rep.poisson = std::max(rep.poisson, std::abs(sol.phi.values()[i] - model.phi.values()[i]) /
                                            std::abs(model.phi_c));
  }
  rep.exterior_matching = std::abs(model.E0 + model.M / (4.0 * kPi * model.R)) / std::abs(model.E0);
  return rep;
}

double eval_F(const EquilibriumModel& model, double E) { return model.law.F_depth(model.E0 - E); }

double eval_Fprime(const EquilibriumModel& model, double E) {
  return model.law.Fprime_depth(model.E0 - E);
}

ModelEnergies model_energies(const EquilibriumModel& model) {
  ModelEnergies e;
  const RadialGrid& grid = model.rho.grid();
  e.H_cin = integrate_radial_function(grid, [&](double r) {
    return model.law.kinetic_density(model.depth(r));
  });
  double inner = integrate_radial_function(grid, [&](double r) {
    const double d = model.dphi(r);
    return d * d;
  });
  e.H_pot = 0.5 * inner + model.M * model.M / (8.0 * kPi * model.R);
  e.H = e.H_cin - e.H_pot;
  e.mass = integrate_radial(model.rho);
  return e;
}

double model_lp_norm(const EquilibriumModel& model, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp norm: p < 1 unsupported");
  if (std::isinf(p)) return model.law.F_depth(model.u_c);
  auto Fp = [&](double E) { return std::pow(eval_F(model, E), p); };
  const double integral = integrate_radial_function(model.rho.grid(), [&](double r) {
    return velocity_moment(Fp, model.phi(r), model.E0, 0);
  });
  return std::pow(integral, 1.0 / p);
}

// ---------------------------------------------------------------------------
// Symmetry group

double TransformedModel::f(const Vec3& x, const Vec3& v) const {
  Vec3 y{(x[0] - x0[0]) / lambda, (x[1] - x0[1]) / lambda, (x[2] - x0[2]) / lambda};
  const double r = std::sqrt(dot(y, y));
  const double E = 0.5 * mu * mu * dot(v, v) + base->phi(r);
  return gamma * eval_F(*base, E);
}

double TransformedModel::lp_norm(double p) const {
  if (!(p >= 1.0)) throw std::invalid_argument("lp norm: p < 1 unsupported");
  if (std::isinf(p)) return gamma * base->law.F_depth(base->u_c);
  const EquilibriumModel& m = *base;
  auto Fp = [&](double E) { return std::pow(gamma * eval_F(m, E), p); };
  // int g^p dx dv over the scaled support: dx = lambda^3 dy, dv = mu^-3 dw.
  const RadialGrid& grid = rho.grid();
  const double integral = integrate_radial_function(grid, [&](double r) {
    return std::pow(mu, -3.0) * velocity_moment(Fp, m.phi(r / lambda), m.E0, 0);
  });
  return std::pow(integral, 1.0 / p);
}

TransformedModel symmetry_transform(const EquilibriumModel& model, double gamma, double lambda,
                                    double mu, const Vec3& x0) {
  if (!(gamma > 0.0 && lambda > 0.0 && mu > 0.0)) {
    throw std::invalid_argument("symmetry_transform: parameters must be positive");
  }
  TransformedModel g;
  g.base = &model;
  g.gamma = gamma;
  g.lambda = lambda;
  g.mu = mu;
  g.x0 = x0;
  const RadialGrid& grid = model.rho.grid();
  std::vector<double> r(grid.size()), rho(grid.size()), slope(grid.size());
  const double amp = gamma * std::pow(mu, -3.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    r[i] = lambda * grid[i];
    rho[i] = amp * model.rho.values()[i];
    slope[i] = amp * model.rho.slopes()[i] / lambda;
  }
  RadialGrid scaled(std::move(r));
  g.rho = RadialProfile(scaled, rho, Extrapolation::zero, slope);
  const PoissonSolution sol = solve_radial_poisson(g.rho);
  g.phi = sol.phi;
  g.dphi = sol.dphi;
  g.mass = sol.M;
  g.H_pot = sol.H_pot;
  const double kin = gamma * std::pow(mu, -5.0);
  g.H_cin = integrate_radial_function(scaled, [&](double x) {
    return kin * model.law.kinetic_density(model.depth(x / lambda));
  });
  g.H = g.H_cin - g.H_pot;
  return g;
}

SymmetryParams compose(const SymmetryParams& a, const SymmetryParams& b) {
  SymmetryParams c;
  c.gamma = a.gamma * b.gamma;
  c.lambda = a.lambda * b.lambda;
  c.mu = a.mu * b.mu;
  for (int k = 0; k < 3; ++k) c.x0[k] = b.x0[k] + b.lambda * a.x0[k];
  return c;
}

// ---------------------------------------------------------------------------
// Sampling

ParticleEnsemble sample_particles(const EquilibriumModel& model, std::size_t N,
                                  std::uint64_t seed) {
  if (N < 1) throw std::invalid_argument("sample_particles: N must be >= 1");
  const auto& r = model.dphi.grid().nodes();
  std::vector<double> m(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) m[i] = 4.0 * kPi * r[i] * r[i] * model.dphi.values()[i];
  m.back() = model.M;
  for (std::size_t i = 1; i < m.size(); ++i) m[i] = std::max(m[i], m[i - 1]);
  const MonotoneMap cumulative(r, m, Direction::increasing);

  ParticleEnsemble e;
  e.x.resize(N);
  e.v.resize(N);
  e.w.assign(N, model.M / double(N));
  double partial = 0.0;
  for (std::size_t i = 0; i + 1 < N; ++i) partial += e.w[i];
  if (N > 1) e.w[N - 1] = model.M - partial;

  const std::uint32_t s_lo = std::uint32_t(seed), s_hi = std::uint32_t(seed >> 32);
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < std::int64_t(N); ++ii) {
    const std::size_t i = std::size_t(ii);
    std::seed_seq seq{s_lo, s_hi, std::uint32_t(i), std::uint32_t(std::uint64_t(i) >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double radius = monotone_invert(cumulative, uni(rng) * model.M).x;
    const double u = model.depth(radius);
    const double wmax = std::sqrt(2.0 * u);
    const double fmax = model.law.F_depth(u);
    double speed = 0.0;
    for (int tries = 0; tries < 1000000; ++tries) {
      const double w = wmax * std::cbrt(uni(rng));
      const double f = model.law.F_depth(u - 0.5 * w * w);
      if (uni(rng) * fmax <= f && f > 0.0) {
        speed = w;
        break;
      }
    }
    auto direction = [&]() {
      const double cz = 2.0 * uni(rng) - 1.0;
      const double az = 2.0 * kPi * uni(rng);
      const double sz = std::sqrt(std::max(0.0, 1.0 - cz * cz));
      return Vec3{sz * std::cos(az), sz * std::sin(az), cz};
    };
    const Vec3 nx = direction();
    const Vec3 nv = direction();
    for (int k = 0; k < 3; ++k) {
      e.x[i][k] = radius * nx[k];
      e.v[i][k] = speed * nv[k];
    }
  }
  return e;
}

double ParticleEnsemble::mass() const {
  double s = 0.0;
  for (double wi : w) s += wi;
  return s;
}

}  // namespace gravistab
