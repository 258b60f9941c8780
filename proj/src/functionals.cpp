#include "gravistab/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace gravistab {

namespace {

const double kPi = 3.14159265358979323846;

std::vector<double> linspace(double a, double b, std::size_t cells) {
  std::vector<double> e(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i) e[i] = a + (b - a) * double(i) / double(cells);
  e.back() = b;
  return e;
}

void check_increasing(const std::vector<double>& e, const char* what) {
  if (e.size() < 2) throw std::invalid_argument(std::string("PhaseGrid: too few ") + what + " edges");
  for (std::size_t i = 1; i < e.size(); ++i) {
    if (!(e[i] > e[i - 1])) {
      throw std::invalid_argument(std::string("PhaseGrid: ") + what + " edges not increasing");
    }
  }
}

/// Index of the bin containing x, or -1 outside [e.front(), e.back()).
std::int64_t bin_of(const std::vector<double>& e, double x) {
  if (!(x >= e.front()) || !(x < e.back())) return -1;
  const auto it = std::upper_bound(e.begin(), e.end(), x);
  return std::int64_t(it - e.begin()) - 1;
}

double cube_diff(double a, double b) { return (b * b * b - a * a * a) / 3.0; }

}  // namespace

// ---------------------------------------------------------------------------
// PhaseGrid

PhaseGrid PhaseGrid::uniform(std::size_t nr, std::size_t nw, std::size_t nc, double r_max,
                             double w_max) {
  if (nr < 1 || nw < 1 || nc < 1) throw std::invalid_argument("PhaseGrid: empty dimension");
  if (!(r_max > 0.0 && w_max > 0.0)) throw std::invalid_argument("PhaseGrid: bad extent");
  PhaseGrid g;
  g.r_edges = linspace(0.0, r_max, nr);
  g.w_edges = linspace(0.0, w_max, nw);
  g.c_edges = linspace(-1.0, 1.0, nc);
  return g;
}

void PhaseGrid::validate() const {
  check_increasing(r_edges, "r");
  check_increasing(w_edges, "w");
  check_increasing(c_edges, "c");
  if (r_edges.front() != 0.0 || w_edges.front() != 0.0) {
    throw std::invalid_argument("PhaseGrid: r and w edges must start at 0");
  }
  if (c_edges.front() != -1.0 || c_edges.back() != 1.0) {
    throw std::invalid_argument("PhaseGrid: c edges must span [-1, 1]");
  }
}

double PhaseGrid::volume(std::size_t ir, std::size_t iw, std::size_t ic) const {
  return 8.0 * kPi * kPi * cube_diff(r_edges[ir], r_edges[ir + 1]) *
         cube_diff(w_edges[iw], w_edges[iw + 1]) * (c_edges[ic + 1] - c_edges[ic]);
}

double PhaseGrid::shell_volume(std::size_t ir) const {
  return 4.0 * kPi * cube_diff(r_edges[ir], r_edges[ir + 1]);
}

double PhaseGrid::velocity_volume(std::size_t iw, std::size_t ic) const {
  return 2.0 * kPi * cube_diff(w_edges[iw], w_edges[iw + 1]) * (c_edges[ic + 1] - c_edges[ic]);
}

double PhaseGrid::mean_half_w2(std::size_t iw) const {
  const double a = w_edges[iw], b = w_edges[iw + 1];
  const double a5 = std::pow(a, 5), b5 = std::pow(b, 5);
  return 0.5 * 0.6 * (b5 - a5) / (b * b * b - a * a * a);
}

PhaseGrid default_phase_grid(const EquilibriumModel& model) {
  return PhaseGrid::uniform(64, 64, 32, 1.5 * model.R, 1.2 * std::sqrt(2.0 * std::abs(model.phi_c)));
}

// ---------------------------------------------------------------------------
// Binning

GriddedF bin_model(const EquilibriumModel& model, const PhaseGrid& grid) {
  grid.validate();
  GriddedF g;
  g.grid = grid;
  g.values.assign(grid.cells(), 0.0);
  const GaussRule rule = gauss_legendre(6);
  const std::size_t nr = grid.nr(), nw = grid.nw(), nc = grid.nc();
#pragma omp parallel for schedule(static)
  for (std::int64_t iri = 0; iri < std::int64_t(nr); ++iri) {
    const std::size_t ir = std::size_t(iri);
    const double r0 = grid.r_edges[ir], r1 = grid.r_edges[ir + 1];
    std::vector<double> rr(rule.nodes.size()), phir(rule.nodes.size()), wr(rule.nodes.size());
    for (std::size_t a = 0; a < rule.nodes.size(); ++a) {
      rr[a] = 0.5 * (r0 + r1) + 0.5 * (r1 - r0) * rule.nodes[a];
      phir[a] = model.phi(rr[a]);
      wr[a] = rule.weights[a] * rr[a] * rr[a];
    }
    for (std::size_t iw = 0; iw < nw; ++iw) {
      const double w0 = grid.w_edges[iw], w1 = grid.w_edges[iw + 1];
      double num = 0.0, den = 0.0;
      for (std::size_t b = 0; b < rule.nodes.size(); ++b) {
        const double w = 0.5 * (w0 + w1) + 0.5 * (w1 - w0) * rule.nodes[b];
        const double ww = rule.weights[b] * w * w;
        for (std::size_t a = 0; a < rule.nodes.size(); ++a) {
          num += wr[a] * ww * eval_F(model, 0.5 * w * w + phir[a]);
          den += wr[a] * ww;
        }
      }
      const double avg = den > 0.0 ? num / den : 0.0;
      for (std::size_t ic = 0; ic < nc; ++ic) g.values[grid.index(ir, iw, ic)] = avg;
    }
  }
  return g;
}

GriddedF bin_ensemble(const ParticleEnsemble& e, const PhaseGrid& grid, const Vec3& center) {
  grid.validate();
  const std::size_t N = e.size();
  std::vector<std::int64_t> cell(N, -1);
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < std::int64_t(N); ++ii) {
    const std::size_t i = std::size_t(ii);
    const Vec3 y{e.x[i][0] - center[0], e.x[i][1] - center[1], e.x[i][2] - center[2]};
    const double r = std::sqrt(dot(y, y));
    const double w = std::sqrt(dot(e.v[i], e.v[i]));
    double c = (r > 0.0 && w > 0.0) ? dot(y, e.v[i]) / (r * w) : 0.0;
    c = std::clamp(c, -1.0, 1.0);
    const std::int64_t ir = bin_of(grid.r_edges, r);
    const std::int64_t iw = bin_of(grid.w_edges, w);
    std::int64_t ic = bin_of(grid.c_edges, c);
    if (c == 1.0) ic = std::int64_t(grid.nc()) - 1;
    if (ir >= 0 && iw >= 0 && ic >= 0) {
      cell[i] = std::int64_t(grid.index(std::size_t(ir), std::size_t(iw), std::size_t(ic)));
    }
  }
  GriddedF g;
  g.grid = grid;
  g.center = center;
  std::vector<double> mass(grid.cells(), 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    if (cell[i] >= 0) {
      mass[std::size_t(cell[i])] += e.w[i];
    } else {
      g.outside_mass += e.w[i];
      g.outside_weighted += e.w[i] * (1.0 + dot(e.v[i], e.v[i]));
    }
  }
  g.values.resize(grid.cells());
  for (std::size_t ir = 0; ir < grid.nr(); ++ir)
    for (std::size_t iw = 0; iw < grid.nw(); ++iw)
      for (std::size_t ic = 0; ic < grid.nc(); ++ic) {
        const std::size_t k = grid.index(ir, iw, ic);
        g.values[k] = mass[k] / grid.volume(ir, iw, ic);
      }
  return g;
}

GriddedF to_gridded(const DistributionView& f) {
  if (const auto* a = std::get_if<AnalyticF>(&f)) {
    return bin_model(*a->model, default_phase_grid(*a->model));
  }
  if (const auto* s = std::get_if<EnsembleF>(&f)) {
    return bin_ensemble(*s->ensemble, s->grid, s->center);
  }
  return std::get<GriddedF>(f);
}

// ---------------------------------------------------------------------------
// Shell potentials

ShellField shell_field(std::vector<double> edges, std::vector<double> rho) {
  if (edges.size() != rho.size() + 1 || rho.empty()) {
    throw std::invalid_argument("shell_field: size mismatch");
  }
  check_increasing(edges, "shell");
  if (edges.front() != 0.0) throw std::invalid_argument("shell_field: edges must start at 0");
  ShellField s;
  s.edges = std::move(edges);
  s.rho = std::move(rho);
  const std::size_t n = s.rho.size();
  s.m_edge.assign(n + 1, 0.0);
  s.tail.assign(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    s.m_edge[i + 1] = s.m_edge[i] + 4.0 * kPi * s.rho[i] * cube_diff(s.edges[i], s.edges[i + 1]);
  }
  for (std::size_t i = n; i-- > 0;) {
    const double a = s.edges[i], b = s.edges[i + 1];
    s.tail[i] = s.tail[i + 1] + 0.5 * s.rho[i] * (b * b - a * a);
  }
  s.M = s.m_edge.back();
  return s;
}

namespace {

/// Shell index and enclosed mass at r inside the shell field.
double enclosed(const ShellField& s, double r, std::size_t& shell) {
  const auto it = std::upper_bound(s.edges.begin(), s.edges.end(), r);
  shell = std::size_t(std::max<std::ptrdiff_t>(0, (it - s.edges.begin()) - 1));
  const double a = s.edges[shell];
  return s.m_edge[shell] + 4.0 * kPi * s.rho[shell] * cube_diff(a, r);
}

}  // namespace

double ShellField::phi(double r) const {
  if (r >= edges.back()) return -M / (4.0 * kPi * r);
  std::size_t i = 0;
  const double m = enclosed(*this, r, i);
  const double b = edges[i + 1];
  const double outer = tail[i + 1] + 0.5 * rho[i] * (b * b - r * r);
  const double inner = r > 0.0 ? m / (4.0 * kPi * r) : 0.0;
  return -inner - outer;
}

double ShellField::dphi(double r) const {
  if (r >= edges.back()) return M / (4.0 * kPi * r * r);
  if (r <= 0.0) return 0.0;
  std::size_t i = 0;
  const double m = enclosed(*this, r, i);
  return m / (4.0 * kPi * r * r);
}

double ShellField::shell_average_phi(std::size_t i) const {
  const double a = edges[i], b = edges[i + 1];
  const double B = 4.0 * kPi * rho[i] / 3.0;
  const double A = m_edge[i] - B * a * a * a;
  const double b5a5 = std::pow(b, 5) - std::pow(a, 5);
  const double integral = -(A * 0.5 * (b * b - a * a) + B * b5a5 / 5.0) / (4.0 * kPi) -
                          (tail[i + 1] + 0.5 * rho[i] * b * b) * cube_diff(a, b) +
                          rho[i] * b5a5 / 10.0;
  return integral / cube_diff(a, b);
}

double ShellField::gradient_norm2() const { return gradient_inner(*this, *this); }

double gradient_inner(const ShellField& p, const ShellField& q) {
  if (p.edges != q.edges) throw std::invalid_argument("gradient_inner: different shell edges");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.rho.size(); ++i) {
    const double a = p.edges[i], b = p.edges[i + 1];
    const double Bp = 4.0 * kPi * p.rho[i] / 3.0, Bq = 4.0 * kPi * q.rho[i] / 3.0;
    const double Ap = p.m_edge[i] - Bp * a * a * a, Aq = q.m_edge[i] - Bq * a * a * a;
    double term = (Ap * Bq + Aq * Bp) * 0.5 * (b * b - a * a) +
                  Bp * Bq * (std::pow(b, 5) - std::pow(a, 5)) / 5.0;
    if (a > 0.0) term += Ap * Aq * (1.0 / a - 1.0 / b);
    sum += term;
  }
  sum += p.M * q.M / p.edges.back();
  return sum / (4.0 * kPi);
}

std::vector<double> shell_density(const GriddedF& f) {
  const PhaseGrid& g = f.grid;
  std::vector<double> rho(g.nr(), 0.0);
  for (std::size_t ir = 0; ir < g.nr(); ++ir) {
    double m = 0.0;
    for (std::size_t iw = 0; iw < g.nw(); ++iw)
      for (std::size_t ic = 0; ic < g.nc(); ++ic)
        m += f.values[g.index(ir, iw, ic)] * g.volume(ir, iw, ic);
    rho[ir] = m / g.shell_volume(ir);
  }
  return rho;
}

// ---------------------------------------------------------------------------
// Moments and energies

RadialProfile spatial_density(const DistributionView& f, const RadialGrid& grid) {
  const std::size_t n = grid.size();
  std::vector<double> values(n, 0.0);
  if (const auto* a = std::get_if<AnalyticF>(&f)) {
    const EquilibriumModel& m = *a->model;
    std::vector<double> slopes(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = m.depth(grid[i]);
      values[i] = m.law.density(u);
      if (u > 0.0) slopes[i] = -m.law.density_derivative(u) * m.dphi(grid[i]);
    }
    return RadialProfile(grid, values, Extrapolation::zero, slopes);
  }
  const GriddedF g = to_gridded(f);
  const std::vector<double> rho = shell_density(g);
  const auto& e = g.grid.r_edges;
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t k = bin_of(e, grid[i]);
    if (k >= 0) values[i] = rho[std::size_t(k)];
  }
  return RadialProfile(grid, values, Extrapolation::zero);
}

double shell_potential_energy(const ParticleEnsemble& e, const Vec3& center) {
  const std::size_t N = e.size();
  std::vector<double> r(N);
  for (std::size_t i = 0; i < N; ++i) {
    const Vec3 y{e.x[i][0] - center[0], e.x[i][1] - center[1], e.x[i][2] - center[2]};
    r[i] = std::sqrt(dot(y, y));
  }
  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), std::size_t(0));
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return r[a] < r[b]; });
  double before = 0.0, energy = 0.0;
  std::size_t k = 0;
  while (k < N) {
    std::size_t j = k;
    double group = 0.0, squares = 0.0;
    while (j < N && r[order[j]] == r[order[k]]) {
      const double w = e.w[order[j++]];
      group += w;
      squares += w * w;
    }
    const double rr = r[order[k]];
    if (rr > 0.0) energy += (group * before + 0.5 * (group * group - squares)) / (4.0 * kPi * rr);
    before += group;
    k = j;
  }
  return energy;
}

namespace {

double gridded_casimir(const GriddedF& g, const std::function<double(double)>& C) {
  double s = 0.0;
  for (std::size_t ir = 0; ir < g.grid.nr(); ++ir)
    for (std::size_t iw = 0; iw < g.grid.nw(); ++iw)
      for (std::size_t ic = 0; ic < g.grid.nc(); ++ic) {
        const double v = g.values[g.grid.index(ir, iw, ic)];
        if (v != 0.0) s += g.grid.volume(ir, iw, ic) * C(v);
      }
  return s;
}

double gridded_kinetic(const GriddedF& g) {
  double s = 0.0;
  for (std::size_t ir = 0; ir < g.grid.nr(); ++ir)
    for (std::size_t iw = 0; iw < g.grid.nw(); ++iw) {
      const double e = g.grid.mean_half_w2(iw);
      for (std::size_t ic = 0; ic < g.grid.nc(); ++ic)
        s += g.grid.volume(ir, iw, ic) * g.values[g.grid.index(ir, iw, ic)] * e;
    }
  return s;
}

double gridded_max(const GriddedF& g) {
  double m = 0.0;
  for (double v : g.values) m = std::max(m, std::abs(v));
  return m;
}

double gridded_lp(const GriddedF& g, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp norm: p < 1 unsupported");
  if (std::isinf(p)) return gridded_max(g);
  return std::pow(gridded_casimir(g, [p](double t) { return std::pow(std::abs(t), p); }), 1.0 / p);
}

EnergyReport gridded_report(const GriddedF& g) {
  EnergyReport rep;
  rep.H_cin = gridded_kinetic(g);
  const ShellField s = shell_field(g.grid.r_edges, shell_density(g));
  rep.H_pot = 0.5 * s.gradient_norm2();
  rep.H = rep.H_cin - rep.H_pot;
  rep.mass = s.M;
  return rep;
}

}  // namespace

EnergyReport energy_report(const DistributionView& f) {
  EnergyReport rep;
  if (const auto* a = std::get_if<AnalyticF>(&f)) {
    const ModelEnergies e = model_energies(*a->model);
    rep.H_cin = e.H_cin;
    rep.H_pot = e.H_pot;
    rep.H = e.H;
    rep.mass = e.mass;
    for (double p : {1.0, 2.0}) rep.lp_norms[p] = model_lp_norm(*a->model, p);
    rep.lp_norms[std::numeric_limits<double>::infinity()] =
        model_lp_norm(*a->model, std::numeric_limits<double>::infinity());
    return rep;
  }
  const GriddedF g = to_gridded(f);
  if (const auto* s = std::get_if<EnsembleF>(&f)) {
    const ParticleEnsemble& e = *s->ensemble;
    double kin = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) kin += 0.5 * e.w[i] * dot(e.v[i], e.v[i]);
    rep.H_cin = kin;
    rep.H_pot = shell_potential_energy(e, s->center);
    rep.H = rep.H_cin - rep.H_pot;
    rep.mass = e.mass();
  } else {
    rep = gridded_report(g);
  }
  for (double p : {1.0, 2.0}) rep.lp_norms[p] = gridded_lp(g, p);
  rep.lp_norms[std::numeric_limits<double>::infinity()] = gridded_max(g);
  return rep;
}

double casimir(const DistributionView& f, const std::function<double(double)>& C) {
  if (C(0.0) != 0.0) throw std::invalid_argument("casimir: C(0) must vanish");
  if (const auto* a = std::get_if<AnalyticF>(&f)) {
    const EquilibriumModel& m = *a->model;
    auto CF = [&](double E) { return C(eval_F(m, E)); };
    return integrate_radial_function(m.rho.grid(), [&](double r) {
      return velocity_moment(CF, m.phi(r), m.E0, 0);
    });
  }
  return gridded_casimir(to_gridded(f), C);
}

double lp_norm(const DistributionView& f, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp norm: p < 1 unsupported");
  if (const auto* a = std::get_if<AnalyticF>(&f)) return model_lp_norm(*a->model, p);
  return gridded_lp(to_gridded(f), p);
}

InterpolationSides interpolation_check(const DistributionView& f, double p, bool potential) {
  if (!(p > 1.0)) throw std::invalid_argument("interpolation_check: p must exceed 1");
  if (potential && p <= 9.0 / 7.0) throw std::domain_error("supercritical exponent");
  const bool inf = std::isinf(p);
  const double q = inf ? 5.0 / 3.0 : (5.0 * p - 3.0) / (3.0 * p - 1.0);
  InterpolationSides out;
  double rho_q = 0.0, f1 = 0.0, fp = 0.0;
  EnergyReport rep;
  if (const auto* a = std::get_if<AnalyticF>(&f)) {
    const EquilibriumModel& m = *a->model;
    rho_q = integrate_radial_function(m.rho.grid(), [&](double r) {
      return std::pow(m.law.density(m.depth(r)), q);
    });
    const ModelEnergies e = model_energies(m);
    rep.H_cin = e.H_cin;
    rep.H_pot = e.H_pot;
    f1 = model_lp_norm(m, 1.0);
    fp = model_lp_norm(m, p);
  } else {
    const GriddedF g = to_gridded(f);
    const std::vector<double> rho = shell_density(g);
    for (std::size_t i = 0; i < rho.size(); ++i) rho_q += g.grid.shell_volume(i) * std::pow(rho[i], q);
    rep = energy_report(f);
    f1 = gridded_lp(g, 1.0);
    fp = gridded_lp(g, p);
  }
  out.lhs_rho = std::pow(rho_q, 1.0 / q);
  const double e_rho = inf ? 2.0 / 5.0 : 2.0 * p / (5.0 * p - 3.0);
  const double e_kin = inf ? 3.0 / 5.0 : (3.0 * p - 3.0) / (5.0 * p - 3.0);
  out.rhs_factor = std::pow(fp, e_rho) * std::pow(rep.H_cin, e_kin);
  if (potential) {
    const double e1 = inf ? 7.0 / 6.0 : (7.0 * p - 9.0) / (6.0 * (p - 1.0));
    const double ep = inf ? 1.0 / 3.0 : p / (3.0 * (p - 1.0));
    out.pot_lhs = rep.H_pot;
    out.pot_rhs_factor = std::pow(f1, e1) * std::pow(fp, ep) * std::sqrt(rep.H_cin);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Distances

double stability_distance(const DistributionView& f, const EquilibriumModel& model) {
  const GriddedF g = to_gridded(f);
  const GriddedF g0 = bin_model(model, g.grid);
  double l1 = g.outside_mass;
  for (std::size_t ir = 0; ir < g.grid.nr(); ++ir)
    for (std::size_t iw = 0; iw < g.grid.nw(); ++iw)
      for (std::size_t ic = 0; ic < g.grid.nc(); ++ic) {
        const std::size_t k = g.grid.index(ir, iw, ic);
        l1 += g.grid.volume(ir, iw, ic) * std::abs(g.values[k] - g0.values[k]);
      }
  const double H = energy_report(f).H;
  const double H0 = model_energies(model).H;
  return l1 + std::abs(H - H0);
}

double weighted_shift_distance(const ParticleEnsemble& e, const GriddedF& f0_binned,
                               const Vec3& z) {
  const GriddedF g = bin_ensemble(e, f0_binned.grid, z);
  const PhaseGrid& pg = g.grid;
  double d = g.outside_weighted;
  for (std::size_t ir = 0; ir < pg.nr(); ++ir)
    for (std::size_t iw = 0; iw < pg.nw(); ++iw) {
      const double weight = 1.0 + 2.0 * pg.mean_half_w2(iw);
      for (std::size_t ic = 0; ic < pg.nc(); ++ic) {
        const std::size_t k = pg.index(ir, iw, ic);
        d += pg.volume(ir, iw, ic) * weight * std::abs(g.values[k] - f0_binned.values[k]);
      }
    }
  return d;
}

double weighted_shift_distance(const ParticleEnsemble& e, const EquilibriumModel& model,
                               const Vec3& z, const PhaseGrid& grid) {
  return weighted_shift_distance(e, bin_model(model, grid), z);
}

Vec3 estimate_shift(const ParticleEnsemble& e) {
  const std::size_t N = e.size();
  if (N < 100) throw std::invalid_argument("undersampled");
  auto centroid = [&](const std::vector<std::size_t>& idx) {
    Vec3 c{0.0, 0.0, 0.0};
    double m = 0.0;
    for (std::size_t i : idx) {
      for (int k = 0; k < 3; ++k) c[k] += e.w[i] * e.x[i][k];
      m += e.w[i];
    }
    for (int k = 0; k < 3; ++k) c[k] /= m;
    return c;
  };
  std::vector<std::size_t> all(N);
  std::iota(all.begin(), all.end(), std::size_t(0));
  Vec3 c = centroid(all);
  const double total = e.mass();
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<double> d(N);
    for (std::size_t i = 0; i < N; ++i) {
      const Vec3 y{e.x[i][0] - c[0], e.x[i][1] - c[1], e.x[i][2] - c[2]};
      d[i] = dot(y, y);
    }
    std::vector<std::size_t> order = all;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
    std::vector<std::size_t> inner;
    double m = 0.0;
    for (std::size_t i : order) {
      if (m >= 0.9 * total) break;
      inner.push_back(i);
      m += e.w[i];
    }
    c = centroid(inner);
  }
  return c;
}

double binning_oscillation(const EquilibriumModel& model, const PhaseGrid& grid) {
  grid.validate();
  double s = 0.0;
  for (std::size_t ir = 0; ir < grid.nr(); ++ir) {
    const double p0 = model.phi(grid.r_edges[ir]), p1 = model.phi(grid.r_edges[ir + 1]);
    for (std::size_t iw = 0; iw < grid.nw(); ++iw) {
      const double w0 = grid.w_edges[iw], w1 = grid.w_edges[iw + 1];
      const double osc = eval_F(model, 0.5 * w0 * w0 + p0) - eval_F(model, 0.5 * w1 * w1 + p1);
      double v = 0.0;
      for (std::size_t ic = 0; ic < grid.nc(); ++ic) v += grid.volume(ir, iw, ic);
      s += v * std::abs(osc);
    }
  }
  return s;
}

GriddedF box_distribution(double h, double a, double b1, double b2, std::size_t nr) {
  if (!(h >= 0.0 && a > 0.0 && b1 >= 0.0 && b2 > b1) || nr < 1) {
    throw std::invalid_argument("box_distribution: bad parameters");
  }
  GriddedF g;
  g.grid.r_edges = linspace(0.0, a, nr);
  g.grid.w_edges = b1 > 0.0 ? std::vector<double>{0.0, b1, b2} : std::vector<double>{0.0, b2};
  g.grid.c_edges = {-1.0, 1.0};
  const std::size_t box = g.grid.nw() - 1;
  g.values.assign(g.grid.cells(), 0.0);
  for (std::size_t ir = 0; ir < g.grid.nr(); ++ir) g.values[g.grid.index(ir, box, 0)] = h;
  return g;
}

GriddedF symmetry_transform(const GriddedF& f, double gamma, double lambda, double mu,
                            const Vec3& x0) {
  if (!(gamma > 0.0 && lambda > 0.0 && mu > 0.0)) {
    throw std::invalid_argument("symmetry_transform: parameters must be positive");
  }
  GriddedF g = f;
  for (double& r : g.grid.r_edges) r *= lambda;
  for (double& w : g.grid.w_edges) w /= mu;
  for (double& v : g.values) v *= gamma;
  for (int k = 0; k < 3; ++k) g.center[k] = x0[k] + lambda * f.center[k];
  const double scale = gamma * std::pow(lambda, 3.0) * std::pow(mu, -3.0);
  g.outside_mass *= scale;
  g.outside_weighted *= scale;
  return g;
}

}  // namespace gravistab
