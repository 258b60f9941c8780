#include "gravistab/rearrangement.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gravistab {

namespace {

const double kPi = 3.14159265358979323846;

/// Radius where the (increasing) potential reaches E < 0.
double radius_at_energy(const RadialProfile& phi, double E) {
  const double rmax = phi.r_max();
  const double pmax = phi(rmax);
  if (E >= pmax) return pmax * rmax / E;  // exterior -M/(4 pi r)
  double lo = 0.0, hi = rmax;
  if (E <= phi(0.0)) return 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * rmax; ++it) {
    const double mid = 0.5 * (lo + hi);
    (phi(mid) < E ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double phi_min(const RadialProfile& phi) {
  double m = phi(0.0);
  for (double v : phi.values()) m = std::min(m, v);
  return m;
}

}  // namespace

double LevelProfile::decreasing(double V) const {
  if (V >= volume(s_min)) return 0.0;
  return monotone_invert(volume, V).x;
}

double energy_volume(const RadialProfile& phi, double E) {
  if (!(E < 0.0)) throw std::domain_error("energy_volume: E must be negative");
  const double rE = radius_at_energy(phi, E);
  if (rE <= 0.0) return 0.0;
  // r = rE (1 - t^2) removes the (rE - r)^{3/2} endpoint behaviour.
  const GaussRule& g = gauss4();
  const int panels = 48;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double a = double(p) / panels, b = double(p + 1) / panels;
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
      const double t = 0.5 * (a + b) + 0.5 * (b - a) * g.nodes[k];
      const double r = rE * (1.0 - t * t);
      const double d = std::max(0.0, 2.0 * (E - phi(r)));
      sum += 0.5 * (b - a) * g.weights[k] * r * r * d * std::sqrt(d) * 2.0 * rE * t;
    }
  }
  return 16.0 * kPi * kPi / 3.0 * sum;
}

MonotoneMap energy_volume_map(const RadialProfile& phi, double E_max, std::size_t n) {
  const double E_min = phi_min(phi);
  if (!(E_max > E_min)) throw std::invalid_argument("energy_volume_map: empty energy range");
  if (n < 2) throw std::invalid_argument("energy_volume_map: need two samples");
  std::vector<double> E(n), V(n);
  for (std::size_t k = 0; k < n; ++k) {
    // Quadratic clustering near the bottom where the volume grows fastest.
    const double t = double(k) / double(n - 1);
    E[k] = E_min + (E_max - E_min) * t * t;
  }
  E.back() = E_max;
#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < std::int64_t(n); ++k) V[std::size_t(k)] = energy_volume(phi, E[std::size_t(k)]);
  for (std::size_t k = 1; k < n; ++k) V[k] = std::max(V[k], V[k - 1]);
  return MonotoneMap(E, V, Direction::increasing);
}

LevelProfile level_profile(const DistributionView& f, std::size_t n_levels) {
  if (n_levels < 2) throw std::invalid_argument("level_profile: need two levels");
  LevelProfile lp;
  std::vector<double> s(n_levels), vol(n_levels);
  auto levels = [&](double smax) {
    for (std::size_t k = 0; k < n_levels; ++k) {
      s[k] = smax * std::pow(10.0, -6.0 + 6.0 * double(k) / double(n_levels - 1));
    }
    s.back() = smax;
  };
  if (const auto* a = std::get_if<AnalyticF>(&f)) {
    const EquilibriumModel& m = *a->model;
    lp.s_max = m.law.F_depth(m.u_c);
    levels(lp.s_max);
#pragma omp parallel for schedule(static)
    for (std::int64_t kk = 0; kk < std::int64_t(n_levels); ++kk) {
      const std::size_t k = std::size_t(kk);
      double lo = 0.0, hi = m.u_c;
      for (int it = 0; it < 200 && hi - lo > 1e-15 * m.u_c; ++it) {
        const double mid = 0.5 * (lo + hi);
        (m.law.F_depth(mid) < s[k] ? lo : hi) = mid;
      }
      const double depth = 0.5 * (lo + hi);
      vol[k] = k + 1 == n_levels ? 0.0 : energy_volume(m.phi, m.E0 - depth);
    }
    lp.mass = m.M;
    lp.support_volume = energy_volume(m.phi, m.E0);
  } else {
    const GriddedF g = to_gridded(f);
    const PhaseGrid& pg = g.grid;
    std::vector<std::pair<double, double>> cells;
    cells.reserve(pg.cells());
    for (std::size_t ir = 0; ir < pg.nr(); ++ir)
      for (std::size_t iw = 0; iw < pg.nw(); ++iw)
        for (std::size_t ic = 0; ic < pg.nc(); ++ic) {
          const double v = g.values[pg.index(ir, iw, ic)];
          const double V = pg.volume(ir, iw, ic);
          lp.mass += v * V;
          if (v > 0.0) {
            lp.support_volume += V;
            cells.emplace_back(v, V);
          }
        }
    if (cells.empty()) throw std::invalid_argument("level_profile: f vanishes");
    std::sort(cells.begin(), cells.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
    lp.s_max = cells.front().first;
    levels(lp.s_max);
    // vol(s) = total volume of cells with value >= s; walk levels downward.
    std::size_t j = 0;
    double acc = 0.0;
    for (std::size_t k = n_levels; k-- > 0;) {
      while (j < cells.size() && cells[j].first >= s[k]) acc += cells[j++].second;
      vol[k] = acc;
    }
  }
  for (std::size_t k = n_levels - 1; k-- > 0;) vol[k] = std::max(vol[k], vol[k + 1]);
  lp.s_min = s.front();
  lp.volume = MonotoneMap(s, vol, Direction::decreasing);
  return lp;
}

std::vector<double> cell_energies(const PhaseGrid& grid, const RadialProfile& phi) {
  grid.validate();
  const GaussRule rule = gauss_legendre(6);
  std::vector<double> E(grid.cells());
  for (std::size_t ir = 0; ir < grid.nr(); ++ir) {
    const double a = grid.r_edges[ir], b = grid.r_edges[ir + 1];
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      const double r = 0.5 * (a + b) + 0.5 * (b - a) * rule.nodes[k];
      num += rule.weights[k] * r * r * phi(r);
      den += rule.weights[k] * r * r;
    }
    const double shell_phi = num / den;
    for (std::size_t iw = 0; iw < grid.nw(); ++iw)
      for (std::size_t ic = 0; ic < grid.nc(); ++ic)
        E[grid.index(ir, iw, ic)] = grid.mean_half_w2(iw) + shell_phi;
  }
  return E;
}

GriddedF rearrange_by_energy(const GriddedF& f, const std::vector<double>& energies) {
  const PhaseGrid& pg = f.grid;
  const std::size_t n = pg.cells();
  if (energies.size() != n || f.values.size() != n) {
    throw std::invalid_argument("rearrange_by_energy: size mismatch");
  }
  std::vector<double> vol(n);
  for (std::size_t ir = 0; ir < pg.nr(); ++ir)
    for (std::size_t iw = 0; iw < pg.nw(); ++iw)
      for (std::size_t ic = 0; ic < pg.nc(); ++ic) vol[pg.index(ir, iw, ic)] = pg.volume(ir, iw, ic);

  // Decreasing rearrangement as a step function with cumulative volume and mass.
  std::vector<std::size_t> by_value(n);
  std::iota(by_value.begin(), by_value.end(), std::size_t(0));
  std::stable_sort(by_value.begin(), by_value.end(),
                   [&](std::size_t a, std::size_t b) { return f.values[a] > f.values[b]; });
  std::vector<double> cumV(n + 1, 0.0), cumM(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    cumV[k + 1] = cumV[k] + vol[by_value[k]];
    cumM[k + 1] = cumM[k] + vol[by_value[k]] * f.values[by_value[k]];
  }
  auto primitive = [&](double x) {
    if (x >= cumV[n]) return cumM[n];
    const std::size_t k = std::size_t(std::upper_bound(cumV.begin(), cumV.end(), x) - cumV.begin()) - 1;
    return cumM[k] + f.values[by_value[k]] * (x - cumV[k]);
  };

  std::vector<std::size_t> by_energy(n);
  std::iota(by_energy.begin(), by_energy.end(), std::size_t(0));
  std::stable_sort(by_energy.begin(), by_energy.end(),
                   [&](std::size_t a, std::size_t b) { return energies[a] < energies[b]; });
  GriddedF out = f;
  double start = 0.0, m_start = 0.0;
  std::size_t k = 0;
  while (k < n) {
    std::size_t j = k;
    double V = 0.0;
    while (j < n && energies[by_energy[j]] == energies[by_energy[k]]) V += vol[by_energy[j++]];
    const double end = std::min(start + V, cumV[n]);
    const double m_end = primitive(end);
    const double value = V > 0.0 ? (m_end - m_start) / V : 0.0;
    for (std::size_t q = k; q < j; ++q) out.values[by_energy[q]] = value;
    start += V;
    m_start = m_end;
    k = j;
  }
  return out;
}

GriddedF rearrange_by_energy(const DistributionView& f, const RadialProfile& phi) {
  const GriddedF g = to_gridded(f);
  return rearrange_by_energy(g, cell_energies(g.grid, phi));
}

EnergyLemmaSides rearrangement_energy_lemma_check(const DistributionView& f,
                                                  const RadialProfile& phi) {
  const GriddedF g = to_gridded(f);
  const std::vector<double> E = cell_energies(g.grid, phi);
  const GriddedF h = rearrange_by_energy(g, E);
  const PhaseGrid& pg = g.grid;
  EnergyLemmaSides s;
  for (std::size_t ir = 0; ir < pg.nr(); ++ir)
    for (std::size_t iw = 0; iw < pg.nw(); ++iw)
      for (std::size_t ic = 0; ic < pg.nc(); ++ic) {
        const std::size_t k = pg.index(ir, iw, ic);
        const double V = pg.volume(ir, iw, ic);
        s.rearranged += V * h.values[k] * E[k];
        s.original += V * g.values[k] * E[k];
      }
  return s;
}

double reduced_functional(const LevelProfile& levels, const RadialProfile& phi) {
  const double V_top = levels.volume(levels.s_min);
  const double E_min = phi_min(phi);
  // Energy whose sublevel set has the volume of the lowest sampled level.
  double lo = E_min, hi = 0.5 * E_min;
  while (energy_volume(phi, hi) < V_top) {
    lo = hi;
    hi *= 0.5;
    if (hi > -1e-300) throw std::domain_error("reduced_functional: level volume too large");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::abs(E_min); ++it) {
    const double mid = 0.5 * (lo + hi);
    (energy_volume(phi, mid) < V_top ? lo : hi) = mid;
  }
  const double E_top = hi;
  const MonotoneMap mu = energy_volume_map(phi, E_top, 2048);
  auto g = [&](double E) { return E >= E_top ? 0.0 : levels.decreasing(mu(E)); };

  const double r_top = radius_at_energy(phi, E_top);
  const RadialGrid grid = RadialGrid::refined(1024, r_top);
  std::vector<double> rho(grid.size(), 0.0);
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < std::int64_t(grid.size()); ++ii) {
    const std::size_t i = std::size_t(ii);
    rho[i] = velocity_moment(g, phi(grid[i]), E_top, 0);
  }
  const RadialProfile rho_star(grid, rho, Extrapolation::zero);
  const PoissonSolution star = solve_radial_poisson(rho_star);
  const double H_cin = 0.5 * integrate_radial_function(grid, [&](double r) {
    return velocity_moment(g, phi(r), E_top, 2);
  });

  const double r_end = std::max(r_top, phi.r_max());
  const RadialGrid outer = RadialGrid::uniform(2048, r_end);
  auto diff = [&](double r) { return phi.derivative(r) - star.dphi(r); };
  double cross = integrate_radial_function(outer, [&](double r) {
    const double d = diff(r);
    return d * d;
  });
  const double c = r_end * r_end * diff(r_end);
  cross += 4.0 * kPi * c * c / r_end;
  return H_cin - star.H_pot + 0.5 * cross;
}

MonotonicityChain monotonicity_chain(const DistributionView& f) {
  const GriddedF g = to_gridded(f);
  const PhaseGrid& pg = g.grid;
  const std::vector<double> rho = shell_density(g);
  const ShellField field = shell_field(pg.r_edges, rho);
  std::vector<double> E(pg.cells());
  for (std::size_t ir = 0; ir < pg.nr(); ++ir) {
    const double shell_phi = field.shell_average_phi(ir);
    for (std::size_t iw = 0; iw < pg.nw(); ++iw)
      for (std::size_t ic = 0; ic < pg.nc(); ++ic) E[pg.index(ir, iw, ic)] = pg.mean_half_w2(iw) + shell_phi;
  }
  const GriddedF h = rearrange_by_energy(g, E);
  const std::vector<double> rho_h = shell_density(h);
  std::vector<double> drho(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) drho[i] = rho[i] - rho_h[i];
  const ShellField field_h = shell_field(pg.r_edges, rho_h);
  const ShellField delta = shell_field(pg.r_edges, drho);

  double kin_f = 0.0, kin_h = 0.0;
  for (std::size_t ir = 0; ir < pg.nr(); ++ir)
    for (std::size_t iw = 0; iw < pg.nw(); ++iw) {
      const double e = pg.mean_half_w2(iw);
      for (std::size_t ic = 0; ic < pg.nc(); ++ic) {
        const std::size_t k = pg.index(ir, iw, ic);
        const double V = pg.volume(ir, iw, ic);
        kin_f += V * g.values[k] * e;
        kin_h += V * h.values[k] * e;
      }
    }
  MonotonicityChain c;
  c.H_f = kin_f - 0.5 * field.gradient_norm2();
  c.H_hat = kin_h - 0.5 * field_h.gradient_norm2();
  c.J = c.H_hat + 0.5 * delta.gradient_norm2();
  return c;
}

namespace {

/// (value, volume) steps of the decreasing rearrangement, positive values only.
std::vector<std::pair<double, double>> decreasing_steps(const GriddedF& f) {
  const PhaseGrid& g = f.grid;
  std::vector<std::pair<double, double>> steps;
  for (std::size_t ir = 0; ir < g.nr(); ++ir)
    for (std::size_t iw = 0; iw < g.nw(); ++iw)
      for (std::size_t ic = 0; ic < g.nc(); ++ic) {
        const double v = f.values[g.index(ir, iw, ic)];
        if (v > 0.0) steps.emplace_back(v, g.volume(ir, iw, ic));
      }
  std::sort(steps.begin(), steps.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  return steps;
}

}  // namespace

double level_profile_distance(const GriddedF& a, const GriddedF& b) {
  const auto sa = decreasing_steps(a), sb = decreasing_steps(b);
  std::size_t i = 0, j = 0;
  double left_a = i < sa.size() ? sa[0].second : 0.0, left_b = j < sb.size() ? sb[0].second : 0.0;
  double d = 0.0;
  while (i < sa.size() || j < sb.size()) {
    const double va = i < sa.size() ? sa[i].first : 0.0, vb = j < sb.size() ? sb[j].first : 0.0;
    double step;
    if (i < sa.size() && j < sb.size()) step = std::min(left_a, left_b);
    else step = i < sa.size() ? left_a : left_b;
    d += std::abs(va - vb) * step;
    if (i < sa.size() && (left_a -= step) <= 0.0 && ++i < sa.size()) left_a = sa[i].second;
    if (j < sb.size() && (left_b -= step) <= 0.0 && ++j < sb.size()) left_b = sb[j].second;
  }
  return d;
}

}  // namespace gravistab
