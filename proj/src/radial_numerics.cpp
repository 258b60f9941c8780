#include "gravistab/radial_numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gravistab {

namespace {

constexpr double kPi = std::numbers::pi;

int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

void check_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) throw std::domain_error("non-finite profile");
  }
}

}  // namespace

GaussRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // Recompute the derivative at the converged node for the weight.
    double p0 = 1.0, p1 = z;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = (n == 1) ? 1.0 : n * (z * p1 - p0) / (z * z - 1.0);
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

const GaussRule& gauss4() {
  static const GaussRule rule = gauss_legendre(4);
  return rule;
}

// ---------------------------------------------------------------------------
// RadialGrid

RadialGrid::RadialGrid(std::vector<double> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.size() < 16) throw std::invalid_argument("RadialGrid: need at least 16 nodes");
  if (nodes_.front() != 0.0) throw std::invalid_argument("RadialGrid: first node must be 0");
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (!(nodes_[i] > nodes_[i - 1]) || !std::isfinite(nodes_[i])) {
      throw std::invalid_argument("RadialGrid: nodes must be strictly increasing");
    }
  }
}

RadialGrid RadialGrid::uniform(std::size_t n, double r_max) {
  if (n < 16 || !(r_max > 0.0)) throw std::invalid_argument("RadialGrid::uniform: bad size");
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = r_max * double(i) / double(n - 1);
  r.back() = r_max;
  return RadialGrid(std::move(r));
}

RadialGrid RadialGrid::refined(std::size_t n, double r_max, double outer_fraction,
                               int factor) {
  if (n < 16 || !(r_max > 0.0) || !(outer_fraction > 0.0 && outer_fraction < 1.0) ||
      factor < 1) {
    throw std::invalid_argument("RadialGrid::refined: bad parameters");
  }
  const double cells = double(n - 1);
  const double inner_share = (1.0 - outer_fraction) / ((1.0 - outer_fraction) + outer_fraction * factor);
  std::size_t n_in = std::size_t(std::lround(cells * inner_share));
  n_in = std::clamp<std::size_t>(n_in, 1, n - 2);
  const std::size_t n_out = n - 1 - n_in;
  const double r_split = (1.0 - outer_fraction) * r_max;
  std::vector<double> r(n);
  for (std::size_t i = 0; i <= n_in; ++i) r[i] = r_split * double(i) / double(n_in);
  for (std::size_t j = 1; j <= n_out; ++j) {
    r[n_in + j] = r_split + (r_max - r_split) * double(j) / double(n_out);
  }
  r.back() = r_max;
  return RadialGrid(std::move(r));
}

std::size_t RadialGrid::cell_of(double r) const {
  if (r <= nodes_.front()) return 0;
  if (r >= nodes_.back()) return nodes_.size() - 2;
  const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), r);
  return std::size_t(it - nodes_.begin()) - 1;
}

const char* to_string(Extrapolation e) {
  switch (e) {
    case Extrapolation::zero: return "zero";
    case Extrapolation::inverse_r: return "inverse_r";
    case Extrapolation::inverse_r2: return "inverse_r2";
  }
  return "zero";
}

Extrapolation extrapolation_from_string(const std::string& s) {
  if (s == "zero") return Extrapolation::zero;
  if (s == "inverse_r") return Extrapolation::inverse_r;
  if (s == "inverse_r2") return Extrapolation::inverse_r2;
  throw std::invalid_argument("unknown extrapolation tag: " + s);
}

// ---------------------------------------------------------------------------
// Hermite interpolation

std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  std::vector<double> d(n, 0.0);
  if (n < 2) return d;
  std::vector<double> h(n - 1), del(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    h[k] = x[k + 1] - x[k];
    del[k] = (y[k + 1] - y[k]) / h[k];
  }
  if (n == 2) {
    d[0] = d[1] = del[0];
    return d;
  }
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (sign_of(del[k - 1]) * sign_of(del[k]) <= 0) {
      d[k] = 0.0;
    } else {
      const double w1 = 2.0 * h[k] + h[k - 1];
      const double w2 = h[k] + 2.0 * h[k - 1];
      d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
    }
  }
  auto end_slope = [](double h0, double h1, double m0, double m1) {
    double s = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if (sign_of(s) != sign_of(m0)) {
      s = 0.0;
    } else if (sign_of(m0) != sign_of(m1) && std::abs(s) > 3.0 * std::abs(m0)) {
      s = 3.0 * m0;
    }
    return s;
  };
  d[0] = end_slope(h[0], h[1], del[0], del[1]);
  d[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
  return d;
}

double hermite_eval(double x0, double x1, double y0, double y1, double d0, double d1,
                    double x) {
  const double h = x1 - x0;
  const double t = (x - x0) / h;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
  const double h10 = t3 - 2.0 * t2 + t;
  const double h01 = -2.0 * t3 + 3.0 * t2;
  const double h11 = t3 - t2;
  return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
}

double hermite_derivative(double x0, double x1, double y0, double y1, double d0, double d1,
                          double x) {
  const double h = x1 - x0;
  const double t = (x - x0) / h;
  const double t2 = t * t;
  const double dh00 = (6.0 * t2 - 6.0 * t) / h;
  const double dh10 = 3.0 * t2 - 4.0 * t + 1.0;
  const double dh01 = (-6.0 * t2 + 6.0 * t) / h;
  const double dh11 = 3.0 * t2 - 2.0 * t;
  return dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1;
}

// ---------------------------------------------------------------------------
// RadialProfile

RadialProfile::RadialProfile(RadialGrid grid, std::vector<double> values,
                             Extrapolation extrapolation, std::vector<double> slopes)
    : grid_(std::move(grid)),
      values_(std::move(values)),
      slopes_(std::move(slopes)),
      extrapolation_(extrapolation) {
  if (values_.size() != grid_.size()) {
    throw std::invalid_argument("RadialProfile: values length must equal grid length");
  }
  if (slopes_.empty()) {
    slopes_ = pchip_slopes(grid_.nodes(), values_);
  } else {
    if (slopes_.size() != grid_.size()) {
      throw std::invalid_argument("RadialProfile: slopes length must equal grid length");
    }
    exact_slopes_ = true;
  }
}

double RadialProfile::operator()(double r) const {
  const double rm = grid_.r_max();
  if (r > rm) {
    switch (extrapolation_) {
      case Extrapolation::zero: return 0.0;
      case Extrapolation::inverse_r: return values_.back() * rm / r;
      case Extrapolation::inverse_r2: return values_.back() * (rm / r) * (rm / r);
    }
  }
  if (r <= 0.0) return values_.front();
  const std::size_t i = grid_.cell_of(r);
  const auto& x = grid_.nodes();
  return hermite_eval(x[i], x[i + 1], values_[i], values_[i + 1], slopes_[i], slopes_[i + 1], r);
}

double RadialProfile::derivative(double r) const {
  const double rm = grid_.r_max();
  if (r > rm) {
    switch (extrapolation_) {
      case Extrapolation::zero: return 0.0;
      case Extrapolation::inverse_r: return -values_.back() * rm / (r * r);
      case Extrapolation::inverse_r2: return -2.0 * values_.back() * rm * rm / (r * r * r);
    }
  }
  if (r <= 0.0) return slopes_.front();
  const std::size_t i = grid_.cell_of(r);
  const auto& x = grid_.nodes();
  return hermite_derivative(x[i], x[i + 1], values_[i], values_[i + 1], slopes_[i],
                            slopes_[i + 1], r);
}

// ---------------------------------------------------------------------------
// Quadrature and Poisson solve

double integrate_radial(const RadialProfile& p, const std::function<double(double)>& weight) {
  check_finite(p.values());
  const auto& g = gauss4();
  const auto& r = p.grid().nodes();
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < r.size(); ++i) {
    const double a = r[i], b = r[i + 1];
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    double cell = 0.0;
    for (std::size_t q = 0; q < g.nodes.size(); ++q) {
      const double s = mid + half * g.nodes[q];
      const double wt = weight ? weight(s) : 1.0;
      cell += g.weights[q] * s * s * wt * p(s);
    }
    total += half * cell;
  }
  return 4.0 * kPi * total;
}

double integrate_radial_function(const RadialGrid& grid, const std::function<double(double)>& g) {
  const auto& rule = gauss4();
  const auto& r = grid.nodes();
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < r.size(); ++i) {
    const double half = 0.5 * (r[i + 1] - r[i]), mid = 0.5 * (r[i] + r[i + 1]);
    double cell = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double s = mid + half * rule.nodes[q];
      cell += rule.weights[q] * s * s * g(s);
    }
    total += half * cell;
  }
  return 4.0 * kPi * total;
}

namespace {

PoissonSolution poisson_impl(const RadialProfile& rho) {
  check_finite(rho.values());
  const auto& g = gauss4();
  const RadialGrid& grid = rho.grid();
  const auto& r = grid.nodes();
  const std::size_t n = r.size();

  // m(r_i) = 4 pi int_0^{r_i} s^2 rho ds and T(r_i) = int_{r_i}^{r_max} s rho ds.
  std::vector<double> m(n, 0.0), cell_t(n - 1, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double a = r[i], b = r[i + 1];
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    double cm = 0.0, ct = 0.0;
    for (std::size_t q = 0; q < g.nodes.size(); ++q) {
      const double s = mid + half * g.nodes[q];
      const double v = rho(s);
      cm += g.weights[q] * s * s * v;
      ct += g.weights[q] * s * v;
    }
    m[i + 1] = m[i] + 4.0 * kPi * half * cm;
    cell_t[i] = half * ct;
  }
  std::vector<double> tail(n, 0.0);
  for (std::size_t i = n - 1; i-- > 0;) tail[i] = tail[i + 1] + cell_t[i];

  const double M = m.back();
  std::vector<double> phi(n), dphi(n), dphi_slope(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0) {
      phi[i] = -tail[0];
      dphi[i] = 0.0;
      dphi_slope[i] = rho.values()[0] / 3.0;
    } else {
      phi[i] = -m[i] / (4.0 * kPi * r[i]) - tail[i];
      dphi[i] = m[i] / (4.0 * kPi * r[i] * r[i]);
      dphi_slope[i] = rho.values()[i] - 2.0 * dphi[i] / r[i];
    }
  }

  PoissonSolution out;
  out.M = M;
  out.phi = RadialProfile(grid, phi, Extrapolation::inverse_r, dphi);
  out.dphi = RadialProfile(grid, dphi, Extrapolation::inverse_r2, dphi_slope);

  double inner = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double a = r[i], b = r[i + 1];
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    double c = 0.0;
    for (std::size_t q = 0; q < g.nodes.size(); ++q) {
      const double s = mid + half * g.nodes[q];
      const double d = out.dphi(s);
      c += g.weights[q] * s * s * d * d;
    }
    inner += half * c;
  }
  out.H_pot = 0.5 * 4.0 * kPi * inner + M * M / (8.0 * kPi * grid.r_max());
  return out;
}

}  // namespace

PoissonSolution solve_radial_poisson(const RadialProfile& rho) {
  for (double v : rho.values()) {
    if (v < 0.0) throw std::domain_error("negative density");
  }
  return poisson_impl(rho);
}

PoissonSolution solve_radial_poisson_signed(const RadialProfile& rho) { return poisson_impl(rho); }

// ---------------------------------------------------------------------------
// MonotoneMap

MonotoneMap::MonotoneMap(std::vector<double> x, std::vector<double> y, Direction d)
    : x_(std::move(x)), y_(std::move(y)), dir_(d) {
  if (x_.size() != y_.size() || x_.size() < 2) {
    throw std::invalid_argument("MonotoneMap: need matching breakpoints and values (>= 2)");
  }
  for (std::size_t i = 1; i < x_.size(); ++i) {
    if (!(x_[i] > x_[i - 1])) throw std::invalid_argument("MonotoneMap: breakpoints not increasing");
    const double dy = y_[i] - y_[i - 1];
    if ((d == Direction::increasing && dy < 0.0) || (d == Direction::decreasing && dy > 0.0)) {
      throw std::invalid_argument("MonotoneMap: values not monotone in the declared direction");
    }
  }
  d_ = pchip_slopes(x_, y_);
}

double MonotoneMap::operator()(double x) const {
  if (x <= x_.front()) return y_.front();
  if (x >= x_.back()) return y_.back();
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  const std::size_t i = std::size_t(it - x_.begin()) - 1;
  return hermite_eval(x_[i], x_[i + 1], y_[i], y_[i + 1], d_[i], d_[i + 1], x);
}

double MonotoneMap::derivative(double x) const {
  if (x < x_.front() || x > x_.back()) return 0.0;
  std::size_t i = std::size_t(std::upper_bound(x_.begin(), x_.end(), x) - x_.begin());
  i = std::clamp<std::size_t>(i, 1, x_.size() - 1) - 1;
  return hermite_derivative(x_[i], x_[i + 1], y_[i], y_[i + 1], d_[i], d_[i + 1], x);
}

InverseResult monotone_invert(const MonotoneMap& m, double y) {
  const auto& x = m.breakpoints();
  const auto& v = m.values();
  const bool inc = m.direction() == Direction::increasing;
  // reached(a): the map has attained level y at value a.
  auto reached = [&](double a) { return inc ? a >= y : a <= y; };

  const double lo = inc ? v.front() : v.back();
  const double hi = inc ? v.back() : v.front();
  if (y < lo || y > hi) {
    const bool at_start = inc ? (y < lo) : (y > hi);
    return {at_start ? x.front() : x.back(), true};
  }
  if (reached(v.front())) return {x.front(), false};
  std::size_t k = 1;
  while (k < v.size() && !reached(v[k])) ++k;
  // The level is first attained inside (x[k-1], x[k]].
  double a = x[k - 1], b = x[k];
  for (int it = 0; it < 200 && b - a > 0.0; ++it) {
    const double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) break;
    if (reached(m(mid))) b = mid; else a = mid;
  }
  return {b, false};
}

// ---------------------------------------------------------------------------
// Velocity moments

double velocity_moment(const std::function<double(double)>& F, double phi_at_r, double E0,
                       int k) {
  if (k < 0) throw std::invalid_argument("velocity_moment: unsupported moment order");
  const double u = E0 - phi_at_r;
  if (!(u > 0.0)) return 0.0;
  const auto& g = gauss4();
  constexpr int panels = 32;
  const double width = 0.5 * kPi / panels;
  const double p = 0.5 * (k + 1);
  double sum = 0.0;
  for (int j = 0; j < panels; ++j) {
    const double mid = (j + 0.5) * width;
    for (std::size_t q = 0; q < g.nodes.size(); ++q) {
      const double t = mid + 0.5 * width * g.nodes[q];
      const double s = std::sin(t), c = std::cos(t);
      const double depth = u * s * s;
      // dE = 2 u sin t cos t dt and (E - phi)^p = (u sin^2 t)^p
      sum += g.weights[q] * F(phi_at_r + depth) * std::pow(depth, p) * 2.0 * u * s * c;
    }
  }
  sum *= 0.5 * width;
  return 4.0 * kPi * std::pow(2.0, p) * sum;
}

}  // namespace gravistab
