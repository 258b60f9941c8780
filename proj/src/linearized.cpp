#include "gravistab/linearized.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace gravistab {

namespace {

const double kPi = 3.14159265358979323846;

/// Gauss-Legendre rule mapped to [a, b].
void mapped_rule(int n, double a, double b, std::vector<double>& x, std::vector<double>& w) {
  const GaussRule g = gauss_legendre(n);
  x.resize(std::size_t(n));
  w.resize(std::size_t(n));
  for (std::size_t i = 0; i < std::size_t(n); ++i) {
    x[i] = 0.5 * (a + b) + 0.5 * (b - a) * g.nodes[i];
    w[i] = 0.5 * (b - a) * g.weights[i];
  }
}

std::vector<double> barycentric_weights(const std::vector<double>& x) {
  std::vector<double> lam(x.size(), 1.0);
  for (std::size_t j = 0; j < x.size(); ++j) {
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (k != j) lam[j] /= (x[j] - x[k]);
    }
  }
  return lam;
}

/// Values of all Lagrange basis polynomials at t.
std::vector<double> lagrange_row(const std::vector<double>& x, const std::vector<double>& lam, double t) {
  std::vector<double> row(x.size(), 0.0);
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (t == x[j]) {
      row[j] = 1.0;
      return row;
    }
  }
  double den = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    row[j] = lam[j] / (t - x[j]);
    den += row[j];
  }
  for (double& v : row) v /= den;
  return row;
}

std::vector<double> differentiation_matrix(const std::vector<double>& x, const std::vector<double>& lam) {
  const std::size_t n = x.size();
  std::vector<double> D(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double diag = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double d = (lam[j] / lam[i]) / (x[i] - x[j]);
      D[i * n + j] = d;
      diag -= d;
    }
    D[i * n + i] = diag;
  }
  return D;
}

double angular_factor(int ell) { return ell == 0 ? 1.0 : 1.0 / 3.0; }

/// Radius where the model potential reaches E (inside the support).
double model_radius_at(const EquilibriumModel& m, double E) {
  if (E >= m.E0) return m.R;
  if (E <= m.phi_c) return 0.0;
  double lo = 0.0, hi = m.R;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * m.R; ++it) {
    const double mid = 0.5 * (lo + hi);
    (m.phi(mid) < E ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Applies the (n x n) matrix D along one tensor axis of a (ns, nt, nc) array.
std::vector<double> apply_axis(const PhaseMesh& m, const std::vector<double>& D, int axis,
                               const std::vector<double>& a) {
  const std::size_t ns = m.ns(), nt = m.nt(), nc = m.nc();
  std::vector<double> out(a.size(), 0.0);
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < std::int64_t(ns); ++ii) {
    const std::size_t i = std::size_t(ii);
    for (std::size_t j = 0; j < nt; ++j)
      for (std::size_t k = 0; k < nc; ++k) {
        double s = 0.0;
        if (axis == 0) {
          for (std::size_t q = 0; q < ns; ++q) s += D[i * ns + q] * a[m.index(q, j, k)];
        } else if (axis == 1) {
          for (std::size_t q = 0; q < nt; ++q) s += D[j * nt + q] * a[m.index(i, q, k)];
        } else {
          for (std::size_t q = 0; q < nc; ++q) s += D[k * nc + q] * a[m.index(i, j, q)];
        }
        out[m.index(i, j, k)] = s;
      }
  }
  return out;
}

Parity flip(Parity p) {
  if (p == Parity::even) return Parity::odd;
  if (p == Parity::odd) return Parity::even;
  return Parity::none;
}

}  // namespace

// ---------------------------------------------------------------------------
// Mesh

double PhaseMesh::speed(std::size_t i, std::size_t j) const {
  return std::sqrt(2.0 * u[i]) * std::sin(theta[j]);
}

double PhaseMesh::energy(std::size_t i, std::size_t j) const {
  const double st = std::sin(theta[j]);
  return phi[i] + u[i] * st * st;
}

double PhaseMesh::velocity_weight(std::size_t i, std::size_t j, std::size_t k) const {
  const double st = std::sin(theta[j]);
  return 2.0 * kPi * std::pow(2.0 * u[i], 1.5) * st * st * std::cos(theta[j]) * wtheta[j] * wc[k];
}

double PhaseMesh::weight(std::size_t i, std::size_t j, std::size_t k) const {
  return 4.0 * kPi * r[i] * r[i] * dr_ds[i] * ws[i] * velocity_weight(i, j, k);
}

std::shared_ptr<const PhaseMesh> make_phase_mesh(const EquilibriumModel& model, std::size_t n_s,
                                                 std::size_t n_theta, std::size_t n_c) {
  if (n_s < 4 || n_theta < 4 || n_c < 2) throw std::invalid_argument("make_phase_mesh: mesh too small");
  auto m = std::make_shared<PhaseMesh>();
  m->model = &model;
  mapped_rule(int(n_s), 0.0, 1.0, m->s, m->ws);
  mapped_rule(int(n_theta), 0.0, 0.5 * kPi, m->theta, m->wtheta);
  mapped_rule(int(n_c), -1.0, 1.0, m->c, m->wc);
  const double R = model.R;
  m->r.resize(n_s);
  m->dr_ds.resize(n_s);
  m->u.resize(n_s);
  m->dphi.resize(n_s);
  m->phi.resize(n_s);
  for (std::size_t i = 0; i < n_s; ++i) {
    const double t = 1.0 - m->s[i];
    m->r[i] = R * (1.0 - t * t);
    m->dr_ds[i] = 2.0 * R * t;
    m->phi[i] = model.phi(m->r[i]);
    m->u[i] = model.E0 - m->phi[i];
    m->dphi[i] = model.dphi(m->r[i]);
    if (!(m->u[i] > 0.0)) throw std::runtime_error("make_phase_mesh: node outside the support");
  }
  m->lam_s = barycentric_weights(m->s);
  m->lam_t = barycentric_weights(m->theta);
  m->lam_c = barycentric_weights(m->c);
  m->Ds = differentiation_matrix(m->s, m->lam_s);
  m->Dtheta = differentiation_matrix(m->theta, m->lam_t);
  m->Dc = differentiation_matrix(m->c, m->lam_c);
  // Cumulative integrals of the Lagrange basis, exact with an n-point rule.
  m->Scum.assign(n_s * n_s, 0.0);
  const GaussRule g = gauss_legendre(int(n_s));
  for (std::size_t k = 0; k < n_s; ++k) {
    const double b = m->s[k];
    for (std::size_t q = 0; q < g.nodes.size(); ++q) {
      const double x = 0.5 * b * (1.0 + g.nodes[q]);
      const std::vector<double> row = lagrange_row(m->s, m->lam_s, x);
      for (std::size_t j = 0; j < n_s; ++j) m->Scum[k * n_s + j] += 0.5 * b * g.weights[q] * row[j];
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Fields

Parity detect_parity(const PhaseMesh& m, const std::vector<double>& a) {
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return Parity::even;
  const double tol = 1e-12 * scale;
  bool even = true, odd = true;
  const std::size_t nc = m.nc();
  for (std::size_t i = 0; i < m.ns(); ++i)
    for (std::size_t j = 0; j < m.nt(); ++j)
      for (std::size_t k = 0; k < nc; ++k) {
        const double x = a[m.index(i, j, k)], y = a[m.index(i, j, nc - 1 - k)];
        if (std::abs(x - y) > tol) even = false;
        if (std::abs(x + y) > tol) odd = false;
      }
  if (even) return Parity::even;
  if (odd) return Parity::odd;
  return Parity::none;
}

PerturbationField PerturbationField::from_values(std::shared_ptr<const PhaseMesh> mesh,
                                                 std::vector<double> values, int ell,
                                                 bool support_flag, bool inside_support, int axis) {
  if (!mesh) throw std::invalid_argument("PerturbationField: null mesh");
  if (values.size() != mesh->size()) throw std::invalid_argument("PerturbationField: size mismatch");
  if (ell < 0 || ell > 1) throw std::invalid_argument("PerturbationField: ell must be 0 or 1");
  if (axis < 0 || axis > 2) throw std::invalid_argument("PerturbationField: axis must be 0, 1 or 2");
  PerturbationField h;
  h.parity = detect_parity(*mesh, values);
  h.mesh = std::move(mesh);
  h.values = std::move(values);
  h.ell = ell;
  h.axis = ell == 0 ? 0 : axis;
  h.support_flag = support_flag;
  h.inside_support = inside_support || support_flag;
  return h;
}

PerturbationField PerturbationField::from_function(
    std::shared_ptr<const PhaseMesh> mesh, const std::function<double(double, double, double)>& a,
    int ell, int axis) {
  if (!mesh) throw std::invalid_argument("PerturbationField: null mesh");
  const PhaseMesh& m = *mesh;
  std::vector<double> v(m.size());
  for (std::size_t i = 0; i < m.ns(); ++i)
    for (std::size_t j = 0; j < m.nt(); ++j) {
      const double w = m.speed(i, j);
      for (std::size_t k = 0; k < m.nc(); ++k) v[m.index(i, j, k)] = a(m.r[i], w, m.c[k]);
    }
  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  const double tol = 1e-12 * scale;
  // Probe the boundary E = E0 and points with E > E0.
  bool boundary_zero = true, outside_zero = true;
  const double wc_max = std::sqrt(2.0 * m.model->u_c);
  for (std::size_t i = 0; i < m.ns(); ++i) {
    const double wb = std::sqrt(2.0 * m.u[i]);
    for (std::size_t k = 0; k < m.nc(); ++k) {
      if (std::abs(a(m.r[i], wb, m.c[k])) > tol) boundary_zero = false;
      if (std::abs(a(m.r[i], 1.05 * wb + 0.05 * wc_max, m.c[k])) > tol) outside_zero = false;
    }
  }
  for (double fr : {1.02, 1.2}) {
    for (double fw : {0.0, 0.1, 0.5, 1.0}) {
      for (std::size_t k = 0; k < m.nc(); ++k) {
        if (std::abs(a(fr * m.model->R, fw * wc_max, m.c[k])) > tol) outside_zero = false;
      }
    }
  }
  if (scale == 0.0) boundary_zero = outside_zero = true;
  return from_values(std::move(mesh), std::move(v), ell, boundary_zero && outside_zero, outside_zero,
                     axis);
}

double PerturbationField::evaluate(double r, double w, double c) const {
  const PhaseMesh& m = *mesh;
  const EquilibriumModel& model = *m.model;
  if (!(r >= 0.0 && r < model.R)) return 0.0;
  const double s = 1.0 - std::sqrt(std::max(0.0, 1.0 - r / model.R));
  const double u = model.depth(r);
  if (!(u > 0.0)) return 0.0;
  const double x = w / std::sqrt(2.0 * u);
  if (x >= 1.0) return 0.0;
  const double th = std::asin(std::max(0.0, x));
  const std::vector<double> ls = lagrange_row(m.s, m.lam_s, s);
  const std::vector<double> lt = lagrange_row(m.theta, m.lam_t, th);
  const std::vector<double> lc = lagrange_row(m.c, m.lam_c, std::clamp(c, -1.0, 1.0));
  double sum = 0.0;
  for (std::size_t i = 0; i < m.ns(); ++i) {
    if (ls[i] == 0.0) continue;
    double si = 0.0;
    for (std::size_t j = 0; j < m.nt(); ++j) {
      double sj = 0.0;
      const double* row = &values[m.index(i, j, 0)];
      for (std::size_t k = 0; k < m.nc(); ++k) sj += lc[k] * row[k];
      si += lt[j] * sj;
    }
    sum += ls[i] * si;
  }
  return sum;
}

double PerturbationField::max_abs() const {
  double s = 0.0;
  for (double v : values) s = std::max(s, std::abs(v));
  return s;
}

// ---------------------------------------------------------------------------
// Brackets

PerturbationField bracket_with_E(const PerturbationField& g) {
  if (g.ell != 0) throw std::invalid_argument("bracket_with_E: spherically symmetric fields only");
  const PhaseMesh& m = *g.mesh;
  const std::vector<double> Gs = apply_axis(m, m.Ds, 0, g.values);
  const std::vector<double> Gt = apply_axis(m, m.Dtheta, 1, g.values);
  const std::vector<double> Gc = apply_axis(m, m.Dc, 2, g.values);
  std::vector<double> out(m.size());
  for (std::size_t i = 0; i < m.ns(); ++i) {
    const double sq = std::sqrt(2.0 * m.u[i]);
    for (std::size_t j = 0; j < m.nt(); ++j) {
      const double w = m.speed(i, j);
      const double ct = std::cos(m.theta[j]);
      for (std::size_t k = 0; k < m.nc(); ++k) {
        const std::size_t n = m.index(i, j, k);
        const double c = m.c[k];
        out[n] = w * c * Gs[n] / m.dr_ds[i] - m.dphi[i] * ct / sq * c * Gt[n] +
                 (1.0 - c * c) * (w / m.r[i] - m.dphi[i] / w) * Gc[n];
      }
    }
  }
  PerturbationField h = PerturbationField::from_values(g.mesh, std::move(out), 0, g.support_flag,
                                                       g.inside_support);
  if (g.parity != Parity::none) h.parity = flip(g.parity);
  return h;
}

PerturbationField dynamically_accessible(const PerturbationField& g) {
  if (!g.support_flag) throw std::invalid_argument("inaccessible support");
  PerturbationField h = bracket_with_E(g);
  const PhaseMesh& m = *g.mesh;
  for (std::size_t i = 0; i < m.ns(); ++i)
    for (std::size_t j = 0; j < m.nt(); ++j) {
      const double Fp = eval_Fprime(*m.model, m.energy(i, j));
      for (std::size_t k = 0; k < m.nc(); ++k) h.values[m.index(i, j, k)] *= Fp;
    }
  return h;
}

// ---------------------------------------------------------------------------
// Densities, potentials, quadratic forms

std::vector<double> perturbation_density(const PerturbationField& h) {
  const PhaseMesh& m = *h.mesh;
  std::vector<double> rho(m.ns(), 0.0);
  for (std::size_t i = 0; i < m.ns(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m.nt(); ++j)
      for (std::size_t k = 0; k < m.nc(); ++k) s += m.velocity_weight(i, j, k) * h.values[m.index(i, j, k)];
    rho[i] = s;
  }
  return rho;
}

std::vector<double> perturbation_potential(const PerturbationField& h) {
  const PhaseMesh& m = *h.mesh;
  const std::size_t n = m.ns();
  const std::vector<double> rho = perturbation_density(h);
  std::vector<double> out(n, 0.0);
  if (h.ell == 0) {
    double total_tail = 0.0;
    for (std::size_t j = 0; j < n; ++j) total_tail += m.ws[j] * m.r[j] * rho[j] * m.dr_ds[j];
    for (std::size_t k = 0; k < n; ++k) {
      double mass = 0.0, inner_tail = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double S = m.Scum[k * n + j];
        mass += S * 4.0 * kPi * m.r[j] * m.r[j] * rho[j] * m.dr_ds[j];
        inner_tail += S * m.r[j] * rho[j] * m.dr_ds[j];
      }
      out[k] = -mass / (4.0 * kPi * m.r[k]) - (total_tail - inner_tail);
    }
  } else {
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) total += m.ws[j] * rho[j] * m.dr_ds[j];
    for (std::size_t k = 0; k < n; ++k) {
      double I1 = 0.0, I2 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double S = m.Scum[k * n + j];
        I1 += S * std::pow(m.r[j], 3) * rho[j] * m.dr_ds[j];
        I2 += S * rho[j] * m.dr_ds[j];
      }
      out[k] = -(I1 / (m.r[k] * m.r[k]) + m.r[k] * (total - I2)) / 3.0;
    }
  }
  return out;
}

double inner_product(const PerturbationField& h, const PerturbationField& g) {
  if (h.mesh != g.mesh) throw std::invalid_argument("inner_product: different meshes");
  if (h.ell != g.ell || (h.ell == 1 && h.axis != g.axis)) return 0.0;
  const PhaseMesh& m = *h.mesh;
  double s = 0.0;
  for (std::size_t i = 0; i < m.ns(); ++i)
    for (std::size_t j = 0; j < m.nt(); ++j)
      for (std::size_t k = 0; k < m.nc(); ++k) {
        const std::size_t n = m.index(i, j, k);
        s += m.weight(i, j, k) * h.values[n] * g.values[n];
      }
  return angular_factor(h.ell) * s;
}

namespace {

/// int h phi_h dx including the angular factor.
double potential_pairing(const PerturbationField& h, const std::vector<double>& pot) {
  const PhaseMesh& m = *h.mesh;
  const std::vector<double> rho = perturbation_density(h);
  double s = 0.0;
  for (std::size_t i = 0; i < m.ns(); ++i) {
    s += 4.0 * kPi * m.r[i] * m.r[i] * m.dr_ds[i] * m.ws[i] * pot[i] * rho[i];
  }
  return angular_factor(h.ell) * s;
}

/// -int a^2 / F'(E) including the angular factor.
double kinetic_part(const PerturbationField& h) {
  const PhaseMesh& m = *h.mesh;
  double s = 0.0;
  for (std::size_t i = 0; i < m.ns(); ++i)
    for (std::size_t j = 0; j < m.nt(); ++j) {
      const double Fp = eval_Fprime(*m.model, m.energy(i, j));
      for (std::size_t k = 0; k < m.nc(); ++k) {
        const double a = h.values[m.index(i, j, k)];
        if (a != 0.0) s -= m.weight(i, j, k) * a * a / Fp;
      }
    }
  return angular_factor(h.ell) * s;
}

}  // namespace

double free_energy(const PerturbationField& h) {
  if (!h.inside_support) throw std::invalid_argument("support violation");
  return kinetic_part(h) + potential_pairing(h, perturbation_potential(h));
}

AntonovSides antonov_check(const PerturbationField& q) {
  if (q.ell != 0) throw std::invalid_argument("antonov_check: spherically symmetric fields only");
  if (q.parity != Parity::even) throw std::invalid_argument("parity");
  const PhaseMesh& m = *q.mesh;
  std::vector<double> hv(m.size());
  for (std::size_t i = 0; i < m.ns(); ++i)
    for (std::size_t j = 0; j < m.nt(); ++j)
      for (std::size_t k = 0; k < m.nc(); ++k) {
        const std::size_t n = m.index(i, j, k);
        hv[n] = m.r[i] * m.speed(i, j) * m.c[k] * q.values[n];
      }
  const PerturbationField h =
      PerturbationField::from_values(q.mesh, hv, 0, q.support_flag, q.inside_support);
  PerturbationField k = bracket_with_E(h);
  const PerturbationField qb = bracket_with_E(q);
  double rhs = 0.0;
  for (std::size_t i = 0; i < m.ns(); ++i)
    for (std::size_t j = 0; j < m.nt(); ++j) {
      const double Fp = eval_Fprime(*m.model, m.energy(i, j));
      const double w = m.speed(i, j);
      for (std::size_t kk = 0; kk < m.nc(); ++kk) {
        const std::size_t n = m.index(i, j, kk);
        k.values[n] *= Fp;
        const double xv = m.r[i] * w * m.c[kk];
        rhs += m.weight(i, j, kk) * std::abs(Fp) *
               (xv * xv * qb.values[n] * qb.values[n] + m.dphi[i] / m.r[i] * hv[n] * hv[n]);
      }
    }
  k.inside_support = true;
  AntonovSides sides;
  sides.lhs = free_energy(k);
  sides.rhs = rhs;
  return sides;
}

double antonov_velocity_identity(const EquilibriumModel& model, double r) {
  auto Fp = [&](double E) { return eval_Fprime(model, E); };
  return -velocity_moment(Fp, model.phi(r), model.E0, 2) / 3.0;
}

PerturbationField apply_M(const PerturbationField& h) {
  const PhaseMesh& m = *h.mesh;
  const std::vector<double> pot = perturbation_potential(h);
  std::vector<double> out(m.size());
  for (std::size_t i = 0; i < m.ns(); ++i)
    for (std::size_t j = 0; j < m.nt(); ++j) {
      const double Fp = eval_Fprime(*m.model, m.energy(i, j));
      for (std::size_t k = 0; k < m.nc(); ++k) {
        const std::size_t n = m.index(i, j, k);
        out[n] = -h.values[n] / Fp + pot[i];
      }
    }
  return PerturbationField::from_values(h.mesh, std::move(out), h.ell, false, true, h.axis);
}

PerturbationField project_out(const PerturbationField& h,
                              const std::vector<PerturbationField>& constraints) {
  const std::size_t n = constraints.size();
  std::vector<double> G(n * n), b(n);
  double diag = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    b[a] = inner_product(h, constraints[a]);
    for (std::size_t c = 0; c < n; ++c) G[a * n + c] = inner_product(constraints[a], constraints[c]);
    diag = std::max(diag, std::abs(G[a * n + a]));
  }
  // Gaussian elimination with partial pivoting.
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t(0));
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t rr = col + 1; rr < n; ++rr) {
      if (std::abs(G[rr * n + col]) > std::abs(G[piv * n + col])) piv = rr;
    }
    if (!(std::abs(G[piv * n + col]) > 1e-12 * diag)) throw std::invalid_argument("constraint collinearity");
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(G[piv * n + c], G[col * n + c]);
      std::swap(b[piv], b[col]);
    }
    for (std::size_t rr = col + 1; rr < n; ++rr) {
      const double f = G[rr * n + col] / G[col * n + col];
      for (std::size_t c = col; c < n; ++c) G[rr * n + c] -= f * G[col * n + c];
      b[rr] -= f * b[col];
    }
  }
  std::vector<double> alpha(n, 0.0);
  for (std::size_t a = n; a-- > 0;) {
    double s = b[a];
    for (std::size_t c = a + 1; c < n; ++c) s -= G[a * n + c] * alpha[c];
    alpha[a] = s / G[a * n + a];
  }
  PerturbationField out = h;
  for (std::size_t a = 0; a < n; ++a) {
    const PerturbationField& c = constraints[a];
    if (c.ell != h.ell || (h.ell == 1 && c.axis != h.axis)) continue;
    for (std::size_t q = 0; q < out.values.size(); ++q) out.values[q] -= alpha[a] * c.values[q];
  }
  out.parity = detect_parity(*out.mesh, out.values);
  out.support_flag = false;
  return out;
}

std::vector<PerturbationField> coercivity_constraints(std::shared_ptr<const PhaseMesh> mesh) {
  const PhaseMesh& m = *mesh;
  std::vector<double> E(m.size()), X(m.size());
  for (std::size_t i = 0; i < m.ns(); ++i)
    for (std::size_t j = 0; j < m.nt(); ++j)
      for (std::size_t k = 0; k < m.nc(); ++k) {
        E[m.index(i, j, k)] = m.energy(i, j);
        X[m.index(i, j, k)] = m.r[i];
      }
  std::vector<PerturbationField> out;
  out.push_back(PerturbationField::from_values(mesh, E, 0, false));
  for (int axis = 0; axis < 3; ++axis) out.push_back(PerturbationField::from_values(mesh, X, 1, false, true, axis));
  return out;
}

double constrained_coercivity_probe(const PerturbationField& h) {
  const PerturbationField hz = project_out(h, coercivity_constraints(h.mesh));
  return inner_product(apply_M(hz), hz);
}

// ---------------------------------------------------------------------------
// Effective potential and the Schrodinger operator

RadialProfile effective_potential(const EquilibriumModel& model) {
  const RadialGrid& grid = model.rho.grid();
  std::vector<double> V(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) V[i] = model.law.density_derivative(model.depth(grid[i]));
  return RadialProfile(grid, V, Extrapolation::zero);
}

namespace {

/// Fornberg weights for derivatives 0..2 at z from nodes x.
std::vector<std::array<double, 3>> fornberg(double z, const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::array<double, 3>> c(n, {0.0, 0.0, 0.0});
  double c1 = 1.0, c4 = x[0] - z;
  c[0][0] = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t mn = std::min<std::size_t>(i, 2);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - z;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (std::size_t k = mn; k >= 1; --k) {
          c[i][k] = c1 * (double(k) * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        }
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (std::size_t k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - double(k) * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  return c;
}

}  // namespace

RadialProfile schrodinger_residual(const EquilibriumModel& model, const SpatialPerturbation& sp) {
  if (sp.ell < 0) throw std::invalid_argument("schrodinger_residual: ell must be >= 0");
  const RadialGrid& grid = model.rho.grid();
  const std::size_t n = grid.size();
  const RadialProfile V = effective_potential(model);
  std::vector<double> uval(n);
  for (std::size_t i = 0; i < n; ++i) uval[i] = sp.u(grid[i]);
  const double L = double(sp.ell * (sp.ell + 1));
  std::vector<double> res(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = std::min(i < 2 ? 0 : i - 2, n - 5);
    std::vector<double> xs(5), us(5);
    for (std::size_t q = 0; q < 5; ++q) {
      xs[q] = grid[lo + q];
      us[q] = uval[lo + q];
    }
    const auto w = fornberg(grid[i], xs);
    double d1 = 0.0, d2 = 0.0;
    for (std::size_t q = 0; q < 5; ++q) {
      d1 += w[q][1] * us[q];
      d2 += w[q][2] * us[q];
    }
    const double r = grid[i];
    if (r == 0.0) {
      // Regular limits: 3 u''(0) for ell = 0; the ell >= 1 terms cancel at the origin.
      res[i] = sp.ell == 0 ? 3.0 * d2 + V.values()[i] * uval[i] : 0.0;
    } else {
      res[i] = d2 + 2.0 * d1 / r - L * uval[i] / (r * r) + V.values()[i] * uval[i];
    }
  }
  return RadialProfile(grid, res, Extrapolation::zero);
}

// ---------------------------------------------------------------------------
// Projection on functions of E and the reduced Hessian

double EnergyFunction::operator()(double e) const {
  if (E.empty()) return 0.0;
  if (e <= E.front()) return values.front();
  if (e >= E.back()) return values.back();
  const std::size_t k = std::size_t(std::upper_bound(E.begin(), E.end(), e) - E.begin()) - 1;
  if (slopes.size() != E.size()) {
    const double t = (e - E[k]) / (E[k + 1] - E[k]);
    return (1.0 - t) * values[k] + t * values[k + 1];
  }
  return hermite_eval(E[k], E[k + 1], values[k], values[k + 1], slopes[k], slopes[k + 1], e);
}

namespace {

/// A, B, C = int 4 pi r^2 sqrt(E - phi) {1, g, g^2} dr over {phi < E}.
std::array<double, 3> energy_shell_moments(const EquilibriumModel& m, double E,
                                           const std::function<double(double)>& g) {
  const double rE = model_radius_at(m, E);
  std::array<double, 3> out{0.0, 0.0, 0.0};
  if (rE <= 0.0) return out;
  const GaussRule& q = gauss4();
  const int panels = 24;
  for (int p = 0; p < panels; ++p) {
    const double a = double(p) / panels, b = double(p + 1) / panels;
    for (std::size_t k = 0; k < q.nodes.size(); ++k) {
      const double t = 0.5 * (a + b) + 0.5 * (b - a) * q.nodes[k];
      const double r = rE * (1.0 - t * t);
      const double wgt = 0.5 * (b - a) * q.weights[k] * 2.0 * rE * t * 4.0 * kPi * r * r *
                         std::sqrt(std::max(0.0, E - m.phi(r)));
      const double gv = g(r);
      out[0] += wgt;
      out[1] += wgt * gv;
      out[2] += wgt * gv * gv;
    }
  }
  return out;
}

}  // namespace

EnergyFunction project_on_energy(const EquilibriumModel& model,
                                 const std::function<double(double, double)>& g, std::size_t n) {
  if (n < 4) throw std::invalid_argument("project_on_energy: need at least 4 energies");
  EnergyFunction P;
  P.E.resize(n);
  P.values.resize(n);
  const double depth = model.E0 - model.phi_c;
#pragma omp parallel for schedule(static)
  for (std::int64_t mm = 0; mm < std::int64_t(n); ++mm) {
    const std::size_t m = std::size_t(mm);
    const double sigma = (double(m) + 0.5) / double(n);
    const double E = model.E0 - depth * (1.0 - sigma) * (1.0 - sigma);
    const auto mom = energy_shell_moments(model, E, [&](double r) { return g(r, E); });
    P.E[m] = E;
    P.values[m] = mom[1] / mom[0];
  }
  P.slopes = pchip_slopes(P.E, P.values);
  return P;
}

EnergyFunction projection_P(const SpatialPerturbation& h, const EquilibriumModel& model, std::size_t n) {
  if (h.ell != 0) throw std::invalid_argument("projection_P: radial perturbations only");
  return project_on_energy(model, [&](double r, double) { return h.u(r); }, n);
}

namespace {

/// Exterior contribution of int (r^2 u'^2 + L u^2) dr for the profile tail.
double exterior_gradient(const RadialProfile& u, double L) {
  const double rm = u.r_max();
  const double um = u(rm);
  switch (u.extrapolation()) {
    case Extrapolation::zero:
      return 0.0;
    case Extrapolation::inverse_r: {
      const double c = um * rm;
      return (1.0 + L) * c * c / rm;
    }
    case Extrapolation::inverse_r2: {
      const double c = um * rm * rm;
      return (4.0 + L) * c * c / (3.0 * rm * rm * rm);
    }
  }
  return 0.0;
}

}  // namespace

double reduced_hessian(const SpatialPerturbation& h, const EquilibriumModel& model) {
  if (h.ell < 0) throw std::invalid_argument("reduced_hessian: ell must be >= 0");
  const double L = double(h.ell * (h.ell + 1));
  const double ang = h.ell == 0 ? 1.0 : 1.0 / 3.0;
  const RadialGrid& hg = h.u.grid();
  double grad = integrate_radial_function(hg, [&](double r) {
    const double d = h.u.derivative(r);
    const double v = h.u(r);
    return d * d + (L > 0.0 ? L * v * v / (r * r) : 0.0);
  });
  grad += 4.0 * kPi * exterior_gradient(h.u, L);
  grad *= ang;

  if (h.ell >= 1) {
    const RadialProfile V = effective_potential(model);
    const double pot = integrate_radial_function(model.rho.grid(), [&](double r) {
      const double v = h.u(r);
      return V(r) * v * v;
    });
    return grad - ang * pot;
  }
  // int int |F'(E)| (h - P h)^2 dx dv = 4 pi sqrt(2) int |F'(E)| (C - B^2 / A) dE.
  const double depth = model.E0 - model.phi_c;
  const GaussRule& q = gauss4();
  const int panels = 32;
  std::vector<double> terms(std::size_t(panels) * q.nodes.size(), 0.0);
#pragma omp parallel for schedule(static)
  for (std::int64_t pp = 0; pp < panels; ++pp) {
    const double a = double(pp) / panels, b = double(pp + 1) / panels;
    for (std::size_t k = 0; k < q.nodes.size(); ++k) {
      const double sigma = 0.5 * (a + b) + 0.5 * (b - a) * q.nodes[k];
      const double E = model.E0 - depth * (1.0 - sigma) * (1.0 - sigma);
      const double dE = 2.0 * depth * (1.0 - sigma) * 0.5 * (b - a) * q.weights[k];
      const auto mom = energy_shell_moments(model, E, [&](double r) { return h.u(r); });
      const double var = mom[0] > 0.0 ? mom[2] - mom[1] * mom[1] / mom[0] : 0.0;
      terms[std::size_t(pp) * q.nodes.size() + k] = dE * std::abs(eval_Fprime(model, E)) * var;
    }
  }
  double kin = 0.0;
  for (double t : terms) kin += t;
  return grad - 4.0 * kPi * std::sqrt(2.0) * kin;
}

// ---------------------------------------------------------------------------
// Linearized evolution

namespace {

/// Radial orbit of energy E and angular momentum L, tabulated over half a period.
struct Orbit {
  double E = 0.0, L = 0.0, Fp = 0.0;
  double period = 0.0;
  std::vector<double> t, r, vr;  ///< increasing t on [0, period / 2]

  void position(double time, double& rr, double& rdot) const {
    double tau = std::fmod(time, period);
    if (tau < 0.0) tau += period;
    double sign = 1.0;
    if (tau > 0.5 * period) {
      tau = period - tau;
      sign = -1.0;
    }
    std::size_t k = std::size_t(std::upper_bound(t.begin(), t.end(), tau) - t.begin());
    k = std::min(std::max<std::size_t>(k, 1), t.size() - 1) - 1;
    rr = hermite_eval(t[k], t[k + 1], r[k], r[k + 1], vr[k], vr[k + 1], tau);
    rdot = sign * hermite_derivative(t[k], t[k + 1], r[k], r[k + 1], vr[k], vr[k + 1], tau);
  }
};

Orbit make_orbit(const EquilibriumModel& m, double E, double L, double r_circ, double r_E) {
  auto Q = [&](double r) { return 2.0 * (E - m.phi(r)) - L * L / (r * r); };
  auto root = [&](double lo, double hi, bool rising) {
    for (int it = 0; it < 200 && hi - lo > 1e-15 * r_E; ++it) {
      const double mid = 0.5 * (lo + hi);
      const bool positive = Q(mid) > 0.0;
      ((positive == rising) ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
  };
  const double rp = root(1e-300, r_circ, true);
  const double ra = root(r_circ, r_E, false);
  const double rbar = 0.5 * (ra + rp), half = 0.5 * (ra - rp);
  Orbit o;
  o.E = E;
  o.L = L;
  o.Fp = eval_Fprime(m, E);
  const std::size_t n = 96;
  o.t.assign(n + 1, 0.0);
  o.r.resize(n + 1);
  o.vr.resize(n + 1);
  const GaussRule& q = gauss4();
  // dt = half sin(xi) / v_r dxi with r = rbar - half cos(xi) is smooth in xi.
  for (std::size_t k = 0; k <= n; ++k) {
    const double xi = kPi * double(k) / double(n);
    o.r[k] = rbar - half * std::cos(xi);
    o.vr[k] = (k == 0 || k == n) ? 0.0 : std::sqrt(std::max(0.0, Q(o.r[k])));
    if (k == 0) continue;
    const double a = kPi * double(k - 1) / double(n), b = xi;
    double dt = 0.0;
    for (std::size_t j = 0; j < q.nodes.size(); ++j) {
      const double x = 0.5 * (a + b) + 0.5 * (b - a) * q.nodes[j];
      const double rr = rbar - half * std::cos(x);
      dt += 0.5 * (b - a) * q.weights[j] * half * std::sin(x) / std::sqrt(std::max(1e-300, Q(rr)));
    }
    o.t[k] = o.t[k - 1] + dt;
  }
  o.period = 2.0 * o.t[n];
  return o;
}

}  // namespace

LinearizedRun evolve_linearized(const PerturbationField& h0, double dt, double T, std::size_t n_E,
                                std::size_t n_L, std::size_t n_phase) {
  if (h0.ell != 0) throw std::invalid_argument("evolve_linearized: spherically symmetric fields only");
  if (!h0.inside_support) throw std::invalid_argument("support violation");
  if (!(dt > 0.0) || !(T >= 0.0)) throw std::invalid_argument("evolve_linearized: bad time step");
  if (n_E < 2 || n_L < 2 || n_phase < 4) throw std::invalid_argument("evolve_linearized: too few markers");
  const EquilibriumModel& m = *h0.mesh->model;
  const double depth = m.E0 - m.phi_c;

  std::vector<double> sE, wE, sL, wL;
  mapped_rule(int(n_E), 0.0, 1.0, sE, wE);
  mapped_rule(int(n_L), 0.0, 1.0, sL, wL);
  std::vector<Orbit> orbits(n_E * n_L);
  std::vector<double> orbit_weight(n_E * n_L);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t ee = 0; ee < std::int64_t(n_E); ++ee) {
    const std::size_t e = std::size_t(ee);
    const double E = m.E0 - depth * (1.0 - sE[e]) * (1.0 - sE[e]);
    const double dE = 2.0 * depth * (1.0 - sE[e]) * wE[e];
    const double r_E = model_radius_at(m, E);
    // Circular orbit: maximum of r^2 (E - phi) on [0, r_E] by golden section.
    double a = 0.0, b = r_E;
    auto g = [&](double r) { return r * r * (E - m.phi(r)); };
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 200 && b - a > 1e-13 * r_E; ++it) {
      const double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
      (g(x1) < g(x2) ? a : b) = (g(x1) < g(x2) ? x1 : x2);
    }
    const double r_c = 0.5 * (a + b);
    const double L_max = std::sqrt(2.0 * g(r_c));
    for (std::size_t l = 0; l < n_L; ++l) {
      const double L = L_max * sL[l];
      orbits[e * n_L + l] = make_orbit(m, E, L, r_c, r_E);
      orbit_weight[e * n_L + l] = 8.0 * kPi * kPi * L * dE * L_max * wL[l];
    }
  }
  double min_period = orbits.front().period;
  for (const Orbit& o : orbits) min_period = std::min(min_period, o.period);
  if (dt > 0.1 * min_period) {
    std::ostringstream msg;
    msg << "evolve_linearized: dt exceeds a tenth of the shortest radial period; use dt <= "
        << 0.1 * min_period;
    throw std::invalid_argument(msg.str());
  }

  const std::size_t N = orbits.size() * n_phase;
  std::vector<std::size_t> orbit_of(N);
  std::vector<double> phase0(N), vol(N), q(N);
  for (std::size_t o = 0; o < orbits.size(); ++o)
    for (std::size_t k = 0; k < n_phase; ++k) {
      const std::size_t i = o * n_phase + k;
      orbit_of[i] = o;
      phase0[i] = (double(k) + 0.5) / double(n_phase) * orbits[o].period;
      vol[i] = orbit_weight[o] * orbits[o].period / double(n_phase);
    }
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < std::int64_t(N); ++ii) {
    const std::size_t i = std::size_t(ii);
    const Orbit& o = orbits[orbit_of[i]];
    double r = 0.0, rdot = 0.0;
    o.position(phase0[i], r, rdot);
    const double w = std::sqrt(std::max(0.0, 2.0 * (o.E - m.phi(r))));
    const double c = w > 0.0 ? std::clamp(rdot / w, -1.0, 1.0) : 0.0;
    q[i] = h0.evaluate(r, w, c) * vol[i];
  }

  std::vector<double> r(N), rdot(N), meff(N);
  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), std::size_t(0));
  // Positions at time t and the enclosed perturbation mass with half self weight.
  auto fields = [&](double t, const std::vector<double>& qs) {
#pragma omp parallel for schedule(static)
    for (std::int64_t ii = 0; ii < std::int64_t(N); ++ii) {
      const std::size_t i = std::size_t(ii);
      orbits[orbit_of[i]].position(phase0[i] + t, r[i], rdot[i]);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return r[a] < r[b] || (r[a] == r[b] && a < b);
    });
    double before = 0.0;
    std::size_t k = 0;
    while (k < N) {
      std::size_t j = k;
      double group = 0.0;
      while (j < N && r[order[j]] == r[order[k]]) group += qs[order[j++]];
      for (std::size_t p = k; p < j; ++p) meff[order[p]] = before + 0.5 * group;
      before += group;
      k = j;
    }
  };
  auto rhs = [&](double t, const std::vector<double>& qs, std::vector<double>& out) {
    fields(t, qs);
#pragma omp parallel for schedule(static)
    for (std::int64_t ii = 0; ii < std::int64_t(N); ++ii) {
      const std::size_t i = std::size_t(ii);
      const Orbit& o = orbits[orbit_of[i]];
      out[i] = o.Fp * vol[i] * rdot[i] * meff[i] / (4.0 * kPi * r[i] * r[i]);
    }
  };
  auto energy = [&](double t, const std::vector<double>& qs) {
    fields(t, qs);
    double kin = 0.0, pot = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double Fp = orbits[orbit_of[i]].Fp;
      kin += qs[i] * qs[i] / (vol[i] * std::abs(Fp));
      pot += 2.0 * qs[i] * meff[i] / (4.0 * kPi * r[i]);
    }
    return kin - pot;
  };

  LinearizedRun run;
  run.markers = N;
  run.min_radial_period = min_period;
  const std::size_t steps = std::size_t(std::llround(T / dt));
  std::vector<double> k1(N), k2(N), k3(N), k4(N), tmp(N);
  double t = 0.0;
  run.times.push_back(t);
  run.free_energy.push_back(energy(t, q));
  for (std::size_t s = 0; s < steps; ++s) {
    rhs(t, q, k1);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = q[i] + 0.5 * dt * k1[i];
    rhs(t + 0.5 * dt, tmp, k2);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = q[i] + 0.5 * dt * k2[i];
    rhs(t + 0.5 * dt, tmp, k3);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = q[i] + dt * k3[i];
    rhs(t + dt, tmp, k4);
    for (std::size_t i = 0; i < N; ++i) q[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    t = double(s + 1) * dt;
    run.times.push_back(t);
    run.free_energy.push_back(energy(t, q));
  }
  return run;
}

}  // namespace gravistab
