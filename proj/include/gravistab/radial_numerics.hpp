#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace gravistab {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Returns the n-point Gauss-Legendre rule (Newton iteration on P_n).
GaussRule gauss_legendre(int n);

/// Four-point rule used for composite radial quadrature.
const GaussRule& gauss4();

/// Strictly increasing radii r_0 = 0 < r_1 < ... < r_n.
class RadialGrid {
 public:
  RadialGrid() = default;
  /// Validates: at least 16 nodes, r_0 = 0, strictly increasing.
  explicit RadialGrid(std::vector<double> nodes);

  static RadialGrid uniform(std::size_t n, double r_max);
  /// Uniform grid on [0, r_max] whose outer `outer_fraction` of the range
  /// uses a spacing `factor` times finer than the inner part.
  static RadialGrid refined(std::size_t n, double r_max,
                            double outer_fraction = 0.1, int factor = 4);

  const std::vector<double>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  double r_max() const { return nodes_.back(); }
  double operator[](std::size_t i) const { return nodes_[i]; }
  /// Index i of the cell [r_i, r_{i+1}] containing r (clamped to the grid).
  std::size_t cell_of(double r) const;

 private:
  std::vector<double> nodes_;
};

/// Behaviour of a profile beyond r_max.
enum class Extrapolation {
  zero,        ///< value 0
  inverse_r,   ///< value(r_max) * r_max / r
  inverse_r2,  ///< value(r_max) * (r_max / r)^2
};

const char* to_string(Extrapolation e);
Extrapolation extrapolation_from_string(const std::string& s);

/// Sampled radial function with C1 cubic Hermite interpolation.
///
/// When slopes are supplied they are used as exact nodal derivatives,
/// otherwise shape-preserving (Fritsch-Butland) slopes are built.
class RadialProfile {
 public:
  RadialProfile() = default;
  RadialProfile(RadialGrid grid, std::vector<double> values,
                Extrapolation extrapolation = Extrapolation::zero,
                std::vector<double> slopes = {});

  double operator()(double r) const;
  double derivative(double r) const;

  const RadialGrid& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& slopes() const { return slopes_; }
  Extrapolation extrapolation() const { return extrapolation_; }
  double r_max() const { return grid_.r_max(); }
  bool has_exact_slopes() const { return exact_slopes_; }

 private:
  RadialGrid grid_;
  std::vector<double> values_;
  std::vector<double> slopes_;
  Extrapolation extrapolation_ = Extrapolation::zero;
  bool exact_slopes_ = false;
};

/// Shape-preserving Hermite slopes for data (x_i, y_i).
std::vector<double> pchip_slopes(const std::vector<double>& x,
                                 const std::vector<double>& y);

/// Evaluates the cubic Hermite interpolant on [x0, x1] at x.
double hermite_eval(double x0, double x1, double y0, double y1, double d0,
                    double d1, double x);
double hermite_derivative(double x0, double x1, double y0, double y1,
                          double d0, double d1, double x);

/// 4 pi int_0^{r_max} r^2 weight(r) p(r) dr by composite 4-point
/// Gauss-Legendre quadrature on every grid cell.  An empty weight means 1.
/// Throws std::domain_error("non-finite profile") on NaN or inf values.
double integrate_radial(const RadialProfile& p,
                        const std::function<double(double)>& weight = {});

/// 4 pi int_0^{r_max} r^2 g(r) dr for a callable g, composite 4-point
/// Gauss-Legendre on the grid cells.
double integrate_radial_function(const RadialGrid& grid, const std::function<double(double)>& g);

/// Output of the radial Poisson solve for Laplacian(phi) = rho.
struct PoissonSolution {
  RadialProfile phi;   ///< potential, exterior -M/(4 pi r)
  RadialProfile dphi;  ///< phi'(r) = m(r)/(4 pi r^2), exterior M/(4 pi r^2)
  double M = 0.0;      ///< total mass 4 pi int r^2 rho dr
  double H_pot = 0.0;  ///< (1/2) int |grad phi|^2 over all space
};

/// Solves Laplacian(phi) = rho with phi -> 0 at infinity for a radial density
/// supported on the grid of rho.  Throws std::domain_error("negative density")
/// if any nodal value is negative.
PoissonSolution solve_radial_poisson(const RadialProfile& rho);

/// Same solve without the sign restriction (signed perturbation densities).
PoissonSolution solve_radial_poisson_signed(const RadialProfile& rho);

/// Monotone direction of a MonotoneMap.
enum class Direction { increasing, decreasing };

/// Monotone piecewise cubic map x -> y through the given breakpoints.
class MonotoneMap {
 public:
  MonotoneMap() = default;
  /// Validates breakpoints strictly increasing and values monotone
  /// (non-strict) in the declared direction.
  MonotoneMap(std::vector<double> x, std::vector<double> y, Direction d);

  /// Interpolated value; clamps to the end values outside the range.
  double operator()(double x) const;
  double derivative(double x) const;

  const std::vector<double>& breakpoints() const { return x_; }
  const std::vector<double>& values() const { return y_; }
  Direction direction() const { return dir_; }
  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }

 private:
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> d_;
  Direction dir_ = Direction::increasing;
};

/// Generalized inverse value and whether y was clamped into range.
struct InverseResult {
  double x = 0.0;
  bool clamped = false;
};

/// Right-continuous generalized inverse: the smallest x with m(x) >= y
/// (increasing maps) or m(x) <= y (decreasing maps).  Flat pieces map to
/// their left endpoint.  Out-of-range y is clamped to the nearest endpoint.
InverseResult monotone_invert(const MonotoneMap& m, double y);

/// k-th speed moment int F(|v|^2/2 + phi) |v|^k dv of an isotropic law F
/// that vanishes for E >= E0.  Uses E = phi + u sin^2(t), u = E0 - phi, so
/// that power-law edges at both ends become smooth in t.
/// Throws std::invalid_argument for k < 0.
double velocity_moment(const std::function<double(double)>& F, double phi_at_r,
                       double E0, int k);

}  // namespace gravistab
