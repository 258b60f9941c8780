#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace gravistab {

using Vec3 = std::array<double, 3>;

/// Weighted phase-space samples (x_i, v_i, w_i) at time t.
struct ParticleEnsemble {
  std::vector<Vec3> x;
  std::vector<Vec3> v;
  std::vector<double> w;
  double t = 0.0;

  std::size_t size() const { return w.size(); }
  /// Sum of weights accumulated in index order.
  double mass() const;
};

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

}  // namespace gravistab
