/// Wall-clock comparison of the OpenMP field kernels against their serial
/// references on a sampled King model.  Usage: bench_fields [N_radial] [N_direct]

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <vector>

#include <omp.h>

#include "gravistab/dynamics.hpp"

using namespace gravistab;

namespace {

/// Best of `reps` timings in milliseconds.
double best_ms(const std::function<void()>& f, int reps) {
  double best = 1e300;
  for (int k = 0; k < reps; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t n_radial = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 100000;
  const std::size_t n_direct = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 4000;
  const EquilibriumModel m = build_equilibrium(AnsatzLaw::king(), 1.0, RadialGrid::uniform(2048, 200.0));
  std::printf("threads %d\n", omp_get_max_threads());

  const ParticleEnsemble er = sample_particles(m, n_radial, 1);
  std::vector<Vec3> a, b;
  const double rs = best_ms([&] { a = field_radial_serial(er); }, 5);
  const double rp = best_ms([&] { b = field_radial(er); }, 5);
  std::printf("field_radial N=%zu  serial %.2f ms  parallel %.2f ms  speedup %.2f  identical %s\n", n_radial, rs, rp,
              rs / rp, a == b ? "yes" : "no");

  const ParticleEnsemble ed = sample_particles(m, n_direct, 2);
  const double eps = default_softening(m, n_direct);
  const double ds = best_ms([&] { a = field_direct_serial(ed, eps); }, 3);
  const double dp = best_ms([&] { b = field_direct(ed, eps); }, 3);
  std::printf("field_direct N=%zu  serial %.2f ms  parallel %.2f ms  speedup %.2f  identical %s\n", n_direct, ds, dp,
              ds / dp, a == b ? "yes" : "no");
  return a == b ? EXIT_SUCCESS : EXIT_FAILURE;
}
