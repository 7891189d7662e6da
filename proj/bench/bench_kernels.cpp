// Serial vs OpenMP timings for the record-level kernels.
//   bench_kernels [rows] [repeats]

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include <omp.h>

#include "liquid/kernels.hpp"
#include "liquid/synth.hpp"

using namespace liquid;

namespace {

template <class F>
double best_of(int repeats, F&& f) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t rows = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 200000;
  const int repeats = argc > 2 ? std::atoi(argv[2]) : 3;

  SynthConfig cfg;
  cfg.n = rows;
  cfg.seed = 11;
  ModelSpec spec;
  for (int k = 0; k < 4; ++k) {
    SynthCharacteristic sc;
    sc.name = "x" + std::to_string(k);
    sc.lo = 0.0;
    sc.hi = 100.0;
    sc.sentinels.push_back({-1.0, 0.05, 0.2});
    sc.curve_x = {0.0, 100.0};
    sc.curve_y = {-0.5, 0.5};
    cfg.characteristics.push_back(sc);

    CharacteristicSpec c;
    c.name = sc.name;
    c.column = sc.name;
    c.leading.push_back(AttributePredicate::code("missing", -1.0));
    std::vector<double> knots;
    for (int i = 0; i <= 10; ++i) knots.push_back(10.0 * i);
    c.knots = KnotConfig(knots);
    spec.characteristics.push_back(c);
  }
  const Dataset data = generate_synthetic(cfg);
  const Eigen::VectorXd beta = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(spec.coefficient_count()), -1, 1);

  std::printf("rows=%zu p=%zu threads=%d\n", rows, spec.coefficient_count(), omp_get_max_threads());
  ClassMoments ms, mp;
  const double t_ms = best_of(repeats, [&] { ms = kernels::moments_serial(spec, data); });
  const double t_mp = best_of(repeats, [&] { mp = kernels::moments_parallel(spec, data); });
  std::printf("moments  serial %9.2f ms  parallel %9.2f ms  speedup %5.2fx  max|dC|=%.3g\n", t_ms, t_mp,
              t_ms / t_mp, (ms.c - mp.c).cwiseAbs().maxCoeff());
  std::vector<double> ss, sp;
  const double t_ss = best_of(repeats, [&] { ss = kernels::scores_serial(spec, beta, data); });
  const double t_sp = best_of(repeats, [&] { sp = kernels::scores_parallel(spec, beta, data); });
  double diff = 0.0;
  for (std::size_t i = 0; i < ss.size(); ++i) diff = std::max(diff, std::abs(ss[i] - sp[i]));
  std::printf("scores   serial %9.2f ms  parallel %9.2f ms  speedup %5.2fx  max|ds|=%.3g\n", t_ss, t_sp,
              t_ss / t_sp, diff);
  return 0;
}
