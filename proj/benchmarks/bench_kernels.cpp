// Timings of the OpenMP kernels against their serial references. The serial
// implementations are the testing baseline; this target reports the speedup
// actually obtained on the current machine.

#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#include "magflow/constants.hpp"
#include "magflow/loop_ops.hpp"
#include "magflow/parallel.hpp"

using namespace magflow;

namespace {

template <typename Fn>
double time_ms(Fn&& fn, int reps = 3) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best,
                    std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

void row(const char* name, double serial_ms, double parallel_ms) {
  std::printf("%-28s %10.2f ms %10.2f ms %8.2fx\n", name, serial_ms,
              parallel_ms, serial_ms / parallel_ms);
}

}  // namespace

int main() {
  std::printf("threads: %d\n", thread_budget());
  std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");

  // Lorentz norm over a fine grid on a conformal T^3 metric
  {
    VectorXi mode(3);
    mode << 1, 2, 0;
    const TorusManifold M =
        TorusManifold::conformal(MatrixXd::Identity(3, 3), 0.3, mode);
    MatrixXd c = MatrixXd::Zero(3, 3);
    c(0, 1) = 1.0;
    c(1, 0) = -1.0;
    const MagneticSystem S = MagneticSystem::constant_form(c, 1.0);
    const int grid = 48;
    volatile double sink = 0.0;
    const double ts = time_ms([&] { sink = lorentz_norm_serial(M, S, grid); });
    const double tp = time_ms([&] { sink = lorentz_norm(M, S, grid); });
    (void)sink;
    row("lorentz_norm grid=48^3", ts, tp);
  }

  // Batch twisted actions over a loop population
  {
    const TorusManifold M = TorusManifold::flat_unit(2);
    MatrixXd c = MatrixXd::Zero(2, 2);
    c(0, 1) = 1.0;
    c(1, 0) = -1.0;
    const MagneticSystem S = MagneticSystem::constant_form(c, 1.0);
    const LagrangianSystem L = LagrangianSystem::kinetic(M, Potential::zero());
    std::mt19937_64 rng(11);
    std::vector<DiscreteLoop> loops;
    for (int i = 0; i < 4000; ++i)
      loops.push_back(DiscreteLoop::random_fourier(rng, 2, VectorXi::Zero(2),
                                                   256, 1.0, 0.4, 4));
    volatile double sink = 0.0;
    const double ts = time_ms([&] {
      const auto v = batch_action_total_serial(M, S, L, loops);
      sink = v.back();
    });
    const double tp = time_ms([&] {
      const auto v = batch_action_total(M, S, L, loops);
      sink = v.back();
    });
    (void)sink;
    row("batch_action_total 4000x256", ts, tp);

    const IsoperimetricConstants iso =
        isoperimetric_constants(M, S, VectorXi::Zero(2));
    const double ts2 = time_ms([&] {
      const auto v = verify_isoperimetric_serial(M, S, iso, loops);
      sink = v.max_ratio;
    });
    const double tp2 = time_ms([&] {
      const auto v = verify_isoperimetric(M, S, iso, loops);
      sink = v.max_ratio;
    });
    row("verify_isoperimetric 4000", ts2, tp2);
  }
  return 0;
}
