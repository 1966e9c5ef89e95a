#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>

#include "magflow/parallel.hpp"
#include "test_support.hpp"

using namespace magflow;
using namespace magflow::testing;

TEST_CASE("MAGFLOW_THREADS caps the budget") {
  setenv("MAGFLOW_THREADS", "1", 1);
  CHECK(thread_budget() == 1);
  setenv("MAGFLOW_THREADS", "nonsense", 1);
  CHECK(thread_budget() >= 1);
  unsetenv("MAGFLOW_THREADS");
  CHECK(thread_budget() >= 1);
}

TEST_CASE("kernels are thread-count invariant") {
  const TorusManifold M = t2_flat();
  const MagneticSystem S = area_form(2, 1.3, 1.0);
  const LagrangianSystem L = LagrangianSystem::kinetic(M, Potential::zero());
  std::mt19937_64 rng(71);
  std::vector<DiscreteLoop> loops;
  for (int i = 0; i < 32; ++i)
    loops.push_back(
        DiscreteLoop::random_fourier(rng, 2, VectorXi::Zero(2), 64, 1.0, 0.4, 3));

  setenv("MAGFLOW_THREADS", "1", 1);
  const double n1 = lorentz_norm(M, S, 16);
  const auto a1 = batch_action_total(M, S, L, loops);
  unsetenv("MAGFLOW_THREADS");
  const double nN = lorentz_norm(M, S, 16);
  const auto aN = batch_action_total(M, S, L, loops);

  CHECK(n1 == nN);
  CHECK(n1 == lorentz_norm_serial(M, S, 16));
  for (std::size_t i = 0; i < loops.size(); ++i) CHECK(a1[i] == aN[i]);
}
