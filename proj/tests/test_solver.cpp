#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_support.hpp"

using namespace magflow;
using namespace magflow::testing;

TEST_CASE("descend terminates immediately at a critical start") {
  const TorusManifold M = t2_flat();
  const MagneticSystem S = area_form(2, 1.0, 1.0);
  const LagrangianSystem L = LagrangianSystem::kinetic(M, Potential::zero());
  SolverParams params;
  const DescentResult r =
      descend(M, S, L, DiscreteLoop::constant(VectorXd::Zero(2), 64, 1.0), params);
  CHECK(r.status == DescentStatus::Converged);
  CHECK(r.trajectory.size() == 1);
  CHECK(r.trajectory.front().grad_norm == 0.0);
}

TEST_CASE("descent action sequence is monotone nonincreasing") {
  const TorusManifold M = t2_flat();
  const MagneticSystem S = area_form(2, 1.0, 1.0);
  VectorXi mode(2);
  mode << 1, 0;
  const LagrangianSystem L =
      LagrangianSystem::kinetic(M, Potential::cosine(0.2, mode));
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 5; ++rep) {
    const DiscreteLoop q0 =
        DiscreteLoop::random_fourier(rng, 2, winding2(0, 0), 96, 1.0, 0.3, 3);
    const DescentResult r = descend(M, S, L, q0, SolverParams{});
    for (std::size_t k = 1; k < r.trajectory.size(); ++k)
      CHECK(r.trajectory[k].action <= r.trajectory[k - 1].action + 1e-14);
  }
}

TEST_CASE("descent below threshold converges to constant loops") {
  // delta = 1 < 2 pi: the only 1-periodic orbits in class 0 are constants
  const TorusManifold M = t2_flat();
  const MagneticSystem S = area_form(2, 1.0, 1.0);
  const LagrangianSystem L = LagrangianSystem::kinetic(M, Potential::zero());
  std::mt19937_64 rng(11);
  SolverParams params;
  params.grad_tol = 1e-9;
  for (int rep = 0; rep < 3; ++rep) {
    DiscreteLoop q0 = DiscreteLoop::constant(VectorXd::Zero(2), 96, 1.0);
    for (int j = 0; j < q0.size(); ++j)
      q0.samples().col(j) += 0.05 * random_point(rng, 2, -1, 1);
    const DescentResult r = descend(M, S, L, q0, params);
    CHECK(r.status == DescentStatus::Converged);
    CHECK(std::abs(r.trajectory.back().action) < 1e-8);
  }
}

TEST_CASE("refine_newton leaves exact critical points alone") {
  const TorusManifold M = t2_flat();
  const MagneticSystem S = area_form(2, 1.0, 1.0);
  const LagrangianSystem L = LagrangianSystem::kinetic(M, Potential::zero());
  const DiscreteLoop c = DiscreteLoop::constant(VectorXd::Ones(2) * 0.4, 64, 1.0);
  const OrbitRecord rec = refine_newton(M, S, L, c, SolverParams{});
  CHECK(rec.el_residual == 0.0);
  CHECK(rec.newton_ok);
  CHECK((rec.loop.samples() - c.samples()).norm() == 0.0);
  CHECK(rec.morse_index == 0);
  CHECK(rec.nullity == 2);
  CHECK_FALSE(rec.nondegenerate);
}

TEST_CASE("refine_newton recovers the T3 straight-line orbit") {
  const TorusManifold M = t3_flat();
  const MagneticSystem S = area_form(3, 1.0, 1.0);
  const LagrangianSystem L = LagrangianSystem::kinetic(M, Potential::zero());
  const double tau = 0.1;
  std::mt19937_64 rng(13);
  DiscreteLoop q = DiscreteLoop::straight(VectorXd::Zero(3), winding3(0, 0, 1),
                                          64, tau);
  for (int j = 0; j < q.size(); ++j)
    q.samples().col(j) += 0.01 * random_point(rng, 3, -1, 1);
  SolverParams params;
  const DescentResult d = descend(M, S, L, q, params);
  const OrbitRecord rec = refine_newton(M, S, L, d.loop, params);
  CHECK(rec.el_residual < 1e-10);
  CHECK(rec.action == doctest::Approx(1.0 / (2.0 * tau)).epsilon(1e-10));
  // loop equals the straight line up to translation
  const DiscreteLoop line =
      DiscreteLoop::straight(rec.loop.samples().col(0), winding3(0, 0, 1), 64, tau);
  double worst = 0.0;
  for (int j = 0; j < rec.loop.size(); ++j) {
    const VectorXd diff = rec.loop.node(j) - rec.loop.node(0) -
                          (line.node(j) - line.node(0));
    worst = std::max(worst, diff.norm());
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("refine_newton finds magnetic circles at the discrete threshold") {
  // Nonconstant 1-periodic solutions exist exactly at delta_N; their cover
  // projection is a circle of radius |qdot| / delta.
  const TorusManifold M = t2_flat();
  const int N = 256;
  const double deltaN = discrete_index_threshold(N, 1.0);
  const MagneticSystem S = area_form(2, 1.0, deltaN);
  const LagrangianSystem L = LagrangianSystem::kinetic(M, Potential::zero());
  DiscreteLoop q = DiscreteLoop::circle(VectorXd::Zero(2), 0.15, N, 1.0, -1);
  std::mt19937_64 rng(17);
  for (int j = 0; j < N; ++j) q.samples().col(j) += 1e-3 * random_point(rng, 2, -1, 1);
  SolverParams params;
  params.newton_max_iters = 60;
  const OrbitRecord rec = refine_newton(M, S, L, q, params);
  CHECK(rec.newton_ok);
  CHECK(rec.el_residual < 1e-10);
  // radius-speed relation
  VectorXd center = VectorXd::Zero(2);
  for (int j = 0; j < N; ++j) center += rec.loop.samples().col(j);
  center /= N;
  double rad = 0.0, speed = 0.0;
  for (int j = 0; j < N; ++j) {
    rad += (rec.loop.samples().col(j) - center).norm();
    speed += rec.loop.velocity_centered(j).norm();
  }
  rad /= N;
  speed /= N;
  CHECK(rad > 0.1);  // genuinely nonconstant
  CHECK(speed == doctest::Approx(deltaN * rad).epsilon(1e-3));
}

TEST_CASE("morse index of constant loops") {
  const TorusManifold M = t2_flat();
  const LagrangianSystem L = LagrangianSystem::kinetic(M, Potential::zero());
  const DiscreteLoop c = DiscreteLoop::constant(VectorXd::Zero(2), 128, 1.0);

  SUBCASE("delta = 0: index 0, nullity = n from the translation modes") {
    const auto [idx, nul] = morse_index(M, MagneticSystem::zero(2), L, c, 1e-7);
    CHECK(idx == 0);
    CHECK(nul == 2);
  }
  SUBCASE("delta = 3 < 2 pi: index 0") {
    const auto [idx, nul] = morse_index(M, area_form(2, 1.0, 3.0), L, c, 1e-7);
    CHECK(idx == 0);
    CHECK(nul == 2);
  }
  SUBCASE("delta = 7 in (2 pi, 4 pi): index 2") {
    const auto [idx, nul] = morse_index(M, area_form(2, 1.0, 7.0), L, c, 1e-7);
    CHECK(idx == 2);
    CHECK(nul == 2);
  }
  SUBCASE("index against the per-mode oracle across deltas") {
    for (double delta : {1.0, 5.0, 9.0, 14.0}) {
      const auto [idx, nul] = morse_index(M, area_form(2, 1.0, delta), L, c, 1e-7);
      const auto oracle = constant_loop_spectrum(128, 1.0, delta);
      const int expect =
          static_cast<int>(std::count_if(oracle.begin(), oracle.end(),
                                         [](double x) { return x < -1e-7; }));
      CHECK(idx == expect);
      (void)nul;
    }
  }
  SUBCASE("stability under N doubling and tol_null sweep") {
    for (int N : {128, 256}) {
      const DiscreteLoop cc = DiscreteLoop::constant(VectorXd::Zero(2), N, 1.0);
      for (double tol : {1e-8, 1e-7, 1e-6}) {
        const auto [idx, nul] = morse_index(M, area_form(2, 1.0, 6.4), L, cc, tol);
        CHECK(idx == 2);
        CHECK(nul == 2);
      }
    }
  }
}

TEST_CASE("sturm counts agree with the dense eigensolver") {
  // same spectrum counts through both paths (the Sturm path serves nN > 3000)
  const TorusManifold M = t2_flat();
  const MagneticSystem S = area_form(2, 1.0, 7.0);
  const LagrangianSystem L = LagrangianSystem::kinetic(M, Potential::zero());
  const DiscreteLoop c = DiscreteLoop::constant(VectorXd::Zero(2), 96, 1.0);
  const MatrixXd W = loop_hessian(M, S, L, c);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(W, Eigen::EigenvaluesOnly);
  int neg = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()[i] < -1e-7) ++neg;
  const auto [idx, nul] = morse_index(M, S, L, c, 1e-7);
  CHECK(idx == neg);
  (void)nul;
}

TEST_CASE("loop quotient distance") {
  std::mt19937_64 rng(23);
  const DiscreteLoop a =
      DiscreteLoop::random_fourier(rng, 2, winding2(0, 0), 64, 1.0, 0.3, 3);
  SUBCASE("time shift and lattice translation collapse to zero") {
    VectorXd m(2);
    m << 2, -1;
    const DiscreteLoop b = a.time_shifted(17).translated(m);
    CHECK(loop_min_distance(a, b) < 1e-12);
  }
  SUBCASE("distinct loops stay apart") {
    const DiscreteLoop b =
        DiscreteLoop::random_fourier(rng, 2, winding2(0, 0), 64, 1.0, 0.3, 3);
    CHECK(loop_min_distance(a, b) > 1e-3);
  }
  SUBCASE("winding mismatch is infinite") {
    const DiscreteLoop b =
        DiscreteLoop::straight(VectorXd::Zero(2), winding2(0, 0), 64, 1.0);
    const DiscreteLoop c =
        DiscreteLoop::straight(VectorXd::Zero(2), winding2(1, 1), 64, 1.0);
    CHECK(std::isinf(loop_min_distance(b, c)));
  }
}

TEST_CASE("multi-start survey on T2 below threshold finds only constants") {
  const TorusManifold M = t2_flat();
  const MagneticSystem S = area_form(2, 1.0, 1.0);
  const LagrangianSystem L = LagrangianSystem::kinetic(M, Potential::zero());
  SolverParams params;
  params.seeds = 8;
  params.rng_seed = 42;
  params.loop_samples = 96;
  params.tau = 1.0;
  const auto records = multi_start_survey(M, S, L, winding2(0, 0), params);
  CHECK(!records.empty());
  for (const auto& r : records) {
    CHECK(std::abs(r.action) < 1e-8);
    CHECK(r.loop.extent() < 1e-4);
    CHECK(r.el_residual < 1e-8);
  }
}

TEST_CASE("survey is deterministic and matches the serial reference") {
  const TorusManifold M = t2_flat();
  const MagneticSystem S = area_form(2, 1.0, 1.0);
  const LagrangianSystem L = LagrangianSystem::kinetic(M, Potential::zero());
  SolverParams params;
  params.seeds = 6;
  params.rng_seed = 9;
  params.loop_samples = 64;
  const auto a = multi_start_survey(M, S, L, winding2(0, 0), params);
  const auto b = multi_start_survey(M, S, L, winding2(0, 0), params);
  const auto c = multi_start_survey_serial(M, S, L, winding2(0, 0), params);
  REQUIRE(a.size() == b.size());
  REQUIRE(a.size() == c.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].action == b[i].action);
    CHECK(a[i].action == c[i].action);
    CHECK((a[i].loop.samples() - c[i].loop.samples()).norm() == 0.0);
  }
}

TEST_CASE("closed geodesics in class (1,0) with sigma = 0") {
  const TorusManifold M = t2_flat();
  const MagneticSystem S = MagneticSystem::zero(2);
  const LagrangianSystem L = LagrangianSystem::kinetic(M, Potential::zero());
  SolverParams params;
  params.seeds = 6;
  params.rng_seed = 3;
  params.loop_samples = 64;
  params.tau = 1.0;
  const auto records = multi_start_survey(M, S, L, winding2(1, 0), params);
  REQUIRE(!records.empty());
  for (const auto& r : records)
    CHECK(r.action == doctest::Approx(0.5).epsilon(1e-9));  // |alpha|^2 / (2 tau)
}

TEST_CASE("descent runs obey the Palais-Smale speed bound") {
  const TorusManifold M = t2_flat();
  const double delta = 0.15, tau = 1.0;
  const MagneticSystem S = area_form(2, 1.0, delta);
  const LagrangianSystem L = LagrangianSystem::kinetic(M, Potential::zero());
  const IsoperimetricConstants iso = isoperimetric_constants(M, S, winding2(0, 0));
  const GrowthConstants g = growth_constants_kinetic(M, S, Potential::zero(), tau);
  REQUIRE(delta * tau < delta_lagrangian(g.ell0, iso.C0));
  const double slope = g.ell0 - delta * iso.C0 * tau;
  std::mt19937_64 rng(31);
  SolverParams params;
  params.max_iters = 120;
  for (int run = 0; run < 20; ++run) {
    const DiscreteLoop q0 =
        DiscreteLoop::random_fourier(rng, 2, winding2(0, 0), 64, tau, 0.4, 3);
    const DescentResult r = descend(M, S, L, q0, params);
    const double s0 = r.trajectory.front().action;
    const double bound = (s0 + delta * iso.C1 + g.D) / slope;
    for (const auto& sample : r.trajectory)
      CHECK(sample.speed_l2sq <= bound + 1e-9);
  }
}
