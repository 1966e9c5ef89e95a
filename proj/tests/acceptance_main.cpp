// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failures. Tolerances are pinned in the criteria themselves.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "magflow/constants.hpp"
#include "magflow/flow.hpp"
#include "magflow/scenario.hpp"
#include "magflow/solver.hpp"

using namespace magflow;

namespace {

int failures = 0;

void report(int number, const char* title, bool pass, const std::string& detail) {
  std::printf("[%s] %d. %s (%s)\n", pass ? "PASS" : "FAIL", number, title,
              detail.c_str());
  if (!pass) ++failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

MagneticSystem area(int dim, double delta) {
  MatrixXd c = MatrixXd::Zero(dim, dim);
  c(0, 1) = 1.0;
  c(1, 0) = -1.0;
  return MagneticSystem::constant_form(c, delta);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c);
  return buf;
}

// quotient distance for matching orbits against an analytic family whose
// symmetry group includes continuous translations: center both loops and
// minimize over time shifts
double centered_shape_distance(const DiscreteLoop& a, const DiscreteLoop& b) {
  const int N = a.size();
  const double h = a.step();
  MatrixXd ac(a.dim(), N), bc(a.dim(), N);
  VectorXd am = VectorXd::Zero(a.dim()), bm = VectorXd::Zero(a.dim());
  for (int j = 0; j < N; ++j) {
    am += a.node(j);
    bm += b.node(j);
  }
  am /= N;
  bm /= N;
  for (int j = 0; j < N; ++j) {
    ac.col(j) = a.node(j) - am;
    bc.col(j) = b.node(j) - bm;
  }
  double best = 1e300;
  for (int s = 0; s < N; ++s) {
    double acc = 0.0;
    for (int j = 0; j < N; ++j) {
      VectorXd d = ac.col(j) - bc.col((j + s) % N);
      // the shifted b picks up the winding offset past the seam
      if (j + s >= N) d -= b.winding().cast<double>();
      acc += d.squaredNorm();
    }
    best = std::min(best, h * acc);
  }
  return std::sqrt(best);
}

// ---- criteria ------------------------------------------------------------

void criterion_1_circles() {
  const auto t0 = std::chrono::steady_clock::now();
  const TorusManifold M = TorusManifold::flat_unit(2);
  const HamiltonianSystem H = HamiltonianSystem::kinetic(M, Potential::zero());
  double worst = 0.0;
  for (double delta : {0.5, 1.0, 2.0}) {
    const MagneticSystem S = area(2, delta);
    VectorXd z0(4);
    z0 << 0.0, 0.0, 1.0, 0.0;  // |p| = 1
    const Trajectory tr = integrate(M, S, H, z0, 0.0, 2.0 * M_PI / delta, 1e-4);
    worst = std::max(worst,
                     (tr.states.col(tr.states.cols() - 1) - z0).norm());
  }
  const double secs = seconds_since(t0);
  report(1, "T2 magnetic circles close after t = 2 pi / delta",
         worst < 1e-6 && secs < 10.0,
         fmt("max residual %.3g < 1e-6, %.1fs < 10s", worst, secs));
}

void criterion_2_only_constants() {
  const auto t0 = std::chrono::steady_clock::now();
  const TorusManifold M = TorusManifold::flat_unit(2);
  const MagneticSystem S = area(2, 1.0);
  const LagrangianSystem L = LagrangianSystem::kinetic(M, Potential::zero());
  SolverParams params;
  params.seeds = 32;
  params.rng_seed = 2024;
  params.loop_samples = 128;
  params.tau = 1.0;
  const auto records = multi_start_survey(M, S, L, VectorXi::Zero(2), params);
  double worst_action = 0.0, worst_extent = 0.0;
  for (const auto& r : records) {
    worst_action = std::max(worst_action, std::abs(r.action));
    worst_extent = std::max(worst_extent, r.loop.extent());
  }
  const double secs = seconds_since(t0);
  const bool pass = !records.empty() && worst_action < 1e-8 &&
                    worst_extent < 1e-4 && secs < 60.0;
  report(2, "below the threshold only constant 1-periodic orbits appear", pass,
         fmt("32 seeds: max |action| %.3g < 1e-8, max extent %.3g < 1e-4",
             worst_action, worst_extent) +
             fmt(", %.1fs < 60s", secs));
}

void criterion_3_index_jump() {
  const TorusManifold M = TorusManifold::flat_unit(2);
  const LagrangianSystem L = LagrangianSystem::kinetic(M, Potential::zero());
  bool pass = true;
  std::string detail;
  for (int N : {128, 256}) {
    const DiscreteLoop c = DiscreteLoop::constant(VectorXd::Zero(2), N, 1.0);
    const auto [i62, n62] = morse_index(M, area(2, 6.2), L, c, 1e-7);
    const auto [i64, n64] = morse_index(M, area(2, 6.4), L, c, 1e-7);
    (void)n62;
    (void)n64;
    pass = pass && i62 == 0 && i64 == 2;
    detail += fmt("N=%g: index(6.2)=%g index(6.4)=%g  ", double(N),
                  double(i62), double(i64));
  }
  report(3, "Morse index jumps by two across 2 pi", pass, detail);
}

void criterion_4_t3_orbit() {
  const TorusManifold M = TorusManifold::flat_unit(3);
  const MagneticSystem S = area(3, 1.0);
  const LagrangianSystem L = LagrangianSystem::kinetic(M, Potential::zero());
  const HamiltonianSystem H = HamiltonianSystem::kinetic(M, Potential::zero());
  VectorXi alpha(3);
  alpha << 0, 0, 1;
  const double tau = 0.1;
  SolverParams params;
  params.seeds = 16;
  params.rng_seed = 99;
  params.loop_samples = 64;
  params.tau = tau;
  auto records = multi_start_survey(M, S, L, alpha, params);
  bool pass = false;
  std::string detail = "no orbit found";
  for (auto& rec : records) {
    rec = crosscheck_orbit(M, S, L, H, std::move(rec), 1e-4);
    const DiscreteLoop line = DiscreteLoop::straight(
        VectorXd::Zero(3), alpha, rec.loop.size(), tau);
    const double match = centered_shape_distance(rec.loop, line);
    const bool ok = rec.el_residual < 1e-8 &&
                    *rec.flow_closure_residual < 1e-6 && match < 1e-6;
    if (ok) {
      pass = true;
      detail = fmt("el %.3g < 1e-8, closure %.3g < 1e-6, line match %.3g < 1e-6",
                   rec.el_residual, *rec.flow_closure_residual, match);
      break;
    }
    detail = fmt("best candidate: el %.3g closure %.3g match %.3g",
                 rec.el_residual,
                 rec.flow_closure_residual ? *rec.flow_closure_residual : -1.0,
                 match);
  }
  report(4, "class (0,0,1) on T3 carries a closed orbit at small tau", pass,
         detail);
}

void criterion_5_isoperimetric() {
  const auto t0 = std::chrono::steady_clock::now();
  long violations = 0;
  {
    const TorusManifold M = TorusManifold::flat_unit(2);
    const MagneticSystem S = area(2, 1.0);
    const IsoperimetricConstants iso =
        isoperimetric_constants(M, S, VectorXi::Zero(2));
    std::mt19937_64 rng(555);
    std::vector<DiscreteLoop> loops;
    for (int i = 0; i < 1000; ++i)
      loops.push_back(DiscreteLoop::random_fourier(rng, 2, VectorXi::Zero(2),
                                                   96, 1.0, 0.5, 4));
    violations += verify_isoperimetric(M, S, iso, loops).violations;
  }
  {
    const TorusManifold M = TorusManifold::flat_unit(3);
    const MagneticSystem S = area(3, 1.0);
    VectorXi alpha(3);
    alpha << 0, 0, 1;
    const IsoperimetricConstants iso = isoperimetric_constants(M, S, alpha);
    std::mt19937_64 rng(556);
    std::vector<DiscreteLoop> loops;
    for (int i = 0; i < 1000; ++i)
      loops.push_back(
          DiscreteLoop::random_fourier(rng, 3, alpha, 96, 1.0, 0.5, 4));
    violations += verify_isoperimetric(M, S, iso, loops).violations;
  }
  const double secs = seconds_since(t0);
  report(5, "quadratic isoperimetric inequality on 2000 random loops",
         violations == 0 && secs < 30.0,
         fmt("%g violations, %.1fs < 30s", double(violations), secs));
}

void criterion_6_constants_pipeline() {
  ScenarioConfig cfg;
  cfg.dim = 2;
  cfg.gram = MatrixXd::Identity(2, 2);
  cfg.sigma_name = "area";
  cfg.delta = 1.0;
  cfg.winding = VectorXi::Zero(2);
  cfg.out_dir = "acceptance_out/constants";
  const ScenarioResult res = run_scenario(cfg, ScenarioKind::Constants);
  const double C0_exact = 2.0 + std::sqrt(2.0) / 2.0;
  const double d0_exact = 1.0 / (4.0 * C0_exact);
  const double c0_err = std::abs(res.values.at("C0") - C0_exact);
  const double d0_err = std::abs(res.values.at("delta0") - d0_exact);
  report(6, "constants scenario reproduces C0 = 2 + sqrt(2)/2, delta0 = 1/(4 C0)",
         c0_err <= 1e-9 && d0_err <= 1e-9 && res.exit_code == 0,
         fmt("|C0 err| %.3g <= 1e-9, |delta0 err| %.3g <= 1e-9", c0_err, d0_err));
}

void criterion_7_identity_suite() {
  bool pass = true;
  std::string detail;
  std::mt19937_64 rng(777);
  auto rnd = [&](int n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = u(rng);
    return v;
  };

  // Lorentz defining identity, 1e4 samples, 1e-12
  {
    VectorXi mode(2);
    mode << 1, 2;
    const TorusManifold M =
        TorusManifold::conformal(MatrixXd::Identity(2, 2), 0.2, mode);
    const MagneticSystem S = area(2, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
      const VectorXd q = rnd(2, -3, 3), u = rnd(2, -2, 2), v = rnd(2, -2, 2);
      const double lhs = (lorentz_force(M, S, q) * u).dot(M.metric(q) * v);
      worst = std::max(worst, std::abs(lhs - u.dot(S.sigma(q) * v)) /
                                  (1.0 + u.norm() * v.norm()));
    }
    pass = pass && worst < 1e-12;
    detail += fmt("lorentz %.2g ", worst);
  }
  // rescaling law, 1e-10 relative
  {
    const TorusManifold M = TorusManifold::flat_unit(2);
    const MagneticSystem S = area(2, 1.0);
    const double base = lorentz_norm(M, S);
    double worst = 0.0;
    for (double ups : {0.3, 1.7, 4.2}) {
      const double scaled = lorentz_norm(M.rescaled(ups), S);
      worst = std::max(worst, std::abs(scaled - base / ups) / (base / ups));
    }
    pass = pass && worst < 1e-10;
    detail += fmt("rescale %.2g ", worst);
  }
  // tameness, 1e4 samples, no violation
  {
    const TorusManifold M0 = TorusManifold::flat_unit(2);
    const MagneticSystem S = area(2, 1.0);
    const TorusManifold M = rescale_into_r_sigma(M0, S).manifold;
    long bad = 0;
    for (int k = 0; k < 10000; ++k)
      if (tameness_gap(M, S, rnd(2, -3, 3), rnd(2, -2, 2), rnd(2, -2, 2)) <
          -1e-12)
        ++bad;
    pass = pass && bad == 0;
    detail += fmt("tame %gv ", double(bad));
  }
  // lambda(X) = dH(Z) independent of delta, 1e-12
  {
    const TorusManifold M = TorusManifold::flat_unit(2);
    const HamiltonianSystem H = HamiltonianSystem::kinetic(M, Potential::zero());
    double worst = 0.0;
    for (int k = 0; k < 2000; ++k) {
      const VectorXd q = rnd(2, -1, 1), p = rnd(2, -2, 2);
      const double dhz = p.dot(H.dp(0, q, p));
      for (double d : {0.0, 5.0}) {
        const MagneticSystem S = area(2, d);
        const VectorXd x = magnetic_vector_field(M, S, H, 0, phase_point(q, p));
        worst = std::max(worst, std::abs(p.dot(x.head(2)) - dhz));
      }
    }
    pass = pass && worst < 1e-12;
    detail += fmt("dh(Z) %.2g ", worst);
  }
  // Fenchel involution, 1e-10
  {
    const TorusManifold M = TorusManifold::flat_unit(2);
    VectorXi mode(2);
    mode << 1, 0;
    const LagrangianSystem L =
        LagrangianSystem::kinetic(M, Potential::cosine(0.3, mode));
    const HamiltonianSystem H = fenchel_dual(M, L);
    const LagrangianSystem L2 = fenchel_dual_lagrangian(M, H);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const VectorXd q = rnd(2, -1, 1), v = rnd(2, -2, 2);
      worst = std::max(worst, std::abs(L2.value(0.2, q, v) - L.value(0.2, q, v)));
    }
    pass = pass && worst < 1e-10;
    detail += fmt("fenchel %.2g ", worst);
  }
  // gradient vs finite differences, 1e-5
  {
    const TorusManifold M = TorusManifold::flat_unit(2);
    const MagneticSystem S = area(2, 1.1);
    VectorXi mode(2);
    mode << 1, 1;
    const LagrangianSystem L =
        LagrangianSystem::kinetic(M, Potential::cosine(0.25, mode));
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
      const DiscreteLoop q = DiscreteLoop::random_fourier(
          rng, 2, VectorXi::Zero(2), 64, 1.0, 0.3, 3);
      const MatrixXd D = loop_differential(M, S, L, q);
      for (int dir = 0; dir < 20; ++dir) {
        MatrixXd xi(2, q.size());
        for (int j = 0; j < q.size(); ++j) xi.col(j) = rnd(2, -1, 1);
        xi /= xi.norm();
        const double eps = 1e-5;
        DiscreteLoop qp = q, qm = q;
        qp.samples() += eps * xi;
        qm.samples() -= eps * xi;
        const double fd = (detail::action_total_unchecked(S, L, qp) -
                           detail::action_total_unchecked(S, L, qm)) /
                          (2 * eps);
        const double an = pair_differential(D, xi);
        worst = std::max(worst, std::abs(fd - an) / (1.0 + std::abs(fd)));
      }
    }
    pass = pass && worst < 1e-5;
    detail += fmt("gradFD %.2g ", worst);
  }
  // Hessian symmetry, 1e-10
  {
    const TorusManifold M = TorusManifold::flat_unit(2);
    const MagneticSystem S = area(2, 0.9);
    const LagrangianSystem L = LagrangianSystem::kinetic(M, Potential::zero());
    const DiscreteLoop q = DiscreteLoop::random_fourier(
        rng, 2, VectorXi::Zero(2), 96, 1.0, 0.3, 3);
    const MatrixXd HE = loop_hessian_form(M, S, L, q);
    const double asym = (HE - HE.transpose()).cwiseAbs().maxCoeff();
    pass = pass && asym < 1e-10;
    detail += fmt("hess-sym %.2g ", asym);
  }
  // Legendre-lift flow agreement, combined 1e-4 at dt = 1e-4, N = 256
  {
    const TorusManifold M = TorusManifold::flat_unit(2);
    const int N = 256;
    const double deltaN = 2.0 * N * std::tan(M_PI / N);
    const MagneticSystem S = area(2, deltaN);
    const LagrangianSystem L = LagrangianSystem::kinetic(M, Potential::zero());
    const HamiltonianSystem H = HamiltonianSystem::kinetic(M, Potential::zero());
    SolverParams params;
    params.newton_max_iters = 60;
    const OrbitRecord rec = refine_newton(
        M, S, L, DiscreteLoop::circle(VectorXd::Zero(2), 0.02, N, 1.0, -1),
        params);
    const CotangentLoop lift = legendre_lift(M, L, rec.loop);
    VectorXd z = phase_point(rec.loop.samples().col(0), lift.momenta.col(0));
    double worst = 0.0;
    for (int j = 1; j <= N; ++j) {
      const Trajectory seg =
          integrate(M, S, H, z, (j - 1) / double(N), j / double(N), 1e-4);
      z = seg.states.col(seg.states.cols() - 1);
      worst = std::max(
          worst, (z - phase_point(rec.loop.node(j), lift.momenta.col(j % N)))
                     .norm());
    }
    pass = pass && rec.el_residual < 1e-10 && worst < 1e-4;
    detail += fmt("lift-flow %.2g", worst);
  }
  report(7, "structural identity suite", pass, detail);
}

void criterion_8_palais_smale_proxy() {
  const TorusManifold M = TorusManifold::flat_unit(2);
  const double delta = 0.15, tau = 1.0;
  const MagneticSystem S = area(2, delta);
  const LagrangianSystem L = LagrangianSystem::kinetic(M, Potential::zero());
  const IsoperimetricConstants iso =
      isoperimetric_constants(M, S, VectorXi::Zero(2));
  const GrowthConstants g =
      growth_constants_kinetic(M, S, Potential::zero(), tau);
  const double threshold = delta_lagrangian(g.ell0, iso.C0);
  if (delta * tau >= threshold) {
    report(8, "Palais-Smale proxy", false, "scenario not below the threshold");
    return;
  }
  const double slope = g.ell0 - delta * iso.C0 * tau;
  std::mt19937_64 rng(888);
  SolverParams params;
  params.max_iters = 150;
  long violations = 0;
  int converged = 0;
  for (int run = 0; run < 100; ++run) {
    const DiscreteLoop q0 = DiscreteLoop::random_fourier(
        rng, 2, VectorXi::Zero(2), 64, tau, 0.4, 3);
    const DescentResult r = descend(M, S, L, q0, params);
    if (r.status == DescentStatus::Converged) ++converged;
    const double bound =
        (r.trajectory.front().action + delta * iso.C1 + g.D) / slope;
    for (const auto& s : r.trajectory)
      if (s.speed_l2sq > bound + 1e-9) ++violations;
  }
  report(8, "Palais-Smale proxy: descents converge or stay speed-bounded",
         violations == 0,
         fmt("%g converged of 100, %g bound violations", double(converged),
             double(violations)));
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  criterion_1_circles();
  criterion_2_only_constants();
  criterion_3_index_jump();
  criterion_4_t3_orbit();
  criterion_5_isoperimetric();
  criterion_6_constants_pipeline();
  criterion_7_identity_suite();
  criterion_8_palais_smale_proxy();
  std::printf("ACCEPTANCE: %d/8 passed\n", 8 - failures);
  return failures;
}
