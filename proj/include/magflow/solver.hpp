#pragma once

#include <optional>
#include <string>
#include <vector>

#include "magflow/loop_ops.hpp"
#include "magflow/orbit.hpp"

namespace magflow {

struct SolverParams {
  int max_iters = 2000;
  enum class StepRule { Fixed, Backtracking };
  StepRule step_rule = StepRule::Backtracking;
  double step_size = 0.25;       // initial trial step
  double grad_tol = 1e-7;        // on the L2 gradient norm
  double newton_switch_tol = 5e-2;
  double newton_target = 5e-11;  // el_residual target
  int newton_max_iters = 40;
  double tol_null = 1e-7;
  int seeds = 16;
  unsigned long long rng_seed = 0;
  int loop_samples = 128;
  double tau = 1.0;  // period of the survey seed loops
  double seed_amplitude = 0.2;
  int seed_max_mode = 3;
  double dedup_action_tol = 1e-6;
  double dedup_dist_tol = 1e-4;
  std::optional<double> delta_tau_threshold;  // coercivity bound, warn if exceeded
};

struct DescentSample {
  int iter;
  double action;
  double grad_norm;
  double speed_l2sq;  // ||qdot||^2_{L2}, logged for the coercivity monitor
};

enum class DescentStatus { Converged, MaxIters, Stalled };

struct DescentResult {
  DiscreteLoop loop;
  std::vector<DescentSample> trajectory;
  DescentStatus status = DescentStatus::MaxIters;
  std::vector<std::string> warnings;

  explicit DescentResult(DiscreteLoop l) : loop(std::move(l)) {}
};

// sup_j of the metric norm of the L2 gradient (discrete EL defect)
double el_residual(const TorusManifold& M, const MagneticSystem& S,
                   const LagrangianSystem& L, const DiscreteLoop& q);

// Backtracking descent along the W12-preconditioned gradient. The action
// sequence is nonincreasing; terminates at grad_norm < grad_tol, max_iters,
// or a stalled line search.
DescentResult descend(const TorusManifold& M, const MagneticSystem& S,
                      const LagrangianSystem& L, const DiscreteLoop& q0,
                      const SolverParams& params);

// Newton refinement of the discrete criticality equations, solving in the
// orthogonal complement of the numerically detected near-null space.
// Structural zero modes (translations, time shift) are expected; a system
// that is singular beyond them yields newton_ok = false with a note.
OrbitRecord refine_newton(const TorusManifold& M, const MagneticSystem& S,
                          const LagrangianSystem& L, const DiscreteLoop& q,
                          const SolverParams& params);

// (index, nullity): eigenvalues of the L2 Hessian operator below -tol_null
// and within +-tol_null. Dense eigensolve up to nN = 3000, tridiagonal
// Sturm counts beyond.
std::pair<int, int> morse_index(const TorusManifold& M,
                                const MagneticSystem& S,
                                const LagrangianSystem& L,
                                const DiscreteLoop& q, double tol_null = 1e-7);

// Discrete L2 distance between loops minimized over time shifts and lattice
// translations. Infinite when windings differ.
double loop_min_distance(const DiscreteLoop& a, const DiscreteLoop& b);

// Multi-start search in a prescribed atoroidal class: descend + refine from
// `seeds` random Fourier starts, deduplicated by action value and quotient
// distance. Deterministic given rng_seed; seeds may run concurrently.
std::vector<OrbitRecord> multi_start_survey(const TorusManifold& M,
                                            const MagneticSystem& S,
                                            const LagrangianSystem& L,
                                            const VectorXi& alpha,
                                            const SolverParams& params);
std::vector<OrbitRecord> multi_start_survey_serial(const TorusManifold& M,
                                                   const MagneticSystem& S,
                                                   const LagrangianSystem& L,
                                                   const VectorXi& alpha,
                                                   const SolverParams& params);

}  // namespace magflow
