#include "magflow/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "magflow/parallel.hpp"

namespace magflow {

namespace {

double l2_grad_norm(const TorusManifold& M, const DiscreteLoop& q,
                    const MatrixXd& l2grad) {
  double acc = 0.0;
  for (int j = 0; j < q.size(); ++j) {
    const VectorXd g = l2grad.col(j);
    acc += g.dot(M.metric(q.samples().col(j)) * g);
  }
  return std::sqrt(q.step() * acc);
}

double sup_metric_norm(const TorusManifold& M, const DiscreteLoop& q,
                       const MatrixXd& field) {
  double m = 0.0;
  for (int j = 0; j < q.size(); ++j) {
    const VectorXd g = field.col(j);
    m = std::max(m, std::sqrt(g.dot(M.metric(q.samples().col(j)) * g)));
  }
  return m;
}

// eigenvalue counts of a symmetric tridiagonal matrix via Sturm sequences
long tridiag_count_below(const VectorXd& diag, const VectorXd& sub, double x) {
  const int m = static_cast<int>(diag.size());
  long count = 0;
  double d = diag[0] - x;
  if (d < 0) ++count;
  for (int i = 1; i < m; ++i) {
    double denom = d;
    if (std::abs(denom) < 1e-300) denom = std::copysign(1e-300, denom == 0.0 ? -1.0 : denom);
    d = diag[i] - x - sub[i - 1] * sub[i - 1] / denom;
    if (d < 0) ++count;
  }
  return count;
}

std::pair<int, int> spectrum_counts(const MatrixXd& W, double tol_null) {
  const int m = static_cast<int>(W.rows());
  if (m <= 3000) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(W, Eigen::EigenvaluesOnly);
    const VectorXd ev = es.eigenvalues();
    int neg = 0, null = 0;
    for (int i = 0; i < m; ++i) {
      if (ev[i] < -tol_null)
        ++neg;
      else if (ev[i] <= tol_null)
        ++null;
    }
    return {neg, null};
  }
  // inertia via tridiagonal reduction + Sturm counts
  Eigen::Tridiagonalization<MatrixXd> tri(W);
  const VectorXd diag = tri.matrixT().diagonal();
  const VectorXd sub = tri.matrixT().diagonal(-1);
  const long below = tridiag_count_below(diag, sub, -tol_null);
  const long upto = tridiag_count_below(diag, sub, tol_null);
  return {static_cast<int>(below), static_cast<int>(upto - below)};
}

}  // namespace

double el_residual(const TorusManifold& M, const MagneticSystem& S,
                   const LagrangianSystem& L, const DiscreteLoop& q) {
  return sup_metric_norm(M, q, loop_gradient(M, S, L, q, InnerProduct::L2));
}

DescentResult descend(const TorusManifold& M, const MagneticSystem& S,
                      const LagrangianSystem& L, const DiscreteLoop& q0,
                      const SolverParams& params) {
  DescentResult res(q0.with_resolution_guard());
  if (!S.is_zero() && S.delta() != 0.0 &&
      !atoroidal_test(M, S, q0.winding()))
    throw std::runtime_error("descend requires a sigma-atoroidal class");
  if (params.delta_tau_threshold &&
      std::abs(S.delta()) * q0.tau() >= *params.delta_tau_threshold) {
    std::ostringstream os;
    os << "delta*tau = " << std::abs(S.delta()) * q0.tau()
       << " is not below the coercivity threshold "
       << *params.delta_tau_threshold << "; descent may not be coercive";
    res.warnings.push_back(os.str());
  }

  DiscreteLoop& q = res.loop;
  double action = detail::action_total_unchecked(S, L, q);
  double trial = params.step_size;

  for (int iter = 0; iter <= params.max_iters; ++iter) {
    const MatrixXd D = loop_differential(M, S, L, q);
    MatrixXd l2(q.dim(), q.size());
    for (int j = 0; j < q.size(); ++j)
      l2.col(j) =
          M.metric(q.samples().col(j)).ldlt().solve(D.col(j)) / q.step();
    const double gnorm = l2_grad_norm(M, q, l2);
    res.trajectory.push_back({iter, action, gnorm, loop_speed_l2sq(M, q)});
    if (gnorm < params.grad_tol) {
      res.status = DescentStatus::Converged;
      return res;
    }
    if (iter == params.max_iters) break;

    const MatrixXd dir = -w12_precondition(D / q.step(), q.step());
    const double slope = pair_differential(D, dir);
    if (!(slope < 0.0)) {
      res.status = DescentStatus::Stalled;
      res.warnings.push_back("descent stalled: nonnegative directional derivative");
      return res;
    }

    if (params.step_rule == SolverParams::StepRule::Fixed) {
      q.samples() += params.step_size * dir;
      action = detail::action_total_unchecked(S, L, q);
      continue;
    }

    double t = trial;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      DiscreteLoop cand = q;
      cand.samples() += t * dir;
      const double cand_action = detail::action_total_unchecked(S, L, cand);
      if (cand_action <= action + 1e-4 * t * slope) {
        q = std::move(cand);
        action = cand_action;
        accepted = true;
        break;
      }
      t *= 0.5;
      if (t < 1e-16) break;
    }
    if (!accepted) {
      res.status = DescentStatus::Stalled;
      res.warnings.push_back("descent stalled: step-size underflow");
      return res;
    }
    trial = std::min(2.0 * t, 4.0 * params.step_size);
  }
  res.status = DescentStatus::MaxIters;
  return res;
}

OrbitRecord refine_newton(const TorusManifold& M, const MagneticSystem& S,
                          const LagrangianSystem& L, const DiscreteLoop& q0,
                          const SolverParams& params) {
  OrbitRecord rec(q0);
  const int n = q0.dim();
  const int N = q0.size();
  const int m = n * N;

  auto residual = [&](const DiscreteLoop& q) { return el_residual(M, S, L, q); };

  double res = residual(rec.loop);
  for (int it = 0; it < params.newton_max_iters && res > params.newton_target;
       ++it) {
    const MatrixXd D = loop_differential(M, S, L, rec.loop);
    MatrixXd Ms, Mi;
    loop_mass_sqrt(M, rec.loop, Ms, Mi);
    MatrixXd W = Mi * loop_hessian_form(M, S, L, rec.loop) * Mi;
    W = 0.5 * (W + W.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(W);
    const VectorXd ev = es.eigenvalues();
    const MatrixXd U = es.eigenvectors();
    const double null_cut = std::max(params.tol_null, 1e-9 * ev.cwiseAbs().maxCoeff());
    const VectorXd rhs = U.transpose() * (Mi * Eigen::Map<const VectorXd>(D.data(), m));
    VectorXd y = VectorXd::Zero(m);
    int active = 0;
    for (int i = 0; i < m; ++i) {
      if (std::abs(ev[i]) > null_cut) {
        y[i] = rhs[i] / ev[i];
        ++active;
      }
    }
    if (active == 0) {
      rec.note = "degenerate critical point; Newton unavailable";
      break;
    }
    VectorXd step_vec = -(Mi * (U * y));
    // keep the update inside the resolution guard
    const double maxc = step_vec.cwiseAbs().maxCoeff();
    if (maxc > 0.25) step_vec *= 0.25 / maxc;

    bool improved = false;
    double damping = 1.0;
    for (int bt = 0; bt < 25; ++bt) {
      DiscreteLoop cand = rec.loop;
      cand.samples() += damping * Eigen::Map<MatrixXd>(step_vec.data(), n, N);
      const double cres = residual(cand);
      if (cres < res) {
        rec.loop = std::move(cand);
        res = cres;
        improved = true;
        break;
      }
      damping *= 0.5;
    }
    if (!improved) break;
  }

  rec.el_residual = res;
  rec.newton_ok = res <= params.newton_target;
  rec.action = detail::action_total_unchecked(S, L, rec.loop);
  const auto [index, nullity] = morse_index(M, S, L, rec.loop, params.tol_null);
  rec.morse_index = index;
  rec.nullity = nullity;
  rec.nondegenerate = (nullity == 0);
  return rec;
}

std::pair<int, int> morse_index(const TorusManifold& M,
                                const MagneticSystem& S,
                                const LagrangianSystem& L,
                                const DiscreteLoop& q, double tol_null) {
  return spectrum_counts(loop_hessian(M, S, L, q), tol_null);
}

double loop_min_distance(const DiscreteLoop& a, const DiscreteLoop& b) {
  if (a.dim() != b.dim() || a.size() != b.size() ||
      (a.winding() - b.winding()).cwiseAbs().maxCoeff() != 0)
    return std::numeric_limits<double>::infinity();
  const int N = a.size();
  const double h = a.step();
  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < N; ++s) {
    // optimal real translation is the mean difference; the best lattice
    // translation is its componentwise rounding
    VectorXd mean = VectorXd::Zero(a.dim());
    for (int j = 0; j < N; ++j) mean += a.node(j) - b.node(long(j) + s);
    mean /= double(N);
    VectorXd shift(a.dim());
    for (int i = 0; i < a.dim(); ++i) shift[i] = std::round(mean[i]);
    double acc = 0.0;
    for (int j = 0; j < N; ++j)
      acc += (a.node(j) - b.node(long(j) + s) - shift).squaredNorm();
    best = std::min(best, std::sqrt(h * acc));
  }
  return best;
}

static std::vector<OrbitRecord> survey_impl(const TorusManifold& M,
                                            const MagneticSystem& S,
                                            const LagrangianSystem& L,
                                            const VectorXi& alpha,
                                            const SolverParams& params,
                                            double tau, bool parallel) {
  if (!S.is_zero() && S.delta() != 0.0 && !atoroidal_test(M, S, alpha))
    throw std::runtime_error("survey requires a sigma-atoroidal class");

  std::vector<std::optional<OrbitRecord>> slots(params.seeds);
  auto run_seed = [&](int s) {
    std::mt19937_64 rng(params.rng_seed * 0x9e3779b97f4a7c15ull +
                        0x100000001b3ull * (s + 1));
    DiscreteLoop start = DiscreteLoop::random_fourier(
        rng, M.dim(), alpha, params.loop_samples, tau, params.seed_amplitude,
        params.seed_max_mode);
    DescentResult d = descend(M, S, L, start, params);
    if (d.trajectory.back().grad_norm > params.newton_switch_tol)
      return;  // nothing resembling a critical point at this start
    OrbitRecord rec = refine_newton(M, S, L, d.loop, params);
    rec.seed = s;
    slots[s] = std::move(rec);
  };

  if (parallel) {
    apply_thread_budget();
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int s = 0; s < params.seeds; ++s) run_seed(s);
  } else {
    for (int s = 0; s < params.seeds; ++s) run_seed(s);
  }

  // deterministic merge in seed order; dedup by action value and quotient distance
  std::vector<OrbitRecord> out;
  for (int s = 0; s < params.seeds; ++s) {
    if (!slots[s]) continue;
    OrbitRecord& cand = *slots[s];
    if (!cand.newton_ok) continue;
    bool dup = false;
    for (const auto& kept : out) {
      if (std::abs(kept.action - cand.action) <= params.dedup_action_tol &&
          loop_min_distance(kept.loop, cand.loop) <= params.dedup_dist_tol) {
        dup = true;
        break;
      }
    }
    if (!dup) out.push_back(std::move(cand));
  }
  return out;
}

std::vector<OrbitRecord> multi_start_survey(const TorusManifold& M,
                                            const MagneticSystem& S,
                                            const LagrangianSystem& L,
                                            const VectorXi& alpha,
                                            const SolverParams& params) {
  return survey_impl(M, S, L, alpha, params, params.tau, true);
}

std::vector<OrbitRecord> multi_start_survey_serial(const TorusManifold& M,
                                                   const MagneticSystem& S,
                                                   const LagrangianSystem& L,
                                                   const VectorXi& alpha,
                                                   const SolverParams& params) {
  return survey_impl(M, S, L, alpha, params, params.tau, false);
}

}  // namespace magflow
