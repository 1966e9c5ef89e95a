#include "magflow/loop_ops.hpp"

#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "magflow/parallel.hpp"

namespace magflow {

bool atoroidal_test(const TorusManifold& M, const MagneticSystem& S,
                    const VectorXi& alpha, int resolution) {
  (void)M;
  const int n = S.dim();
  const VectorXd a = alpha.cast<double>();
  // flux of sigma over the sweep torus f(s,t) = t*alpha + s*e_j, midpoint rule
  for (int dir = 0; dir < n; ++dir) {
    double flux = 0.0;
    for (int is = 0; is < resolution; ++is) {
      const double s = (is + 0.5) / resolution;
      for (int it = 0; it < resolution; ++it) {
        const double t = (it + 0.5) / resolution;
        VectorXd q = t * a;
        q[dir] += s;
        flux += a.dot(S.sigma(q).col(dir));
      }
    }
    flux /= double(resolution) * double(resolution);
    if (std::abs(flux) >= 1e-8) return false;
  }
  return true;
}

namespace detail {

double action_sigma_unchecked(const MagneticSystem& S, const DiscreteLoop& q) {
  const double h = q.step();
  double acc = 0.0;
  for (int j = 0; j < q.size(); ++j)
    acc += S.theta(q.midpoint(j)).dot(q.velocity_mid(j));
  return h * acc;
}

double action_total_unchecked(const MagneticSystem& S,
                              const LagrangianSystem& L,
                              const DiscreteLoop& q) {
  const double h = q.step();
  double acc = 0.0;
  const bool magnetic = !S.is_zero() && S.delta() != 0.0;
  for (int j = 0; j < q.size(); ++j) {
    const VectorXd xm = q.midpoint(j);
    const VectorXd v = q.velocity_mid(j);
    acc += L.value(q.t_mid(j), xm, v);
    if (magnetic) acc += S.delta() * S.theta(xm).dot(v);
  }
  return h * acc;
}

}  // namespace detail

double action_sigma(const TorusManifold& M, const MagneticSystem& S,
                    const DiscreteLoop& q) {
  if (!atoroidal_test(M, S, q.winding()))
    throw std::runtime_error("action_sigma gauge-dependent on this class");
  const DiscreteLoop qq = q.with_resolution_guard();
  return detail::action_sigma_unchecked(S, qq);
}

double action_lagrangian(const TorusManifold& M, const LagrangianSystem& L,
                         const DiscreteLoop& q) {
  (void)M;
  const DiscreteLoop qq = q.with_resolution_guard();
  const double h = qq.step();
  double acc = 0.0;
  for (int j = 0; j < qq.size(); ++j)
    acc += L.value(qq.t_mid(j), qq.midpoint(j), qq.velocity_mid(j));
  return h * acc;
}

double action_total(const TorusManifold& M, const MagneticSystem& S,
                    const LagrangianSystem& L, const DiscreteLoop& q) {
  if (!S.is_zero() && S.delta() != 0.0 && !atoroidal_test(M, S, q.winding()))
    throw std::runtime_error("action_sigma gauge-dependent on this class");
  const DiscreteLoop qq = q.with_resolution_guard();
  return detail::action_total_unchecked(S, L, qq);
}

double action_hamiltonian(const TorusManifold& M, const MagneticSystem& S,
                          const HamiltonianSystem& H, const CotangentLoop& x) {
  if (!S.is_zero() && S.delta() != 0.0 &&
      !atoroidal_test(M, S, x.base.winding()))
    throw std::runtime_error("action_sigma gauge-dependent on this class");
  const DiscreteLoop& q = x.base;
  const double h = q.step();
  const int N = q.size();
  double acc = 0.0;
  for (int j = 0; j < N; ++j) {
    const VectorXd pm = 0.5 * (x.momenta.col(j) + x.momenta.col((j + 1) % N));
    acc += pm.dot(q.velocity_mid(j)) - H.value(q.t_mid(j), q.midpoint(j), pm);
  }
  double out = h * acc;
  if (!S.is_zero() && S.delta() != 0.0)
    out += S.delta() * detail::action_sigma_unchecked(S, q);
  return out;
}

MatrixXd loop_differential(const TorusManifold& M, const MagneticSystem& S,
                           const LagrangianSystem& L, const DiscreteLoop& q) {
  (void)M;
  const int N = q.size();
  const int n = q.dim();
  const double h = q.step();
  const double delta = S.delta();
  const bool magnetic = !S.is_zero() && delta != 0.0;
  MatrixXd D = MatrixXd::Zero(n, N);
  for (int j = 0; j < N; ++j) {
    const int a = j, b = (j + 1) % N;
    const double t = q.t_mid(j);
    const VectorXd xm = q.midpoint(j);
    const VectorXd v = q.velocity_mid(j);
    const VectorXd gq = L.dq(t, xm, v);
    const VectorXd gv = L.dv(t, xm, v);
    D.col(a) += 0.5 * h * gq - gv;
    D.col(b) += 0.5 * h * gq + gv;
    if (magnetic) {
      const VectorXd th = S.theta(xm);
      const VectorXd jv = S.theta_jacobian(xm).transpose() * v;
      D.col(a) += delta * (0.5 * h * jv - th);
      D.col(b) += delta * (0.5 * h * jv + th);
    }
  }
  return D;
}

MatrixXd w12_precondition(const MatrixXd& rhs, double h) {
  // Solve (I - Lap_h) u = rhs per coordinate on the periodic grid via the
  // Sherman-Morrison splitting of the cyclic tridiagonal system.
  const int N = static_cast<int>(rhs.cols());
  const double off = -1.0 / (h * h);
  const double diag = 1.0 + 2.0 / (h * h);
  // B = T + gamma e0 e0^T + (off^2/gamma) e_{N-1} e_{N-1}^T correction form:
  // use the standard trick with gamma = -diag.
  const double gamma = -diag;
  Eigen::VectorXd dv = Eigen::VectorXd::Constant(N, diag);
  dv[0] -= gamma;
  dv[N - 1] -= off * off / gamma;

  auto thomas = [&](Eigen::VectorXd r) {
    Eigen::VectorXd c(N);
    c[0] = off / dv[0];
    r[0] /= dv[0];
    for (int i = 1; i < N; ++i) {
      const double m = 1.0 / (dv[i] - off * c[i - 1]);
      c[i] = off * m;
      r[i] = (r[i] - off * r[i - 1]) * m;
    }
    for (int i = N - 2; i >= 0; --i) r[i] -= c[i] * r[i + 1];
    return r;
  };

  Eigen::VectorXd u = Eigen::VectorXd::Zero(N);
  u[0] = gamma;
  u[N - 1] = off;
  const Eigen::VectorXd zu = thomas(u);
  MatrixXd out(rhs.rows(), N);
  for (int i = 0; i < rhs.rows(); ++i) {
    const Eigen::VectorXd y = thomas(rhs.row(i).transpose());
    const double vy = y[0] + (off / gamma) * y[N - 1];
    const double vz = 1.0 + zu[0] + (off / gamma) * zu[N - 1];
    out.row(i) = (y - zu * (vy / vz)).transpose();
  }
  return out;
}

MatrixXd loop_gradient(const TorusManifold& M, const MagneticSystem& S,
                       const LagrangianSystem& L, const DiscreteLoop& q,
                       InnerProduct inner) {
  const MatrixXd D = loop_differential(M, S, L, q);
  const double h = q.step();
  if (inner == InnerProduct::W12) return w12_precondition(D / h, h);
  MatrixXd g(q.dim(), q.size());
  for (int j = 0; j < q.size(); ++j)
    g.col(j) = M.metric(q.samples().col(j)).ldlt().solve(D.col(j)) / h;
  return g;
}

MatrixXd loop_hessian_form(const TorusManifold& M, const MagneticSystem& S,
                           const LagrangianSystem& L, const DiscreteLoop& q) {
  (void)M;
  const int N = q.size();
  const int n = q.dim();
  const double h = q.step();
  const double delta = S.delta();
  const bool magnetic = !S.is_zero() && delta != 0.0;
  MatrixXd H = MatrixXd::Zero(n * N, n * N);

  // map (xbar, v) -> (x_a, x_b): xbar = (x_a+x_b)/2, v = (x_b-x_a)/h
  MatrixXd T(2 * n, 2 * n);
  T.setZero();
  T.block(0, 0, n, n) = 0.5 * MatrixXd::Identity(n, n);
  T.block(0, n, n, n) = 0.5 * MatrixXd::Identity(n, n);
  T.block(n, 0, n, n) = -MatrixXd::Identity(n, n) / h;
  T.block(n, n, n, n) = MatrixXd::Identity(n, n) / h;

  for (int j = 0; j < N; ++j) {
    const int a = j, b = (j + 1) % N;
    const double t = q.t_mid(j);
    const VectorXd xm = q.midpoint(j);
    const VectorXd v = q.velocity_mid(j);

    MatrixXd C = L.dqq(t, xm, v);        // (k,l) = d2/dq dq
    MatrixXd Bqv = L.dqv(t, xm, v);      // (k,i) = d2/dq_k dv_i
    MatrixXd A = L.dvv(t, xm, v);        // (i,i')
    if (magnetic) {
      for (int i = 0; i < n; ++i) C += delta * v[i] * S.theta_hessian(xm, i);
      Bqv += delta * S.theta_jacobian(xm).transpose();
    }
    MatrixXd Hy(2 * n, 2 * n);
    Hy.block(0, 0, n, n) = C;
    Hy.block(0, n, n, n) = Bqv;
    Hy.block(n, 0, n, n) = Bqv.transpose();
    Hy.block(n, n, n, n) = A;

    const MatrixXd K = h * (T.transpose() * Hy * T);
    H.block(a * n, a * n, n, n) += K.block(0, 0, n, n);
    H.block(a * n, b * n, n, n) += K.block(0, n, n, n);
    H.block(b * n, a * n, n, n) += K.block(n, 0, n, n);
    H.block(b * n, b * n, n, n) += K.block(n, n, n, n);
  }
  return 0.5 * (H + H.transpose());
}

void loop_mass_sqrt(const TorusManifold& M, const DiscreteLoop& q,
                    MatrixXd& sqrt_out, MatrixXd& inv_sqrt_out) {
  const int N = q.size();
  const int n = q.dim();
  const double h = q.step();
  sqrt_out = MatrixXd::Zero(n * N, n * N);
  inv_sqrt_out = MatrixXd::Zero(n * N, n * N);
  for (int j = 0; j < N; ++j) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(h * M.metric(q.samples().col(j)));
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw std::runtime_error("metric not positive definite");
    const VectorXd s = es.eigenvalues().cwiseSqrt();
    sqrt_out.block(j * n, j * n, n, n) =
        es.eigenvectors() * s.asDiagonal() * es.eigenvectors().transpose();
    inv_sqrt_out.block(j * n, j * n, n, n) =
        es.eigenvectors() * s.cwiseInverse().asDiagonal() *
        es.eigenvectors().transpose();
  }
}

MatrixXd loop_hessian(const TorusManifold& M, const MagneticSystem& S,
                      const LagrangianSystem& L, const DiscreteLoop& q) {
  const MatrixXd HE = loop_hessian_form(M, S, L, q);
  MatrixXd Ms, Mi;
  loop_mass_sqrt(M, q, Ms, Mi);
  MatrixXd W = Mi * HE * Mi;
  return 0.5 * (W + W.transpose());
}

double loop_length(const TorusManifold& M, const DiscreteLoop& q) {
  const double h = q.step();
  double acc = 0.0;
  for (int j = 0; j < q.size(); ++j)
    acc += M.norm_tangent(q.midpoint(j), q.velocity_mid(j));
  return h * acc;
}

double loop_speed_l2sq(const TorusManifold& M, const DiscreteLoop& q) {
  const double h = q.step();
  double acc = 0.0;
  for (int j = 0; j < q.size(); ++j) {
    const double s = M.norm_tangent(q.midpoint(j), q.velocity_mid(j));
    acc += s * s;
  }
  return h * acc;
}

double pair_differential(const MatrixXd& differential, const MatrixXd& xi) {
  return (differential.array() * xi.array()).sum();
}

// ---- batch kernels ------------------------------------------------------

std::vector<double> batch_action_sigma_serial(
    const TorusManifold& M, const MagneticSystem& S,
    const std::vector<DiscreteLoop>& loops) {
  (void)M;
  std::vector<double> out(loops.size());
  for (std::size_t i = 0; i < loops.size(); ++i)
    out[i] = detail::action_sigma_unchecked(S, loops[i]);
  return out;
}

std::vector<double> batch_action_sigma(const TorusManifold& M,
                                       const MagneticSystem& S,
                                       const std::vector<DiscreteLoop>& loops) {
  (void)M;
  apply_thread_budget();
  std::vector<double> out(loops.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long i = 0; i < static_cast<long>(loops.size()); ++i)
    out[i] = detail::action_sigma_unchecked(S, loops[i]);
  return out;
}

std::vector<double> batch_action_total_serial(
    const TorusManifold& M, const MagneticSystem& S, const LagrangianSystem& L,
    const std::vector<DiscreteLoop>& loops) {
  (void)M;
  std::vector<double> out(loops.size());
  for (std::size_t i = 0; i < loops.size(); ++i)
    out[i] = detail::action_total_unchecked(S, L, loops[i]);
  return out;
}

std::vector<double> batch_action_total(const TorusManifold& M,
                                       const MagneticSystem& S,
                                       const LagrangianSystem& L,
                                       const std::vector<DiscreteLoop>& loops) {
  (void)M;
  apply_thread_budget();
  std::vector<double> out(loops.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long i = 0; i < static_cast<long>(loops.size()); ++i)
    out[i] = detail::action_total_unchecked(S, L, loops[i]);
  return out;
}

}  // namespace magflow
