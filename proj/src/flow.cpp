#include "magflow/flow.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace magflow {

VectorXd phase_point(const VectorXd& q, const VectorXd& p) {
  VectorXd z(q.size() + p.size());
  z << q, p;
  return z;
}

VectorXd magnetic_vector_field(const TorusManifold& M, const MagneticSystem& S,
                               const HamiltonianSystem& H, double t,
                               const VectorXd& z) {
  (void)M;
  const int n = H.dim();
  const VectorXd q = z.head(n), p = z.tail(n);
  const VectorXd a = H.dp(t, q, p);
  VectorXd b = -H.dq(t, q, p);
  if (!S.is_zero() && S.delta() != 0.0) b += S.delta() * (S.sigma(q) * a);
  return phase_point(a, b);
}

MatrixXd flow_jacobian(const TorusManifold& M, const MagneticSystem& S,
                       const HamiltonianSystem& H, double t,
                       const VectorXd& z) {
  (void)M;
  const int n = H.dim();
  const VectorXd q = z.head(n), p = z.tail(n);
  const MatrixXd dpp = H.dpp(t, q, p);
  const MatrixXd dqp = H.dqp(t, q, p);  // (k,i) = d2H/dq_k dp_i
  const MatrixXd dqq = H.dqq(t, q, p);
  MatrixXd J(2 * n, 2 * n);
  J.block(0, 0, n, n) = dqp.transpose();  // da/dq
  J.block(0, n, n, n) = dpp;              // da/dp
  MatrixXd bq = -dqq;
  MatrixXd bp = -dqp;
  if (!S.is_zero() && S.delta() != 0.0) {
    const double d = S.delta();
    const MatrixXd sig = S.sigma(q);
    const VectorXd a = H.dp(t, q, p);
    MatrixXd C(n, n);  // C(:,k) = dSigma/dq_k * a
    for (int k = 0; k < n; ++k) C.col(k) = S.sigma_deriv(q, k) * a;
    bq += d * (C + sig * dqp.transpose());
    bp += d * (sig * dpp);
  }
  J.block(n, 0, n, n) = bq;
  J.block(n, n, n, n) = bp;
  return J;
}

Trajectory integrate(const TorusManifold& M, const MagneticSystem& S,
                     const HamiltonianSystem& H, const VectorXd& z0, double t0,
                     double t1, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("dt must be > 0");
  const long steps = std::max<long>(1, static_cast<long>(std::ceil((t1 - t0) / dt - 1e-12)));
  const double h = (t1 - t0) / double(steps);
  const int n = H.dim();

  Trajectory out;
  out.times.resize(steps + 1);
  out.states.resize(2 * n, steps + 1);
  out.states.col(0) = z0;
  out.times[0] = t0;

  const double e0 = H.value(t0, z0.head(n), z0.tail(n));
  double drift = 0.0;

  VectorXd z = z0;
  for (long k = 0; k < steps; ++k) {
    const double t = t0 + k * h;
    const VectorXd k1 = magnetic_vector_field(M, S, H, t, z);
    const VectorXd k2 = magnetic_vector_field(M, S, H, t + 0.5 * h, z + 0.5 * h * k1);
    const VectorXd k3 = magnetic_vector_field(M, S, H, t + 0.5 * h, z + 0.5 * h * k2);
    const VectorXd k4 = magnetic_vector_field(M, S, H, t + h, z + h * k3);
    z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!z.allFinite()) {
      std::ostringstream os;
      os << "integration aborted: non-finite state at step " << (k + 1);
      throw std::runtime_error(os.str());
    }
    out.states.col(k + 1) = z;
    out.times[k + 1] = t0 + (k + 1) * h;
    if (!H.time_dependent())
      drift = std::max(drift,
                       std::abs(H.value(out.times[k + 1], z.head(n), z.tail(n)) - e0));
  }
  out.energy_drift = drift;
  return out;
}

MonodromyResult monodromy(const TorusManifold& M, const MagneticSystem& S,
                          const HamiltonianSystem& H, const VectorXd& z0,
                          double tau, double dt) {
  const long steps = std::max<long>(1, static_cast<long>(std::ceil(tau / dt - 1e-12)));
  const double h = tau / double(steps);
  const int n = H.dim();
  const int m = 2 * n;

  MonodromyResult out;
  out.trajectory.times.resize(steps + 1);
  out.trajectory.states.resize(m, steps + 1);
  out.trajectory.states.col(0) = z0;
  out.trajectory.times[0] = 0.0;

  VectorXd z = z0;
  MatrixXd Phi = MatrixXd::Identity(m, m);
  const double e0 = H.value(0.0, z0.head(n), z0.tail(n));
  double drift = 0.0;

  for (long k = 0; k < steps; ++k) {
    const double t = k * h;
    // joint RK4 on (z, Phi); the variational equations see the stage states
    const VectorXd k1 = magnetic_vector_field(M, S, H, t, z);
    const MatrixXd K1 = flow_jacobian(M, S, H, t, z) * Phi;
    const VectorXd z2 = z + 0.5 * h * k1;
    const MatrixXd P2 = Phi + 0.5 * h * K1;
    const VectorXd k2 = magnetic_vector_field(M, S, H, t + 0.5 * h, z2);
    const MatrixXd K2 = flow_jacobian(M, S, H, t + 0.5 * h, z2) * P2;
    const VectorXd z3 = z + 0.5 * h * k2;
    const MatrixXd P3 = Phi + 0.5 * h * K2;
    const VectorXd k3 = magnetic_vector_field(M, S, H, t + 0.5 * h, z3);
    const MatrixXd K3 = flow_jacobian(M, S, H, t + 0.5 * h, z3) * P3;
    const VectorXd z4 = z + h * k3;
    const MatrixXd P4 = Phi + h * K3;
    const VectorXd k4 = magnetic_vector_field(M, S, H, t + h, z4);
    const MatrixXd K4 = flow_jacobian(M, S, H, t + h, z4) * P4;
    z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    Phi += (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4);
    if (!z.allFinite() || !Phi.allFinite()) {
      std::ostringstream os;
      os << "integration aborted: non-finite state at step " << (k + 1);
      throw std::runtime_error(os.str());
    }
    out.trajectory.states.col(k + 1) = z;
    out.trajectory.times[k + 1] = (k + 1) * h;
    if (!H.time_dependent())
      drift = std::max(drift, std::abs(H.value(0.0, z.head(n), z.tail(n)) - e0));
  }
  out.trajectory.energy_drift = drift;
  out.dphi = Phi;
  return out;
}

MatrixXd twisted_symplectic_matrix(const MagneticSystem& S, const VectorXd& q) {
  const int n = S.dim();
  MatrixXd Omega = MatrixXd::Zero(2 * n, 2 * n);
  Omega.block(0, 0, n, n) = S.delta() * S.sigma(q);
  Omega.block(0, n, n, n) = -MatrixXd::Identity(n, n);
  Omega.block(n, 0, n, n) = MatrixXd::Identity(n, n);
  return Omega;
}

CotangentLoop legendre_lift(const TorusManifold& M, const LagrangianSystem& L,
                            const DiscreteLoop& q) {
  (void)M;
  MatrixXd p(q.dim(), q.size());
  for (int j = 0; j < q.size(); ++j)
    p.col(j) = L.dv(q.t_node(j), q.samples().col(j), q.velocity_centered(j));
  return CotangentLoop(q, std::move(p));
}

OrbitRecord crosscheck_orbit(const TorusManifold& M, const MagneticSystem& S,
                             const LagrangianSystem& L,
                             const HamiltonianSystem& H, OrbitRecord rec,
                             double dt, double eigenvalue_margin) {
  const CotangentLoop lifted = legendre_lift(M, L, rec.loop);
  const VectorXd q0 = rec.loop.samples().col(0);
  const VectorXd p0 = lifted.momenta.col(0);
  const VectorXd z0 = phase_point(q0, p0);
  const double tau = rec.loop.tau();

  const MonodromyResult mono = monodromy(M, S, H, z0, tau, dt);
  const VectorXd zT = mono.trajectory.states.col(mono.trajectory.states.cols() - 1);
  const VectorXd q_target = q0 + rec.loop.winding().cast<double>();
  const int n = rec.loop.dim();
  rec.flow_closure_residual =
      std::sqrt((zT.head(n) - q_target).squaredNorm() + (zT.tail(n) - p0).squaredNorm());

  Eigen::EigenSolver<MatrixXd> es(mono.dphi);
  double min_gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    min_gap = std::min(min_gap, std::abs(es.eigenvalues()[i] - std::complex<double>(1.0, 0.0)));
  rec.nondegenerate = min_gap > eigenvalue_margin;
  return rec;
}

}  // namespace magflow
