#include "magflow/systems.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace magflow {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

// ---- Potential ----------------------------------------------------------

Potential Potential::zero() { return Potential{}; }

Potential Potential::constant(double c) {
  Potential v;
  v.kind_ = Kind::Constant;
  v.value_ = c;
  v.name = "constant";
  return v;
}

Potential Potential::cosine(double amplitude, VectorXi mode,
                            bool time_dependent, double tau) {
  Potential v;
  v.kind_ = Kind::Cosine;
  v.value_ = amplitude;
  v.mode_ = std::move(mode);
  v.time_dependent_ = time_dependent;
  v.tau_ = tau;
  v.name = "cosine";
  return v;
}

double Potential::time_factor(double t) const {
  return time_dependent_ ? std::cos(kTwoPi * t / tau_) : 1.0;
}

double Potential::value(double t, const VectorXd& q) const {
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::Constant:
      return value_;
    case Kind::Cosine:
      return value_ * std::cos(kTwoPi * mode_.cast<double>().dot(q)) *
             time_factor(t);
  }
  return 0.0;
}

VectorXd Potential::grad(double t, const VectorXd& q) const {
  if (kind_ != Kind::Cosine) return VectorXd::Zero(q.size());
  const double s = std::sin(kTwoPi * mode_.cast<double>().dot(q));
  return (-kTwoPi * value_ * s * time_factor(t)) * mode_.cast<double>();
}

MatrixXd Potential::hess(double t, const VectorXd& q) const {
  if (kind_ != Kind::Cosine)
    return MatrixXd::Zero(q.size(), q.size());
  const double c = std::cos(kTwoPi * mode_.cast<double>().dot(q));
  const VectorXd mv = mode_.cast<double>();
  return (-kTwoPi * kTwoPi * value_ * c * time_factor(t)) *
         (mv * mv.transpose());
}

double Potential::max_value() const {
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::Constant:
      return value_;
    case Kind::Cosine:
      return std::abs(value_);
  }
  return 0.0;
}

// ---- LagrangianSystem ---------------------------------------------------

LagrangianSystem LagrangianSystem::kinetic(const TorusManifold& M,
                                           Potential V) {
  LagrangianSystem L;
  L.dim_ = M.dim();
  L.kinetic_ = true;
  L.manifold_ = std::make_shared<TorusManifold>(M);
  L.potential_ = std::move(V);
  return L;
}

LagrangianSystem LagrangianSystem::custom(int dim, Callbacks cb) {
  LagrangianSystem L;
  L.dim_ = dim;
  L.kinetic_ = false;
  L.cb_ = std::move(cb);
  return L;
}

double LagrangianSystem::value(double t, const VectorXd& q,
                               const VectorXd& v) const {
  if (kinetic_)
    return 0.5 * v.dot(manifold_->metric(q) * v) - potential_.value(t, q);
  return cb_.value(t, q, v);
}

VectorXd LagrangianSystem::dq(double t, const VectorXd& q,
                              const VectorXd& v) const {
  if (kinetic_) {
    VectorXd g(dim_);
    for (int k = 0; k < dim_; ++k)
      g[k] = 0.5 * v.dot(manifold_->metric_deriv(q, k) * v);
    return g - potential_.grad(t, q);
  }
  return cb_.dq(t, q, v);
}

VectorXd LagrangianSystem::dv(double t, const VectorXd& q,
                              const VectorXd& v) const {
  if (kinetic_) return manifold_->metric(q) * v;
  return cb_.dv(t, q, v);
}

MatrixXd LagrangianSystem::dvv(double t, const VectorXd& q,
                               const VectorXd& v) const {
  if (kinetic_) return manifold_->metric(q);
  return cb_.dvv(t, q, v);
}

MatrixXd LagrangianSystem::dqv(double t, const VectorXd& q,
                               const VectorXd& v) const {
  if (kinetic_) {
    MatrixXd m(dim_, dim_);
    for (int k = 0; k < dim_; ++k)
      m.row(k) = (manifold_->metric_deriv(q, k) * v).transpose();
    return m;
  }
  return cb_.dqv(t, q, v);
}

MatrixXd LagrangianSystem::dqq(double t, const VectorXd& q,
                               const VectorXd& v) const {
  if (kinetic_) {
    MatrixXd m(dim_, dim_);
    for (int k = 0; k < dim_; ++k)
      for (int l = 0; l <= k; ++l) {
        m(k, l) = 0.5 * v.dot(manifold_->metric_deriv2(q, k, l) * v);
        m(l, k) = m(k, l);
      }
    return m - potential_.hess(t, q);
  }
  return cb_.dqq(t, q, v);
}

// ---- HamiltonianSystem --------------------------------------------------

HamiltonianSystem HamiltonianSystem::kinetic(const TorusManifold& M,
                                             Potential V) {
  // Derivatives of G^{-1}: d_k G^{-1} = -G^{-1} (d_k G) G^{-1}.
  auto Mp = std::make_shared<TorusManifold>(M);
  auto Vp = std::make_shared<Potential>(std::move(V));
  const int n = M.dim();
  Callbacks cb;
  cb.value = [Mp, Vp](double t, const VectorXd& q, const VectorXd& p) {
    return 0.5 * p.dot(Mp->metric_inverse(q) * p) + Vp->value(t, q);
  };
  cb.dp = [Mp](double, const VectorXd& q, const VectorXd& p) {
    return VectorXd(Mp->metric_inverse(q) * p);
  };
  cb.dpp = [Mp](double, const VectorXd& q, const VectorXd&) {
    return Mp->metric_inverse(q);
  };
  cb.dq = [Mp, Vp, n](double t, const VectorXd& q, const VectorXd& p) {
    const MatrixXd Gi = Mp->metric_inverse(q);
    VectorXd g(n);
    for (int k = 0; k < n; ++k)
      g[k] = -0.5 * p.dot(Gi * Mp->metric_deriv(q, k) * Gi * p);
    return VectorXd(g + Vp->grad(t, q));
  };
  cb.dqp = [Mp, n](double, const VectorXd& q, const VectorXd& p) {
    const MatrixXd Gi = Mp->metric_inverse(q);
    MatrixXd m(n, n);
    for (int k = 0; k < n; ++k)
      m.row(k) = (-Gi * Mp->metric_deriv(q, k) * Gi * p).transpose();
    return m;
  };
  cb.dqq = [Mp, Vp, n](double t, const VectorXd& q, const VectorXd& p) {
    const MatrixXd Gi = Mp->metric_inverse(q);
    MatrixXd m(n, n);
    for (int k = 0; k < n; ++k) {
      const MatrixXd Dk = Mp->metric_deriv(q, k);
      for (int l = 0; l <= k; ++l) {
        const MatrixXd Dl = Mp->metric_deriv(q, l);
        const MatrixXd Dkl = Mp->metric_deriv2(q, k, l);
        // d_l d_k G^{-1} = G^{-1}(Dl Gi Dk + Dk Gi Dl - Dkl)G^{-1}
        const MatrixXd second = Gi * (Dl * Gi * Dk + Dk * Gi * Dl - Dkl) * Gi;
        m(k, l) = 0.5 * p.dot(second * p);
        m(l, k) = m(k, l);
      }
    }
    return MatrixXd(m + Vp->hess(t, q));
  };
  HamiltonianSystem H;
  H.dim_ = n;
  H.origin_ = HamiltonianOrigin::BuiltinKinetic;
  H.time_dependent_ = Vp->time_dependent();
  H.cb_ = std::move(cb);
  return H;
}

HamiltonianSystem HamiltonianSystem::custom(int dim, Callbacks cb,
                                            bool time_dependent) {
  HamiltonianSystem H;
  H.dim_ = dim;
  H.origin_ = HamiltonianOrigin::Custom;
  H.time_dependent_ = time_dependent;
  H.cb_ = std::move(cb);
  return H;
}

double HamiltonianSystem::value(double t, const VectorXd& q,
                                const VectorXd& p) const {
  return cb_.value(t, q, p);
}
VectorXd HamiltonianSystem::dq(double t, const VectorXd& q,
                               const VectorXd& p) const {
  return cb_.dq(t, q, p);
}
VectorXd HamiltonianSystem::dp(double t, const VectorXd& q,
                               const VectorXd& p) const {
  return cb_.dp(t, q, p);
}
MatrixXd HamiltonianSystem::dpp(double t, const VectorXd& q,
                                const VectorXd& p) const {
  return cb_.dpp(t, q, p);
}
MatrixXd HamiltonianSystem::dqp(double t, const VectorXd& q,
                                const VectorXd& p) const {
  return cb_.dqp(t, q, p);
}
MatrixXd HamiltonianSystem::dqq(double t, const VectorXd& q,
                                const VectorXd& p) const {
  return cb_.dqq(t, q, p);
}

// ---- Fenchel duality ----------------------------------------------------

VectorXd legendre_solve_velocity(const LagrangianSystem& L, double t,
                                 const VectorXd& q, const VectorXd& p,
                                 double tol, int max_iters) {
  VectorXd v = L.dvv(t, q, VectorXd::Zero(q.size()))
                   .ldlt()
                   .solve(p - L.dv(t, q, VectorXd::Zero(q.size())));
  for (int it = 0; it < max_iters; ++it) {
    const VectorXd r = L.dv(t, q, v) - p;
    if (r.norm() <= tol * (1.0 + p.norm())) return v;
    const VectorXd step = L.dvv(t, q, v).ldlt().solve(r);
    if (!step.allFinite()) break;
    v -= step;
  }
  const VectorXd r = L.dv(t, q, v) - p;
  if (r.norm() <= tol * (1.0 + p.norm())) return v;
  std::ostringstream os;
  os << "Legendre solve failed at t=" << t << " q=[" << q.transpose()
     << "] p=[" << p.transpose() << "]";
  throw std::runtime_error(os.str());
}

HamiltonianSystem fenchel_dual(const TorusManifold& M,
                               const LagrangianSystem& L) {
  if (L.is_kinetic()) {
    HamiltonianSystem H = HamiltonianSystem::kinetic(M, L.potential());
    return H;
  }
  auto Lp = std::make_shared<LagrangianSystem>(L);
  const int n = L.dim();
  HamiltonianSystem::Callbacks cb;
  auto velocity = [Lp](double t, const VectorXd& q, const VectorXd& p) {
    return legendre_solve_velocity(*Lp, t, q, p);
  };
  cb.value = [Lp, velocity](double t, const VectorXd& q, const VectorXd& p) {
    const VectorXd v = velocity(t, q, p);
    return p.dot(v) - Lp->value(t, q, v);
  };
  cb.dp = [velocity](double t, const VectorXd& q, const VectorXd& p) {
    return velocity(t, q, p);
  };
  cb.dq = [Lp, velocity](double t, const VectorXd& q, const VectorXd& p) {
    return VectorXd(-Lp->dq(t, q, velocity(t, q, p)));
  };
  cb.dpp = [Lp, velocity](double t, const VectorXd& q, const VectorXd& p) {
    const VectorXd v = velocity(t, q, p);
    return MatrixXd(
        Lp->dvv(t, q, v).ldlt().solve(MatrixXd::Identity(v.size(), v.size())));
  };
  cb.dqp = [Lp, velocity, n](double t, const VectorXd& q, const VectorXd& p) {
    // (k,i) = d^2 H/dq_k dp_i = (dv/dq)^T ... = -(A^{-1} B)^T with
    // A = d^2L/dv^2 and B(k,i) = d^2L/dq_k dv_i read as dv/dq = -A^{-1} B^T.
    const VectorXd v = velocity(t, q, p);
    const MatrixXd A = Lp->dvv(t, q, v);
    const MatrixXd B = Lp->dqv(t, q, v);
    const MatrixXd dvdq = -A.ldlt().solve(B.transpose());  // (i,k) = dv_i/dq_k
    return MatrixXd(dvdq.transpose());
  };
  cb.dqq = [Lp, velocity](double t, const VectorXd& q, const VectorXd& p) {
    const VectorXd v = velocity(t, q, p);
    const MatrixXd A = Lp->dvv(t, q, v);
    const MatrixXd B = Lp->dqv(t, q, v);
    const MatrixXd AinvBt = A.ldlt().solve(B.transpose());
    return MatrixXd(-Lp->dqq(t, q, v) + B * AinvBt);
  };
  HamiltonianSystem H = HamiltonianSystem::custom(n, std::move(cb), false);
  H.origin_ = HamiltonianOrigin::FenchelOfL;
  return H;
}

LagrangianSystem fenchel_dual_lagrangian(const TorusManifold& M,
                                         const HamiltonianSystem& H) {
  (void)M;
  auto Hp = std::make_shared<HamiltonianSystem>(H);
  const int n = H.dim();
  auto momentum = [Hp](double t, const VectorXd& q, const VectorXd& v) {
    // solve grad_p H(t,q,p) = v by Newton on the fiber
    VectorXd p = VectorXd::Zero(v.size());
    for (int it = 0; it < 60; ++it) {
      const VectorXd r = Hp->dp(t, q, p) - v;
      if (r.norm() <= 1e-12 * (1.0 + v.norm())) return p;
      p -= Hp->dpp(t, q, p).ldlt().solve(r);
    }
    const VectorXd r = Hp->dp(t, q, p) - v;
    if (r.norm() <= 1e-12 * (1.0 + v.norm())) return p;
    throw std::runtime_error("Legendre solve failed (momentum fiber)");
  };
  LagrangianSystem::Callbacks cb;
  cb.value = [Hp, momentum](double t, const VectorXd& q, const VectorXd& v) {
    const VectorXd p = momentum(t, q, v);
    return p.dot(v) - Hp->value(t, q, p);
  };
  cb.dv = [momentum](double t, const VectorXd& q, const VectorXd& v) {
    return momentum(t, q, v);
  };
  cb.dq = [Hp, momentum](double t, const VectorXd& q, const VectorXd& v) {
    return VectorXd(-Hp->dq(t, q, momentum(t, q, v)));
  };
  cb.dvv = [Hp, momentum](double t, const VectorXd& q, const VectorXd& v) {
    const VectorXd p = momentum(t, q, v);
    return MatrixXd(
        Hp->dpp(t, q, p).ldlt().solve(MatrixXd::Identity(v.size(), v.size())));
  };
  cb.dqv = [Hp, momentum](double t, const VectorXd& q, const VectorXd& v) {
    const VectorXd p = momentum(t, q, v);
    const MatrixXd A = Hp->dpp(t, q, p);
    const MatrixXd B = Hp->dqp(t, q, p);
    const MatrixXd dpdq = -A.ldlt().solve(B.transpose());
    return MatrixXd(dpdq.transpose());
  };
  cb.dqq = [Hp, momentum](double t, const VectorXd& q, const VectorXd& v) {
    const VectorXd p = momentum(t, q, v);
    const MatrixXd A = Hp->dpp(t, q, p);
    const MatrixXd B = Hp->dqp(t, q, p);
    const MatrixXd AinvBt = A.ldlt().solve(B.transpose());
    return MatrixXd(-Hp->dqq(t, q, p) + B * AinvBt);
  };
  return LagrangianSystem::custom(n, std::move(cb));
}

}  // namespace magflow
