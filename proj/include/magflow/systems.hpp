#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>

#include "magflow/geometry.hpp"

namespace magflow {

// Periodic potential V(t,q), tau-periodic in t and Z^n-periodic in q, with
// gradient and Hessian in closed form.
class Potential {
 public:
  static Potential zero();
  static Potential constant(double c);
  // V = amplitude * cos(2 pi <mode,q>) * (time_dependent ? cos(2 pi t / tau) : 1)
  static Potential cosine(double amplitude, VectorXi mode,
                          bool time_dependent = false, double tau = 1.0);

  double value(double t, const VectorXd& q) const;
  VectorXd grad(double t, const VectorXd& q) const;
  MatrixXd hess(double t, const VectorXd& q) const;

  // sup over a grid (exact for the builtin families)
  double max_value() const;
  bool is_zero() const { return kind_ == Kind::Zero; }
  bool time_dependent() const { return time_dependent_; }
  std::string name = "zero";

 private:
  enum class Kind { Zero, Constant, Cosine };
  Kind kind_ = Kind::Zero;
  double value_ = 0.0;  // constant value / cosine amplitude
  VectorXi mode_;
  bool time_dependent_ = false;
  double tau_ = 1.0;
  double time_factor(double t) const;
};

// L(t,q,v) with first and second fiber-and-base derivatives, all in
// universal-cover coordinates. The builtin family is kinetic + potential,
// L = 1/2 <v,v>_g - V(t,q).
class LagrangianSystem {
 public:
  struct Callbacks {
    std::function<double(double, const VectorXd&, const VectorXd&)> value;
    std::function<VectorXd(double, const VectorXd&, const VectorXd&)> dq;
    std::function<VectorXd(double, const VectorXd&, const VectorXd&)> dv;
    std::function<MatrixXd(double, const VectorXd&, const VectorXd&)> dvv;
    // (k,i) entry = d^2 L / dq_k dv_i
    std::function<MatrixXd(double, const VectorXd&, const VectorXd&)> dqv;
    std::function<MatrixXd(double, const VectorXd&, const VectorXd&)> dqq;
  };

  static LagrangianSystem kinetic(const TorusManifold& M, Potential V);
  static LagrangianSystem custom(int dim, Callbacks cb);

  int dim() const { return dim_; }
  bool is_kinetic() const { return kinetic_; }
  const Potential& potential() const { return potential_; }

  double value(double t, const VectorXd& q, const VectorXd& v) const;
  VectorXd dq(double t, const VectorXd& q, const VectorXd& v) const;
  VectorXd dv(double t, const VectorXd& q, const VectorXd& v) const;
  MatrixXd dvv(double t, const VectorXd& q, const VectorXd& v) const;
  MatrixXd dqv(double t, const VectorXd& q, const VectorXd& v) const;
  MatrixXd dqq(double t, const VectorXd& q, const VectorXd& v) const;

 private:
  int dim_ = 0;
  bool kinetic_ = false;
  std::shared_ptr<const TorusManifold> manifold_;
  Potential potential_;
  Callbacks cb_;
};

enum class HamiltonianOrigin { BuiltinKinetic, FenchelOfL, Custom };

// H(t,q,p) with derivatives. Builtin kinetic is H = 1/2 <p,p>_{g^-1} + V.
class HamiltonianSystem {
 public:
  struct Callbacks {
    std::function<double(double, const VectorXd&, const VectorXd&)> value;
    std::function<VectorXd(double, const VectorXd&, const VectorXd&)> dq;
    std::function<VectorXd(double, const VectorXd&, const VectorXd&)> dp;
    std::function<MatrixXd(double, const VectorXd&, const VectorXd&)> dpp;
    // (k,i) entry = d^2 H / dq_k dp_i
    std::function<MatrixXd(double, const VectorXd&, const VectorXd&)> dqp;
    std::function<MatrixXd(double, const VectorXd&, const VectorXd&)> dqq;
  };

  static HamiltonianSystem kinetic(const TorusManifold& M, Potential V);
  static HamiltonianSystem custom(int dim, Callbacks cb, bool time_dependent);

  int dim() const { return dim_; }
  HamiltonianOrigin origin() const { return origin_; }
  bool time_dependent() const { return time_dependent_; }

  double value(double t, const VectorXd& q, const VectorXd& p) const;
  VectorXd dq(double t, const VectorXd& q, const VectorXd& p) const;
  VectorXd dp(double t, const VectorXd& q, const VectorXd& p) const;
  MatrixXd dpp(double t, const VectorXd& q, const VectorXd& p) const;
  MatrixXd dqp(double t, const VectorXd& q, const VectorXd& p) const;
  MatrixXd dqq(double t, const VectorXd& q, const VectorXd& p) const;

 private:
  friend HamiltonianSystem fenchel_dual(const TorusManifold&,
                                        const LagrangianSystem&);
  int dim_ = 0;
  HamiltonianOrigin origin_ = HamiltonianOrigin::Custom;
  bool time_dependent_ = false;
  Callbacks cb_;
};

// Fenchel dual H(t,q,p) = p.v - L(t,q,v) at the v solving grad_v L = p.
// Closed form for the kinetic family; per-fiber Newton otherwise.
HamiltonianSystem fenchel_dual(const TorusManifold& M,
                               const LagrangianSystem& L);

// The reverse transform, L(t,q,v) = p.v - H(t,q,p) at grad_p H = v.
LagrangianSystem fenchel_dual_lagrangian(const TorusManifold& M,
                                         const HamiltonianSystem& H);

// Solve grad_v L(t,q,v) = p to the requested residual. Throws
// "Legendre solve failed" with the offending point on divergence.
VectorXd legendre_solve_velocity(const LagrangianSystem& L, double t,
                                 const VectorXd& q, const VectorXd& p,
                                 double tol = 1e-12, int max_iters = 60);

}  // namespace magflow
