#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>

namespace magflow {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

// Reduce universal-cover coordinates mod Z^n into [0,1)^n. Only the
// periodic-coefficient evaluators call this; loops and trajectories always
// live in cover coordinates so winding information is never destroyed.
VectorXd wrap_to_cell(const VectorXd& q);

enum class MetricKind { Flat, Conformal, General };

// A torus R^n/Z^n carrying a periodic Riemannian metric. Flat metrics have a
// constant Gram matrix; conformal ones are e^{2f(q)} G0 with f a periodic
// cosine profile. The General kind accepts user callbacks but loses the
// closed-form diameter.
class TorusManifold {
 public:
  using MetricFn = std::function<MatrixXd(const VectorXd&)>;
  using MetricDerivFn = std::function<MatrixXd(const VectorXd&, int)>;
  using MetricDeriv2Fn = std::function<MatrixXd(const VectorXd&, int, int)>;

  static TorusManifold flat(MatrixXd gram);
  static TorusManifold flat_unit(int dim);
  // G(q) = e^{2f(q)} G0 with f(q) = amplitude * cos(2 pi <mode,q>).
  static TorusManifold conformal(MatrixXd base_gram, double amplitude,
                                 VectorXi mode);
  static TorusManifold general(int dim, MetricFn g, MetricDerivFn dg,
                               MetricDeriv2Fn d2g = nullptr);

  int dim() const { return dim_; }
  MetricKind kind() const { return kind_; }

  MatrixXd metric(const VectorXd& q) const;
  MatrixXd metric_inverse(const VectorXd& q) const;  // throws if not SPD
  MatrixXd metric_deriv(const VectorXd& q, int k) const;
  MatrixXd metric_deriv2(const VectorXd& q, int k, int l) const;

  // sup_q e^{f(q)}; 1 for flat. Used by the conformal diameter estimate.
  double conformal_factor_sup(int grid_per_axis = 64) const;

  double diameter(int grid_per_axis = 64) const;

  // Metric scaled by upsilon (conformal data and derivatives follow along).
  TorusManifold rescaled(double upsilon) const;

  const MatrixXd& base_gram() const { return gram_; }

  // metric norms of tangent vectors / covectors at q
  double norm_tangent(const VectorXd& q, const VectorXd& v) const;
  double norm_covector(const VectorXd& q, const VectorXd& p) const;

  std::string name = "flat";

 private:
  TorusManifold() = default;
  int dim_ = 0;
  MetricKind kind_ = MetricKind::Flat;
  MatrixXd gram_;  // flat Gram / conformal base Gram
  double scale_ = 1.0;
  double conf_amplitude_ = 0.0;
  VectorXi conf_mode_;
  MetricFn metric_fn_;
  MetricDerivFn metric_deriv_fn_;
  MetricDeriv2Fn metric_deriv2_fn_;

  double conformal_f(const VectorXd& q) const;
  VectorXd conformal_df(const VectorXd& q) const;
  MatrixXd conformal_d2f(const VectorXd& q) const;
};

enum class GrowthClass { Bounded, Linear, None };

// Closed magnetic 2-form sigma with a primitive theta on the universal
// cover. sigma(u,v) = u^T Sigma(q) v; d(theta) = lifted sigma. The field
// strength multiplier delta scales sigma in every action/flow evaluation.
class MagneticSystem {
 public:
  static MagneticSystem zero(int dim);
  // sigma = sum_{a<b} coeffs(a,b) dq_a ^ dq_b, constant coefficients.
  static MagneticSystem constant_form(MatrixXd coeffs, double delta);
  // Exact form with bounded periodic primitive
  //   theta = amplitude * sin(2 pi <mode,q>) dq_axis.
  static MagneticSystem sine_form(int dim, double amplitude, VectorXi mode,
                                  int axis, double delta);

  int dim() const { return dim_; }
  double delta() const { return delta_; }
  void set_delta(double d) { delta_ = d; }
  GrowthClass growth_class() const { return growth_; }
  bool is_zero() const { return zero_; }

  MatrixXd sigma(const VectorXd& q) const;
  MatrixXd sigma_deriv(const VectorXd& q, int k) const;

  // Primitive on the cover: theta(i) is the dq_i coefficient at q_cover.
  VectorXd theta(const VectorXd& q_cover) const;
  // J(i,k) = d theta_i / d q_k
  MatrixXd theta_jacobian(const VectorXd& q_cover) const;
  // second derivatives of component i
  MatrixXd theta_hessian(const VectorXd& q_cover, int i) const;

  // Exact growth-constant envelope for flat metrics, when known in closed
  // form (constant and sine families). Empty otherwise.
  std::optional<double> analytic_growth_constant(const TorusManifold& M) const;

  std::string name = "zero";

 private:
  MagneticSystem() = default;
  int dim_ = 0;
  GrowthClass growth_ = GrowthClass::None;
  double delta_ = 0.0;
  bool zero_ = true;
  // constant family
  bool constant_ = false;
  MatrixXd coeffs_;
  MatrixXd theta_lin_;  // theta = theta_lin_ * q
  // sine family
  bool sine_ = false;
  double amplitude_ = 0.0;
  VectorXi mode_;
  int axis_ = 0;
};

// ---- operations --------------------------------------------------------

// Bundle endomorphism Y(q) with sigma_q(u,v) = <Y(q)u, v>_g for all u,v.
MatrixXd lorentz_force(const TorusManifold& M, const MagneticSystem& S,
                       const VectorXd& q);

// ||Y||_{L^inf_g}: sup over a deterministic nested grid (k/R per axis) of
// the largest singular value of Y w.r.t. G. Monotone under R -> 2R.
double lorentz_norm(const TorusManifold& M, const MagneticSystem& S,
                    int grid_per_axis = 16);
double lorentz_norm_serial(const TorusManifold& M, const MagneticSystem& S,
                           int grid_per_axis = 16);

struct RescaleResult {
  double upsilon;
  TorusManifold manifold;
};

// Scale the metric by upsilon = max(1, ||Y||(1+margin)) so the rescaled
// Lorentz norm is <= 1.
RescaleResult rescale_into_r_sigma(const TorusManifold& M,
                                   const MagneticSystem& S,
                                   double margin = 0.0, int grid_per_axis = 16);

// Smallest sampled Theta with sup_{B(z,r)} |theta|_g <= Theta (r+1) for all
// sampled r <= r_max. For bounded primitives this is the sampled sup itself.
// Lower bound of the true constant on the sample grid.
double primitive_growth_constant(const TorusManifold& M,
                                 const MagneticSystem& S, const VectorXd& z,
                                 double r_max, int grid_per_axis = 33);

double diameter(const TorusManifold& M);

// omega_sigma(J_g xi, xi) - 1/2 G_g(xi, xi) in the horizontal-vertical frame
// at q, with xi = (xi_h, xi_v). Nonnegative whenever ||Y|| <= 1.
double tameness_gap(const TorusManifold& M, const MagneticSystem& S,
                    const VectorXd& q, const VectorXd& xi_h,
                    const VectorXd& xi_v);

}  // namespace magflow
