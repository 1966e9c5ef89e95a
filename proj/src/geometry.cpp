#include "magflow/geometry.hpp"

#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "magflow/parallel.hpp"

namespace magflow {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Iterate the nested corner grid {k/R : k=0..R-1}^n in lexicographic order.
// Nested under R -> 2R, which makes grid sup estimates monotone.
template <typename Fn>
void for_each_cell_point(int n, int R, Fn&& fn) {
  VectorXi idx = VectorXi::Zero(n);
  VectorXd q(n);
  const long total = static_cast<long>(std::pow(double(R), n));
  for (long c = 0; c < total; ++c) {
    long rem = c;
    for (int i = 0; i < n; ++i) {
      idx[i] = static_cast<int>(rem % R);
      rem /= R;
    }
    for (int i = 0; i < n; ++i) q[i] = double(idx[i]) / double(R);
    fn(q);
  }
}

MatrixXd spd_inverse_sqrt(const MatrixXd& G) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(G);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
    throw std::runtime_error("metric not positive definite");
  VectorXd inv_sqrt = es.eigenvalues().cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

VectorXd wrap_to_cell(const VectorXd& q) {
  VectorXd w(q.size());
  for (int i = 0; i < q.size(); ++i) w[i] = q[i] - std::floor(q[i]);
  return w;
}

// ---- TorusManifold ------------------------------------------------------

TorusManifold TorusManifold::flat(MatrixXd gram) {
  if (gram.rows() != gram.cols() || gram.rows() < 2)
    throw std::invalid_argument("flat metric needs a square Gram matrix, dim >= 2");
  if ((gram - gram.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("Gram matrix must be symmetric");
  TorusManifold m;
  m.dim_ = static_cast<int>(gram.rows());
  m.kind_ = MetricKind::Flat;
  m.gram_ = std::move(gram);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m.gram_);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("Gram matrix must be positive definite");
  return m;
}

TorusManifold TorusManifold::flat_unit(int dim) {
  return flat(MatrixXd::Identity(dim, dim));
}

TorusManifold TorusManifold::conformal(MatrixXd base_gram, double amplitude,
                                       VectorXi mode) {
  TorusManifold m = flat(std::move(base_gram));
  if (mode.size() != m.dim_)
    throw std::invalid_argument("conformal mode vector has wrong dimension");
  m.kind_ = MetricKind::Conformal;
  m.conf_amplitude_ = amplitude;
  m.conf_mode_ = std::move(mode);
  m.name = "conformal";
  return m;
}

TorusManifold TorusManifold::general(int dim, MetricFn g, MetricDerivFn dg,
                                     MetricDeriv2Fn d2g) {
  TorusManifold m;
  m.dim_ = dim;
  m.kind_ = MetricKind::General;
  m.gram_ = MatrixXd::Identity(dim, dim);
  m.metric_fn_ = std::move(g);
  m.metric_deriv_fn_ = std::move(dg);
  m.metric_deriv2_fn_ = std::move(d2g);
  m.name = "general";
  return m;
}

double TorusManifold::conformal_f(const VectorXd& q) const {
  return conf_amplitude_ * std::cos(kTwoPi * conf_mode_.cast<double>().dot(q));
}

VectorXd TorusManifold::conformal_df(const VectorXd& q) const {
  const double s = std::sin(kTwoPi * conf_mode_.cast<double>().dot(q));
  return (-kTwoPi * conf_amplitude_ * s) * conf_mode_.cast<double>();
}

MatrixXd TorusManifold::conformal_d2f(const VectorXd& q) const {
  const double c = std::cos(kTwoPi * conf_mode_.cast<double>().dot(q));
  const VectorXd mv = conf_mode_.cast<double>();
  return (-kTwoPi * kTwoPi * conf_amplitude_ * c) * (mv * mv.transpose());
}

MatrixXd TorusManifold::metric(const VectorXd& q) const {
  switch (kind_) {
    case MetricKind::Flat:
      return scale_ * gram_;
    case MetricKind::Conformal:
      return scale_ * std::exp(2.0 * conformal_f(q)) * gram_;
    case MetricKind::General:
      return scale_ * metric_fn_(wrap_to_cell(q));
  }
  throw std::logic_error("unreachable");
}

MatrixXd TorusManifold::metric_inverse(const VectorXd& q) const {
  const MatrixXd G = metric(q);
  Eigen::LLT<MatrixXd> llt(G);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("metric not positive definite");
  return llt.solve(MatrixXd::Identity(dim_, dim_));
}

MatrixXd TorusManifold::metric_deriv(const VectorXd& q, int k) const {
  switch (kind_) {
    case MetricKind::Flat:
      return MatrixXd::Zero(dim_, dim_);
    case MetricKind::Conformal:
      return 2.0 * conformal_df(q)[k] * metric(q);
    case MetricKind::General:
      return scale_ * metric_deriv_fn_(wrap_to_cell(q), k);
  }
  throw std::logic_error("unreachable");
}

MatrixXd TorusManifold::metric_deriv2(const VectorXd& q, int k, int l) const {
  switch (kind_) {
    case MetricKind::Flat:
      return MatrixXd::Zero(dim_, dim_);
    case MetricKind::Conformal: {
      const VectorXd df = conformal_df(q);
      const MatrixXd d2f = conformal_d2f(q);
      return (4.0 * df[k] * df[l] + 2.0 * d2f(k, l)) * metric(q);
    }
    case MetricKind::General:
      if (!metric_deriv2_fn_)
        throw std::runtime_error(
            "second metric derivatives unavailable for this general metric");
      return scale_ * metric_deriv2_fn_(wrap_to_cell(q), k, l);
  }
  throw std::logic_error("unreachable");
}

double TorusManifold::conformal_factor_sup(int grid_per_axis) const {
  if (kind_ != MetricKind::Conformal) return 1.0;
  // f is a single cosine profile; its sup is |amplitude|, attained on the
  // grid whenever the mode divides the resolution. Use the closed form.
  (void)grid_per_axis;
  return std::exp(std::abs(conf_amplitude_));
}

double TorusManifold::diameter(int grid_per_axis) const {
  if (kind_ == MetricKind::General)
    throw std::runtime_error("diameter unavailable; supply manually");
  const MatrixXd G = scale_ * gram_;
  double flat_diam = 0.0;
  bool diagonal = true;
  for (int i = 0; i < dim_ && diagonal; ++i)
    for (int j = 0; j < dim_; ++j)
      if (i != j && std::abs(G(i, j)) > 1e-14) diagonal = false;
  if (diagonal) {
    // Voronoi cell of Z^n is the unit box; circumradius is the half-diagonal.
    flat_diam = 0.5 * std::sqrt(G.diagonal().sum());
  } else {
    // Covering radius by sampling the fundamental cell against nearby
    // lattice translates. Lower bound of the true circumradius.
    double best = 0.0;
    const int shell = 2;
    for_each_cell_point(dim_, grid_per_axis, [&](const VectorXd& q) {
      double nearest = std::numeric_limits<double>::infinity();
      VectorXi m = VectorXi::Constant(dim_, -shell);
      while (true) {
        VectorXd d = q - m.cast<double>();
        nearest = std::min(nearest, std::sqrt(d.dot(G * d)));
        int i = 0;
        for (; i < dim_; ++i) {
          if (m[i] < shell) {
            ++m[i];
            break;
          }
          m[i] = -shell;
        }
        if (i == dim_) break;
      }
      best = std::max(best, nearest);
    });
    flat_diam = best;
  }
  if (kind_ == MetricKind::Conformal)
    return conformal_factor_sup() * flat_diam;
  return flat_diam;
}

TorusManifold TorusManifold::rescaled(double upsilon) const {
  if (upsilon <= 0.0) throw std::invalid_argument("rescale factor must be > 0");
  TorusManifold m = *this;
  m.scale_ *= upsilon;
  return m;
}

double TorusManifold::norm_tangent(const VectorXd& q, const VectorXd& v) const {
  return std::sqrt(v.dot(metric(q) * v));
}

double TorusManifold::norm_covector(const VectorXd& q, const VectorXd& p) const {
  return std::sqrt(p.dot(metric_inverse(q) * p));
}

// ---- MagneticSystem -----------------------------------------------------

MagneticSystem MagneticSystem::zero(int dim) {
  MagneticSystem s;
  s.dim_ = dim;
  s.growth_ = GrowthClass::Bounded;  // theta == 0
  s.zero_ = true;
  s.constant_ = true;
  s.coeffs_ = MatrixXd::Zero(dim, dim);
  s.theta_lin_ = MatrixXd::Zero(dim, dim);
  s.name = "zero";
  return s;
}

MagneticSystem MagneticSystem::constant_form(MatrixXd coeffs, double delta) {
  const int n = static_cast<int>(coeffs.rows());
  if (coeffs.cols() != n) throw std::invalid_argument("sigma coefficients must be square");
  if ((coeffs + coeffs.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("sigma coefficients must be antisymmetric");
  if (coeffs.cwiseAbs().maxCoeff() == 0.0) {
    MagneticSystem s = zero(n);
    s.delta_ = delta;
    return s;
  }
  MagneticSystem s;
  s.dim_ = n;
  s.delta_ = delta;
  s.zero_ = false;
  s.constant_ = true;
  s.coeffs_ = coeffs;
  // theta = sum_{a<b} S_ab q_a dq_b, i.e. theta_b = sum_{a<b} S_ab q_a.
  s.theta_lin_ = MatrixXd::Zero(n, n);
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < b; ++a) s.theta_lin_(b, a) = coeffs(a, b);
  // A nonzero constant-coefficient form on the torus is non-exact, so the
  // primitive grows linearly and no bounded one exists.
  s.growth_ = GrowthClass::Linear;
  s.name = "constant";
  return s;
}

MagneticSystem MagneticSystem::sine_form(int dim, double amplitude,
                                         VectorXi mode, int axis,
                                         double delta) {
  if (axis < 0 || axis >= dim) throw std::invalid_argument("sine form axis out of range");
  if (mode.size() != dim) throw std::invalid_argument("sine form mode has wrong dimension");
  MagneticSystem s;
  s.dim_ = dim;
  s.delta_ = delta;
  s.zero_ = (amplitude == 0.0);
  s.sine_ = true;
  s.amplitude_ = amplitude;
  s.mode_ = std::move(mode);
  s.axis_ = axis;
  s.growth_ = GrowthClass::Bounded;
  s.name = "sine";
  return s;
}

MatrixXd MagneticSystem::sigma(const VectorXd& q) const {
  if (constant_) return coeffs_;
  // sine family: d theta = 2 pi amp cos(2 pi <m,q>) sum_a m_a dq_a ^ dq_axis
  const double c = std::cos(kTwoPi * mode_.cast<double>().dot(wrap_to_cell(q)));
  MatrixXd S = MatrixXd::Zero(dim_, dim_);
  for (int a = 0; a < dim_; ++a) {
    if (a == axis_) continue;
    const double val = kTwoPi * amplitude_ * c * mode_[a];
    S(a, axis_) += val;
    S(axis_, a) -= val;
  }
  return S;
}

MatrixXd MagneticSystem::sigma_deriv(const VectorXd& q, int k) const {
  if (constant_) return MatrixXd::Zero(dim_, dim_);
  const double sn = std::sin(kTwoPi * mode_.cast<double>().dot(wrap_to_cell(q)));
  MatrixXd S = MatrixXd::Zero(dim_, dim_);
  for (int a = 0; a < dim_; ++a) {
    if (a == axis_) continue;
    const double val = -kTwoPi * kTwoPi * amplitude_ * sn * mode_[a] * mode_[k];
    S(a, axis_) += val;
    S(axis_, a) -= val;
  }
  return S;
}

VectorXd MagneticSystem::theta(const VectorXd& q_cover) const {
  if (growth_ == GrowthClass::None)
    throw std::runtime_error("no primitive available");
  if (constant_) return theta_lin_ * q_cover;
  VectorXd th = VectorXd::Zero(dim_);
  th[axis_] = amplitude_ * std::sin(kTwoPi * mode_.cast<double>().dot(q_cover));
  return th;
}

MatrixXd MagneticSystem::theta_jacobian(const VectorXd& q_cover) const {
  if (growth_ == GrowthClass::None)
    throw std::runtime_error("no primitive available");
  if (constant_) return theta_lin_;
  MatrixXd J = MatrixXd::Zero(dim_, dim_);
  const double c = std::cos(kTwoPi * mode_.cast<double>().dot(q_cover));
  for (int k = 0; k < dim_; ++k)
    J(axis_, k) = kTwoPi * amplitude_ * c * mode_[k];
  return J;
}

MatrixXd MagneticSystem::theta_hessian(const VectorXd& q_cover, int i) const {
  if (constant_) return MatrixXd::Zero(dim_, dim_);
  MatrixXd H = MatrixXd::Zero(dim_, dim_);
  if (i != axis_) return H;
  const double sn = std::sin(kTwoPi * mode_.cast<double>().dot(q_cover));
  const VectorXd mv = mode_.cast<double>();
  return (-kTwoPi * kTwoPi * amplitude_ * sn) * (mv * mv.transpose());
}

std::optional<double> MagneticSystem::analytic_growth_constant(
    const TorusManifold& M) const {
  if (M.kind() != MetricKind::Flat) return std::nullopt;
  const MatrixXd G = M.metric(VectorXd::Zero(dim_));
  const MatrixXd Gih = spd_inverse_sqrt(G);
  if (constant_) {
    // theta is linear; the envelope is the metric operator norm of q |-> theta(q).
    Eigen::JacobiSVD<MatrixXd> svd(Gih * theta_lin_ * Gih);
    return svd.singularValues().maxCoeff();
  }
  if (sine_) {
    // |theta|_{g*} <= |amplitude| sqrt((G^{-1})_{axis,axis})
    const MatrixXd Gi = Gih * Gih;
    return std::abs(amplitude_) * std::sqrt(Gi(axis_, axis_));
  }
  return std::nullopt;
}

// ---- operations ---------------------------------------------------------

MatrixXd lorentz_force(const TorusManifold& M, const MagneticSystem& S,
                       const VectorXd& q) {
  // sigma(u,v) = <Yu,v>_g  =>  Y^T G = Sigma  =>  Y = -G^{-1} Sigma.
  const MatrixXd Gi = M.metric_inverse(q);
  return -Gi * S.sigma(q);
}

namespace {

double lorentz_norm_at(const TorusManifold& M, const MagneticSystem& S,
                       const VectorXd& q) {
  const MatrixXd Gih = spd_inverse_sqrt(M.metric(q));
  Eigen::JacobiSVD<MatrixXd> svd(Gih * S.sigma(q) * Gih);
  return svd.singularValues().maxCoeff();
}

}  // namespace

double lorentz_norm_serial(const TorusManifold& M, const MagneticSystem& S,
                           int grid_per_axis) {
  double best = 0.0;
  for_each_cell_point(M.dim(), grid_per_axis, [&](const VectorXd& q) {
    best = std::max(best, lorentz_norm_at(M, S, q));
  });
  return best;
}

double lorentz_norm(const TorusManifold& M, const MagneticSystem& S,
                    int grid_per_axis) {
  const int n = M.dim();
  const long total = static_cast<long>(std::pow(double(grid_per_axis), n));
  apply_thread_budget();
  double best = 0.0;
#ifdef _OPENMP
#pragma omp parallel for reduction(max : best) schedule(static)
#endif
  for (long c = 0; c < total; ++c) {
    long rem = c;
    VectorXd q(n);
    for (int i = 0; i < n; ++i) {
      q[i] = double(rem % grid_per_axis) / double(grid_per_axis);
      rem /= grid_per_axis;
    }
    best = std::max(best, lorentz_norm_at(M, S, q));
  }
  return best;
}

RescaleResult rescale_into_r_sigma(const TorusManifold& M,
                                   const MagneticSystem& S, double margin,
                                   int grid_per_axis) {
  const double norm = lorentz_norm(M, S, grid_per_axis);
  const double upsilon = std::max(1.0, norm * (1.0 + margin));
  return {upsilon, M.rescaled(upsilon)};
}

double primitive_growth_constant(const TorusManifold& M,
                                 const MagneticSystem& S, const VectorXd& z,
                                 double r_max, int grid_per_axis) {
  if (S.growth_class() == GrowthClass::None)
    throw std::runtime_error("no primitive available");
  if (r_max <= 0.0) throw std::invalid_argument("r_max must be > 0");
  if (grid_per_axis % 2 == 0) ++grid_per_axis;  // keep the center and axes on grid

  const int n = M.dim();
  const double factor = M.conformal_factor_sup();
  double best = 0.0;
  VectorXi idx = VectorXi::Zero(n);
  const long total = static_cast<long>(std::pow(double(grid_per_axis), n));
  const int half = grid_per_axis / 2;
  for (long c = 0; c < total; ++c) {
    long rem = c;
    VectorXd q(n);
    for (int i = 0; i < n; ++i) {
      const int k = static_cast<int>(rem % grid_per_axis) - half;
      rem /= grid_per_axis;
      q[i] = z[i] + r_max * double(k) / double(half);
    }
    // upper bound of the cover distance keeps the estimate below the true sup
    const VectorXd d = q - z;
    const double r = factor * std::sqrt(d.dot(M.base_gram() * d));
    if (r > r_max * (1.0 + 1e-12)) continue;
    const double tn = M.norm_covector(q, S.theta(q));
    const double ratio =
        (S.growth_class() == GrowthClass::Bounded) ? tn : tn / (r + 1.0);
    best = std::max(best, ratio);
  }
  return best;
}

double diameter(const TorusManifold& M) { return M.diameter(); }

double tameness_gap(const TorusManifold& M, const MagneticSystem& S,
                    const VectorXd& q, const VectorXd& xi_h,
                    const VectorXd& xi_v) {
  const MatrixXd G = M.metric(q);
  const double gg = xi_h.dot(G * xi_h) + xi_v.dot(G * xi_v);
  // omega_sigma(J_g xi, xi) = G_g(xi,xi) + sigma(-xi_v, xi_h)
  const double mag = -xi_v.dot(S.sigma(q) * xi_h);
  return 0.5 * gg + mag;
}

}  // namespace magflow
