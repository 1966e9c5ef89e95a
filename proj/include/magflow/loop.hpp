#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

#include "magflow/geometry.hpp"

namespace magflow {

// A tau-periodic loop on the torus, stored as N samples of a lift in
// universal-cover coordinates plus an integer winding vector. The closure
// rule is x_N := x_0 + winding; samples are never wrapped.
class DiscreteLoop {
 public:
  DiscreteLoop(MatrixXd samples, VectorXi winding, double tau);

  int dim() const { return static_cast<int>(samples_.rows()); }
  int size() const { return static_cast<int>(samples_.cols()); }
  double tau() const { return tau_; }
  double step() const { return tau_ / size(); }
  const VectorXi& winding() const { return winding_; }
  const MatrixXd& samples() const { return samples_; }
  MatrixXd& samples() { return samples_; }

  // lifted node for any integer index (closure rule applied)
  VectorXd node(long j) const;
  VectorXd segment(int j) const;         // x_{j+1} - x_j
  VectorXd midpoint(int j) const;        // (x_j + x_{j+1})/2
  VectorXd velocity_mid(int j) const;    // segment / h
  VectorXd velocity_centered(int j) const;
  double t_mid(int j) const { return (j + 0.5) * step(); }
  double t_node(int j) const { return j * step(); }

  double max_segment_norm() const;
  // Euclidean diameter of the sample set in cover coordinates
  double extent() const;

  DiscreteLoop refined() const;  // N -> 2N by midpoint insertion
  // Subdivide until every segment is <= guard (cover units).
  DiscreteLoop with_resolution_guard(double guard = 0.5) const;

  DiscreteLoop translated(const VectorXd& shift) const;
  DiscreteLoop time_shifted(int s) const;  // sample rotation, lift preserved

  static DiscreteLoop constant(const VectorXd& q0, int N, double tau,
                               const VectorXi* winding = nullptr);
  static DiscreteLoop straight(const VectorXd& q0, const VectorXi& winding,
                               int N, double tau);
  static DiscreteLoop circle(const VectorXd& center, double radius, int N,
                             double tau, int turns = 1, int plane_a = 0,
                             int plane_b = 1);

  // Truncated Fourier perturbation (modes 0..max_mode, coefficient scale
  // amplitude/(1+m)) around the straight-line representative of the class.
  static DiscreteLoop random_fourier(std::mt19937_64& rng, int dim,
                                     const VectorXi& winding, int N,
                                     double tau, double amplitude,
                                     int max_mode, const VectorXd* base = nullptr);

 private:
  MatrixXd samples_;  // n x N
  VectorXi winding_;
  double tau_;
};

// A loop in T*T^n: base loop plus one momentum covector per node.
struct CotangentLoop {
  DiscreteLoop base;
  MatrixXd momenta;  // n x N

  CotangentLoop(DiscreteLoop b, MatrixXd p);
};

// CSV with header t,x1..xn plus a JSON sidecar carrying tau, N, winding and
// the metric/sigma names.
void write_loop_csv(const std::string& path, const DiscreteLoop& loop);
void write_loop_sidecar(const std::string& path, const DiscreteLoop& loop,
                        const std::string& metric_name,
                        const std::string& sigma_name);
DiscreteLoop read_loop_csv(const std::string& csv_path,
                           const std::string& sidecar_path);

// Polyline file: one vertex per line, "t x1 ... xn".
void write_loop_poly(const std::string& path, const DiscreteLoop& loop);

}  // namespace magflow
