#pragma once

#include <optional>
#include <vector>

#include "magflow/loop_ops.hpp"

namespace magflow {

// Constants of the quadratic isoperimetric inequality
//   |A_sigma(q)| <= C0 (int |qdot| dt)^2 + C1
// with C0 = (2+d) Theta and
// C1 = Theta[(d+1)d + (d+1) + (d+l_a+1)d + (l_a+1)l_a].
struct IsoperimetricConstants {
  double C0 = 0.0;
  double C1 = 0.0;
  double d = 0.0;
  double Theta = 0.0;
  double ell_alpha = 0.0;
  double Theta_sampled = 0.0;  // grid estimate, kept alongside the envelope
};

// Theta comes from the analytic envelope when the field provides one,
// otherwise from the sampled growth constant at the reference base point.
// The reference loop defaults to the straight-line lift of the class from
// the origin (constant loop for alpha = 0).
IsoperimetricConstants isoperimetric_constants(
    const TorusManifold& M, const MagneticSystem& S, const VectorXi& alpha,
    const DiscreteLoop* reference = nullptr, double growth_r_max = 8.0,
    int growth_grid = 33);

// Growth-condition constants of the kinetic + potential family. Norm
// conventions: the eta's are exact in metric norms (eta1 = 1/2, eta2 = 1 for
// every kinetic Hamiltonian); ell1/ell0/D follow the coordinate convention
// ell1 = min eig G, ell0 = ell1/2, D = max(0, max V).
struct GrowthConstants {
  double eta1 = 0.5;
  double k1 = 0.0;
  double eta2 = 1.0;
  double k2 = 0.0;
  double h_sigma_g = 0.0;
  double ell1 = 0.0;
  double ell2 = 0.0;
  double ell0 = 0.0;
  double D = 0.0;
};

GrowthConstants growth_constants_kinetic(const TorusManifold& M,
                                         const MagneticSystem& S,
                                         const Potential& V, double tau,
                                         int grid_per_axis = 8,
                                         double p_max = 10.0,
                                         int p_samples = 9);

// eta1 / (2 C0 eta2); +infinity when sigma has a bounded primitive or C0=0.
double delta0(const GrowthConstants& g, const IsoperimetricConstants& iso,
              GrowthClass sigma_class);

// ell0 / C0; +infinity when C0 = 0.
double delta_lagrangian(double ell0, double C0);

// Grid verification of (H1)/(H2)/(L1)/(L2) against the stored constants.
struct GrowthCheckReport {
  bool h1_ok = false, h2_ok = false, l1_ok = false, l2_ok = false;
  double h1_margin = 0.0;  // min of lhs - rhs over the grid (>= 0 when ok)
  double x_bound_ok = false;
  bool all_ok() const { return h1_ok && h2_ok && l1_ok && l2_ok && x_bound_ok; }
};

GrowthCheckReport verify_growth_conditions(const TorusManifold& M,
                                           const MagneticSystem& S,
                                           const Potential& V, double tau,
                                           const GrowthConstants& g,
                                           int grid_per_axis = 8,
                                           double p_max = 10.0,
                                           int p_samples = 9);

// Batch verification of the isoperimetric inequality over a loop population.
struct IsoperimetricCheck {
  long violations = 0;
  double max_ratio = 0.0;  // max |A_sigma| / (C0 l^2 + C1)
};

IsoperimetricCheck verify_isoperimetric(const TorusManifold& M,
                                        const MagneticSystem& S,
                                        const IsoperimetricConstants& iso,
                                        const std::vector<DiscreteLoop>& loops);
IsoperimetricCheck verify_isoperimetric_serial(
    const TorusManifold& M, const MagneticSystem& S,
    const IsoperimetricConstants& iso, const std::vector<DiscreteLoop>& loops);

}  // namespace magflow
