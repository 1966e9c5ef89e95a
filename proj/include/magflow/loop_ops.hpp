#pragma once

#include <vector>

#include "magflow/loop.hpp"
#include "magflow/systems.hpp"

namespace magflow {

// True iff the flux of sigma through every lattice sweep torus of the class
// vanishes. For constant-coefficient sigma this reduces to Sigma.alpha = 0.
bool atoroidal_test(const TorusManifold& M, const MagneticSystem& S,
                    const VectorXi& alpha, int resolution = 32);

// Line integral of the primitive along the lift; the gauge constant of the
// reference loop is normalized to 0. Checks atoroidality of the winding.
double action_sigma(const TorusManifold& M, const MagneticSystem& S,
                    const DiscreteLoop& q);

// Midpoint quadrature of L along the loop.
double action_lagrangian(const TorusManifold& M, const LagrangianSystem& L,
                         const DiscreteLoop& q);

// S_L + delta * A_sigma
double action_total(const TorusManifold& M, const MagneticSystem& S,
                    const LagrangianSystem& L, const DiscreteLoop& q);

// A_{H,delta sigma}: quadrature of p.qdot - H plus delta * A_sigma(base).
double action_hamiltonian(const TorusManifold& M, const MagneticSystem& S,
                          const HamiltonianSystem& H, const CotangentLoop& x);

enum class InnerProduct { L2, W12 };

// Exact partial derivatives of the discrete total action w.r.t. the node
// coordinates (n x N).
MatrixXd loop_differential(const TorusManifold& M, const MagneticSystem& S,
                           const LagrangianSystem& L, const DiscreteLoop& q);

// Riesz representative of the differential. L2 yields the discrete
// Euler-Lagrange defect field; W12 applies the (1 - Laplacian)^{-1}
// preconditioner and serves as the descent pseudo-gradient.
MatrixXd loop_gradient(const TorusManifold& M, const MagneticSystem& S,
                       const LagrangianSystem& L, const DiscreteLoop& q,
                       InnerProduct inner = InnerProduct::W12);

// Coordinate Hessian of the discrete total action (nN x nN, symmetric).
MatrixXd loop_hessian_form(const TorusManifold& M, const MagneticSystem& S,
                           const LagrangianSystem& L, const DiscreteLoop& q);

// Second variation as the L2 operator M^{-1/2} Hess M^{-1/2}, with the block
// diagonal mass M_j = h G(x_j). Its spectrum carries the Morse data.
MatrixXd loop_hessian(const TorusManifold& M, const MagneticSystem& S,
                      const LagrangianSystem& L, const DiscreteLoop& q);

// diag-block square root of the L2 mass matrix and its inverse
void loop_mass_sqrt(const TorusManifold& M, const DiscreteLoop& q,
                    MatrixXd& sqrt_out, MatrixXd& inv_sqrt_out);

double loop_length(const TorusManifold& M, const DiscreteLoop& q);
double loop_speed_l2sq(const TorusManifold& M, const DiscreteLoop& q);

// apply the W12 preconditioner (I - Laplacian_h)^{-1} row-wise
MatrixXd w12_precondition(const MatrixXd& rhs, double h);

// pair a variation with the differential: dS[xi]
double pair_differential(const MatrixXd& differential, const MatrixXd& xi);

// ---- batch kernels (OpenMP) with serial references ----------------------

std::vector<double> batch_action_sigma(const TorusManifold& M,
                                       const MagneticSystem& S,
                                       const std::vector<DiscreteLoop>& loops);
std::vector<double> batch_action_sigma_serial(
    const TorusManifold& M, const MagneticSystem& S,
    const std::vector<DiscreteLoop>& loops);

std::vector<double> batch_action_total(const TorusManifold& M,
                                       const MagneticSystem& S,
                                       const LagrangianSystem& L,
                                       const std::vector<DiscreteLoop>& loops);
std::vector<double> batch_action_total_serial(
    const TorusManifold& M, const MagneticSystem& S, const LagrangianSystem& L,
    const std::vector<DiscreteLoop>& loops);

namespace detail {
// unchecked variants used by inner solver loops (atoroidality verified once)
double action_sigma_unchecked(const MagneticSystem& S, const DiscreteLoop& q);
double action_total_unchecked(const MagneticSystem& S,
                              const LagrangianSystem& L, const DiscreteLoop& q);
}  // namespace detail

}  // namespace magflow
