#pragma once

#include <optional>
#include <vector>

#include "magflow/loop.hpp"
#include "magflow/orbit.hpp"
#include "magflow/systems.hpp"

namespace magflow {

// pack (q,p) into the 2n phase vector used by the integrator
VectorXd phase_point(const VectorXd& q, const VectorXd& p);

// X_{H,delta sigma} in cover coordinates:
//   qdot = dH/dp,   pdot = -dH/dq + delta Sigma(q) dH/dp.
// The sign of the magnetic term is pinned by two identities rather than a
// formula: lambda(X) = dH(Z) independently of delta, and Legendre lifts of
// Euler-Lagrange solutions are flow lines.
VectorXd magnetic_vector_field(const TorusManifold& M, const MagneticSystem& S,
                               const HamiltonianSystem& H, double t,
                               const VectorXd& z);

// Jacobian D_z X of the field (2n x 2n), for the variational equations.
MatrixXd flow_jacobian(const TorusManifold& M, const MagneticSystem& S,
                       const HamiltonianSystem& H, double t, const VectorXd& z);

struct Trajectory {
  std::vector<double> times;
  MatrixXd states;  // 2n x (steps+1), cover coordinates
  double energy_drift = 0.0;  // max |H(z)-H(z0)| (autonomous H only)
};

// Fixed-step classical RK4. The step is shrunk uniformly so the span is an
// integer number of steps. Aborts on non-finite state.
Trajectory integrate(const TorusManifold& M, const MagneticSystem& S,
                     const HamiltonianSystem& H, const VectorXd& z0, double t0,
                     double t1, double dt);

struct MonodromyResult {
  MatrixXd dphi;  // linearized period map, 2n x 2n
  Trajectory trajectory;
};

// Integrates the variational equations along the trajectory with the same
// RK4 scheme, jointly with the base point.
MonodromyResult monodromy(const TorusManifold& M, const MagneticSystem& S,
                          const HamiltonianSystem& H, const VectorXd& z0,
                          double tau, double dt);

// Matrix of omega_{delta sigma} in the (q,p) frame at q.
MatrixXd twisted_symplectic_matrix(const MagneticSystem& S, const VectorXd& q);

// Nodal Legendre lift p_j = dL/dv at centered velocities.
CotangentLoop legendre_lift(const TorusManifold& M, const LagrangianSystem& L,
                            const DiscreteLoop& q);

// Lifts the orbit loop, integrates the flow for one period and records the
// phase-space distance back to the start; fills the nondegeneracy verdict
// from the monodromy eigenvalue-1 test with the given margin.
OrbitRecord crosscheck_orbit(const TorusManifold& M, const MagneticSystem& S,
                             const LagrangianSystem& L,
                             const HamiltonianSystem& H, OrbitRecord rec,
                             double dt, double eigenvalue_margin = 1e-4);

}  // namespace magflow
