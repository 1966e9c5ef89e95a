#pragma once

#include <optional>
#include <string>

#include "magflow/loop.hpp"

namespace magflow {

// A converged critical loop of the twisted action with its certificates.
struct OrbitRecord {
  DiscreteLoop loop;
  double action = 0.0;
  double el_residual = 0.0;  // sup norm of the discrete Euler-Lagrange defect
  int morse_index = 0;
  int nullity = 0;
  bool nondegenerate = false;
  std::optional<double> flow_closure_residual;  // filled by crosscheck_orbit
  bool newton_ok = false;
  int seed = -1;
  std::string note;

  explicit OrbitRecord(DiscreteLoop l) : loop(std::move(l)) {}
};

}  // namespace magflow
