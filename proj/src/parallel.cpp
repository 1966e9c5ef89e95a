#include "magflow/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace magflow {

int thread_budget() {
#ifdef _OPENMP
  int budget = omp_get_max_threads();
  if (const char* env = std::getenv("MAGFLOW_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap >= 1) budget = std::min(budget, cap);
    } catch (...) {
      // unparsable cap: keep the OpenMP default
    }
  }
  return std::max(1, budget);
#else
  return 1;
#endif
}

void apply_thread_budget() {
#ifdef _OPENMP
  omp_set_num_threads(thread_budget());
#endif
}

}  // namespace magflow
