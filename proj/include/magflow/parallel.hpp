#pragma once

namespace magflow {

// Number of worker threads the OpenMP kernels may use. Honors the
// MAGFLOW_THREADS environment variable as an upper cap; without it the
// OpenMP default applies. Always >= 1, and 1 when built without OpenMP.
int thread_budget();

// Pushes the budget into the OpenMP runtime. Called once at kernel entry.
void apply_thread_budget();

}  // namespace magflow
