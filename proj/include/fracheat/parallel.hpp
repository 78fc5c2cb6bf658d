#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fracheat {

// Global worker cap, set by the CLI --threads flag. 0 means "OpenMP default".
void set_max_threads(int n);
int max_threads();

// Data-parallel loop over [0, n). The contract that keeps runs reproducible:
// the body writes only to slot i of pre-sized output arrays, and any
// reduction over those slots is done serially by the caller afterwards.
template <class F>
void parallel_for(std::size_t n, F&& body, bool parallel = true) {
#ifdef _OPENMP
  if (parallel && max_threads() != 1 && n > 1) {
    const int nt = max_threads() > 0 ? max_threads() : omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
    for (long i = 0; i < static_cast<long>(n); ++i)
      body(static_cast<std::size_t>(i));
    return;
  }
#endif
  for (std::size_t i = 0; i < n; ++i) body(i);
}

}  // namespace fracheat
