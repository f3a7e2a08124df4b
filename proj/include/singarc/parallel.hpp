#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace singarc {

// Intervals below this count are not worth forking threads for; the loop
// body of a collocation kernel is a handful of small matrix products.
inline constexpr std::ptrdiff_t kParallelGrain = 256;

/// Runs fn(i) for i in [0, count). Uses OpenMP when compiled in and the
/// trip count is large enough to amortize the fork. Bodies must write to
/// disjoint slots only; reductions are done by the caller in index order
/// so results do not depend on the schedule.
template <typename F>
void parallel_for(std::ptrdiff_t count, F&& fn) {
#ifdef _OPENMP
  if (count >= kParallelGrain) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) fn(i);
    return;
  }
#endif
  for (std::ptrdiff_t i = 0; i < count; ++i) fn(i);
}

inline int parallel_thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace singarc
