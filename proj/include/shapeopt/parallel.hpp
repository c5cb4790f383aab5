#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace shapeopt {

// Execution policy for element-loop kernels. Serial is the reference
// implementation; Parallel runs the same kernel under OpenMP. Both write
// per-element results into preassigned slots, so results are bit-identical.
enum class Exec { Serial, Parallel };

inline int hardware_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_num_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

// Runs f(i) for i in [0, n). The parallel branch requires f to be safe to
// call concurrently for distinct i.
template <class F>
void for_each_index(Exec exec, std::size_t n, F&& f) {
  if (exec == Exec::Parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
      f(static_cast<std::size_t>(i));
    return;
#endif
  }
  for (std::size_t i = 0; i < n; ++i) f(i);
}

}  // namespace shapeopt
