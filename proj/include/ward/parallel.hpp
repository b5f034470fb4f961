#pragma once

// OpenMP shim. Parallel kernels write into preallocated slots and reduce
// serially in a fixed order, so results are identical with and without
// OpenMP; the serial variants exist as reference implementations for tests
// and benchmarks.

#if defined(WARD_HAVE_OPENMP)
#include <omp.h>
#define WARD_STRINGIZE_(x) #x
#define WARD_PRAGMA_OMP(directive) _Pragma(WARD_STRINGIZE_(omp directive))
#else
#define WARD_PRAGMA_OMP(directive)
#endif

namespace ward {

inline int max_threads() {
#if defined(WARD_HAVE_OPENMP)
    return omp_get_max_threads();
#else
    return 1;
#endif
}

} // namespace ward
