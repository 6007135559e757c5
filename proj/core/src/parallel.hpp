#pragma once

// Parallel loops over independent particles or time slices. Each iteration
// writes only its own outputs, so results do not depend on the thread count.
#define MFG_PRAGMA(x) _Pragma(#x)
#if defined(MFG_HAVE_OPENMP)
#define MFG_PARALLEL_FOR(threads) MFG_PRAGMA(omp parallel for num_threads(threads) schedule(static))
#else
#define MFG_PARALLEL_FOR(threads)
#endif
