#pragma once

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rdmft::par {

inline int hardware_workers() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// Process-wide default used when a call site passes workers = 0.
// The CLI sets this from --workers.
int default_workers();
void set_default_workers(int workers);

// Serial reference loop. Kept separate so tests and the benchmark can
// compare it against the OpenMP path on identical workloads.
template <class F>
void for_each_index_serial(std::int64_t n, F&& f) {
    for (std::int64_t i = 0; i < n; ++i) f(i);
}

// OpenMP worker-pool loop over [0, n). Iterations must be independent;
// results keyed by index stay deterministic regardless of schedule.
template <class F>
void for_each_index(std::int64_t n, F&& f, int workers = 0) {
    int w = workers > 0 ? workers : default_workers();
#ifdef _OPENMP
    if (w > 1 && n > 1) {
#pragma omp parallel for schedule(dynamic) num_threads(w)
        for (std::int64_t i = 0; i < n; ++i) f(i);
        return;
    }
#endif
    for_each_index_serial(n, f);
}

}  // namespace rdmft::par
