#include "rdmft/parallel.hpp"

#include <atomic>

namespace rdmft::par {

namespace {
std::atomic<int> g_default_workers{0};
}

int default_workers() {
    int w = g_default_workers.load(std::memory_order_relaxed);
    return w > 0 ? w : hardware_workers();
}

void set_default_workers(int workers) {
    g_default_workers.store(workers > 0 ? workers : 0, std::memory_order_relaxed);
}

}  // namespace rdmft::par
