#include "qmnum/parallel.hpp"

#include <omp.h>

#include <atomic>

namespace qmnum::par {

namespace {
std::atomic<int> g_threads{0};
}

void set_threads(int n) { g_threads.store(n < 0 ? 0 : n); }

int threads() {
    int n = g_threads.load();
    return n > 0 ? n : omp_get_max_threads();
}

void for_each_index(std::int64_t n, const std::function<void(std::int64_t)>& body) {
#pragma omp parallel for schedule(dynamic) num_threads(threads())
    for (std::int64_t i = 0; i < n; ++i) body(i);
}

void for_each_index_serial(std::int64_t n, const std::function<void(std::int64_t)>& body) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
}

}  // namespace qmnum::par
