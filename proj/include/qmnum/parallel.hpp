#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace qmnum::par {

// Global worker count for the OpenMP kernels. 0 means "use the OpenMP
// default". Every parallel kernel in this library produces output that is
// bitwise independent of the worker count: partial results are stored per
// index and reduced in fixed index order.
void set_threads(int n);
int threads();

// Parallel loop over [0, n). The body must only write to per-index state.
void for_each_index(std::int64_t n, const std::function<void(std::int64_t)>& body);

// Serial reference loop, kept so tests can compare kernel outputs.
void for_each_index_serial(std::int64_t n, const std::function<void(std::int64_t)>& body);

// Ordered reduction: applies body to every index, collecting results into a
// vector indexed by loop index, then folds them serially in index order.
template <typename T, typename Map, typename Fold>
T map_reduce_ordered(std::int64_t n, const Map& map, T init, const Fold& fold) {
    std::vector<T> partial(static_cast<std::size_t>(n));
    for_each_index(n, [&](std::int64_t i) { partial[static_cast<std::size_t>(i)] = map(i); });
    T acc = init;
    for (std::int64_t i = 0; i < n; ++i) acc = fold(acc, partial[static_cast<std::size_t>(i)]);
    return acc;
}

}  // namespace qmnum::par
