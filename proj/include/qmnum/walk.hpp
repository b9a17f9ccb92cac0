#pragma once

#include <cstdint>

#include "qmnum/common.hpp"

namespace qmnum::walk {

struct RegularGraph {
    int vertices = 0;
    int degree = 0;
    std::vector<std::vector<int>> adjacency;  // sorted neighbor lists

    RMat transition() const;  // adjacency / degree, dense
};

// Simple connected d_g-regular graph from the pairing model with rejection of
// loops and multi-edges, resampled until connected (bounded retries).
RegularGraph random_regular_graph(int vertices, int degree, std::uint64_t seed);

// Length of the shortest cycle via per-vertex BFS; std::numeric_limits<int>::max()
// for forests.
int girth(const RegularGraph& g);

// Second transition eigenvalue modulus via power iteration with the uniform
// vector deflated.
double second_eigenvalue_modulus(const RegularGraph& g, double tol = 1e-12);

struct TwoTimeObservable {
    std::vector<double> g;  // plus/minus 1 per vertex
    int tau = 0;
};

TwoTimeObservable random_pm_one(const RegularGraph& g, int tau, std::uint64_t seed);

// Sum_u P^tau(v,u) g(u) P^tau(u,w) / P^{2 tau}(v,w); exact matrix powers.
// Throws invalid_input when the pair is unreachable at 2 tau.
double conditional_mean(const RegularGraph& g, const std::vector<double>& gfun, int v, int w,
                        int tau);

struct TwoTimeResult {
    double correlation = 0.0;
    double mean_f = 0.0;
    double mean_g = 0.0;
    std::int64_t tie_count = 0;  // pairs whose conditional mean was exactly 0
};

// Exact two-time correlation with f = sign of the conditional mean (0 -> +1,
// counted). x(-tau) uniform. The baseline overload takes an explicit f table.
TwoTimeResult two_time_correlation(const RegularGraph& g, const TwoTimeObservable& obs,
                                   bool parallel = true);
TwoTimeResult two_time_correlation_serial(const RegularGraph& g, const TwoTimeObservable& obs);

double two_time_correlation_with_f(const RegularGraph& g, const std::vector<double>& gfun,
                                   const RMat& f, int tau);

// Least-squares slope of log(corr) against log(tau).
double fit_loglog_exponent(const std::vector<double>& taus, const std::vector<double>& corrs);

}  // namespace qmnum::walk
