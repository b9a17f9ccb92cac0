#pragma once

#include <cstdint>
#include <functional>

#include "qmnum/common.hpp"

namespace qmnum::channels {

// Qubit erasure channel: output basis {up, down, E}.
struct ErasureChannel {
    double p = 1.0;  // transmission probability
};

Mat erasure_apply(const ErasureChannel& ch, const Mat& rho);

// Boolean function on n-bit strings, table indexed by the bitmask.
struct BooleanFn {
    int n = 0;
    std::vector<char> table;  // size 2^n

    bool value(std::uint32_t mask) const { return table[mask] != 0; }
};

struct MonotoneBooleanFn : BooleanFn {};

bool is_monotone(const BooleanFn& f);

// Minimal monotone majorant: F~(s) = 1 iff F(t) = 1 for some t <= s.
MonotoneBooleanFn monotonize(const BooleanFn& f);

// Reliability polynomial f(p) = sum_s F(s) p^{|s|} (1-p)^{n-|s|}: weight
// counts (Bernstein numerators), plus expanded monomial coefficients.
struct ReliabilityPoly {
    int n = 0;
    std::vector<double> weight_count;  // b_k = #accepted strings of weight k
    std::vector<double> monomial;      // f(p) = sum_j monomial[j] p^j

    double value(double p) const;
    double derivative(double p) const;
};

ReliabilityPoly reliability_poly(const MonotoneBooleanFn& f);

// All monotone Boolean functions on n <= 5 bits (Dedekind-number many),
// streamed in a deterministic order.
void enumerate_monotone(int n, const std::function<void(const MonotoneBooleanFn&)>& sink);
std::int64_t count_monotone(int n);

struct MatthewReport {
    bool constant = false;
    double min_ratio = 0.0;         // min over grid of p(1-p) g'(p)/g(p); 1 is equality
    bool passed = false;
    bool corollary_passed = false;  // f(p) > p and p <= 1/2 imply f(p)+f(1-p) > 1
};

// Checks p(1-p) g'(p)/g(p) >= 1 - tol on the grid, g = f/(1-f), evaluated as
// p(1-p) f' >= (1 - tol) f (1-f).
MatthewReport matthew_check(const MonotoneBooleanFn& f, const std::vector<double>& p_grid,
                            double tol = 1e-9);

struct ComplementPairReport {
    bool has_complementary_pair = false;
    double max_sum_minus_one = 0.0;  // max over grid of f(p)+f(1-p)-1
    bool sum_bound_passed = false;   // meaningful when no complementary pair
};

ComplementPairReport complement_pair_check(const MonotoneBooleanFn& f,
                                           const std::vector<double>& p_grid);

std::vector<double> default_p_grid();  // 0.02, 0.04, ..., 0.98

// Transmitted decode channel: Kraus operators from the qubit input to the
// 3-dimensional output span{up, down, E} (the encoder/erasure/decoder
// composite for one erasure pattern).
struct QubitDecodeChannel {
    std::vector<Mat> kraus;  // each 3 x 2

    void check() const;  // sum K^dag K = I within 1e-10
};

QubitDecodeChannel identity_decode();
QubitDecodeChannel depolarize_to_mixed();
QubitDecodeChannel random_decode(std::uint64_t seed, int env_dim = 3);

struct MistakeRates {
    double average = 0.0;  // exact Haar average via the symmetric-subspace formula
    double maximum = 0.0;  // Bloch-sphere grid with local refinement (lower bound)
};

MistakeRates mistake_rates(const QubitDecodeChannel& dec, int grid = 100, int refinements = 3);

// Deterministic product-rule quadrature over the Bloch sphere (test oracle
// for the closed-form average); n_theta * n_phi midpoint nodes.
double average_mistake_quadrature(const QubitDecodeChannel& dec, int n_theta = 320,
                                  int n_phi = 320);

}  // namespace qmnum::channels
