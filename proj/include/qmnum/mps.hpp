#pragma once

#include <cstdint>

#include "qmnum/common.hpp"

namespace qmnum::mps {

// Open chain with a uniform bulk: amplitude(s_1..s_N) = v^dag A(s_1) ... A(s_N) w.
struct MPSChain {
    int n_sites = 0;
    int phys_dim = 0;   // d
    int bond_dim = 0;   // k
    std::vector<Mat> kraus;  // d matrices, k x k
    Vec left, right;         // boundary vectors
    bool manifestly_hermitian = false;

    void check() const;
};

// E(rho) = sum_s A(s)^dag rho A(s), spectrum sorted by modulus (descending).
struct TransferOperator {
    std::vector<Mat> kraus;  // normalized so the top eigenvalue modulus is 1
    Mat matrix_rep;          // k^2 x k^2
    Vec spectrum;
    double lambda = 0.0;     // modulus of the second eigenvalue
    Mat fixed_point;         // Lambda, tr(L^dag L) = 1
    double fixed_point_defect = 0.0;
    double hermiticity_defect = 0.0;  // of matrix_rep
};

struct Interval {
    int first = 0, last = 0;  // 1-based, inclusive
    int length() const { return last - first + 1; }
};

struct CorrelationResult {
    cxd value{0, 0};
    double bound = 0.0;
    Mat lambda_a, lambda_b;
    int separation = 0;
    double lambda = 0.0;
    double folded_lambda = 0.0;  // only set by the two-interval path
};

// Bulk A(s) = U_s / sqrt(d) for s < d/2 with Haar U_s, A(s + d/2) = A(s)^dag;
// boundaries are fixed unit vectors e_1.
MPSChain build_expander_mps(int bond_dim, int phys_dim, int n_sites, std::uint64_t seed);

TransferOperator transfer_spectrum(const MPSChain& chain);

Mat apply_transfer(const std::vector<Mat>& kraus, const Mat& rho);

// <Psi, Psi> by direct sequential contraction (no operators inserted).
double norm_squared(const MPSChain& chain);

// Connected correlator of operators supported on [P,Q] and [R,S], Q < R.
// op dims are phys_dim^interval_length. bound = ||A|| ||B|| lambda^{R-Q}.
CorrelationResult connected_correlation(const MPSChain& chain, const Mat& op_a, Interval ia,
                                        const Mat& op_b, Interval ib);

// Overload reusing a precomputed transfer spectrum (sweep loops).
CorrelationResult connected_correlation(const MPSChain& chain, const TransferOperator& top,
                                        const Mat& op_a, Interval ia, const Mat& op_b,
                                        Interval ib);

// B supported on [R1,S1] u [R2,S2] with S1 < P <= Q < R2; also reports the
// folded-chain transfer gap (spectrum of E tensor conj(E)).
CorrelationResult two_interval_correlation(const MPSChain& chain, const Mat& op_a, Interval ia,
                                           const Mat& op_b1, Interval ib1, const Mat& op_b2,
                                           Interval ib2);

// Gauge transform A(s) -> X^-1 A(s) X with matching boundary change.
MPSChain gauge_transform(const MPSChain& chain, const Mat& x);

// Explicit folded-chain Kraus family {A(s) (x) conj(A(t))} for small k tests.
std::vector<Mat> folded_kraus(const MPSChain& chain);

Mat transfer_matrix_rep(const std::vector<Mat>& kraus);

// Amplitude for one configuration (exponential cost; small-N tests only).
cxd amplitude(const MPSChain& chain, const std::vector<int>& config);

}  // namespace qmnum::mps
