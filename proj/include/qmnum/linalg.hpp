#pragma once

#include <cstdint>
#include <functional>
#include <random>

#include "qmnum/common.hpp"

namespace qmnum::linalg {

// Largest singular value, relative accuracy ~1e-10. Throws invalid_input on
// empty or non-finite input.
double operator_norm(const Mat& m);

// Frobenius-cheap upper bound used as a guard in hot loops.
inline double frob_norm(const Mat& m) { return m.norm(); }

double commutator_norm(const Mat& a, const Mat& b);

// polar(X) = X (X^dag X)^{-1/2}, computed from the SVD as W V^dag. Requires
// the smallest singular value above min_sv (default 1e-12), else throws
// rank_deficient.
Mat polar(const Mat& x, double min_sv = 1e-12);

struct HermitianEig {
    RVec eigenvalues;  // ascending
    Mat eigenvectors;  // unitary, columns
};

// Eigendecomposition of a Hermitian matrix with a reconstruction check
// ||Q L Q^dag - H|| <= 1e-10 ||H||.
HermitianEig hermitian_eig(const Mat& h, double herm_tol = 1e-10);

// Q f(Lambda) Q^dag. Throws invalid_input if H is not Hermitian within tol.
Mat hermitian_function(const std::function<double(double)>& f, const Mat& h,
                       double herm_tol = 1e-10);

struct UnitaryEig {
    Mat q;           // orthonormal eigenbasis (columns)
    Vec eigenvalues; // on the unit circle
};

// Spectral decomposition of a (normal) unitary matrix via complex Schur.
UnitaryEig unitary_eig(const Mat& u, double unitary_tol = 1e-8);

struct JointEigenbasis {
    Mat basis;                              // unitary, columns are joint eigenvectors
    std::vector<std::vector<double>> phases;  // phases[i][v] in [0, 2pi)
    double residual = 0.0;                  // max off-diagonal mass over inputs
};

// Common eigenbasis of pairwise-commuting unitaries, found by diagonalizing a
// seeded random Hermitian combination and recursing on degenerate clusters.
// Throws not_commuting if some pairwise commutator exceeds comm_tol.
JointEigenbasis joint_diagonalize(const std::vector<Mat>& us, std::uint64_t seed = 7,
                                  double comm_tol = 1e-8);

// Haar-distributed unitary via QR of a complex Ginibre matrix with the phase
// of R's diagonal absorbed into Q.
Mat haar_unitary(int k, std::uint64_t seed);
Mat haar_unitary(int k, std::mt19937_64& rng);

Mat random_hermitian(int k, std::mt19937_64& rng);  // GUE-normalized, ||.|| ~ 2 sqrt(k)

// Random complex Gaussian matrix, entries N(0,1) + i N(0,1).
Mat ginibre(int rows, int cols, std::mt19937_64& rng);

bool is_unitary(const Mat& u, double tol = 1e-10);
bool is_projector(const Mat& p, double tol = 1e-10);

}  // namespace qmnum::linalg
