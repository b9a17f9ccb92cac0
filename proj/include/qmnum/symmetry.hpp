#pragma once

#include <cstdint>

#include "qmnum/common.hpp"
#include "qmnum/povm.hpp"
#include "qmnum/soft_torus.hpp"

namespace qmnum::symmetry {

enum class SymClass { None, Symmetric, SelfDual };

// Standard antisymmetric form [[0, I], [-I, 0]] on an even dimension.
Mat standard_z(Eigen::Index dim);

// ||M - M^T|| for the symmetric class, ||M + Z M^T Z|| for the self-dual
// class; zero means membership. Throws on an odd dimension with SelfDual.
double symmetry_check(const Mat& m, SymClass cls);

// Rank-structured decomposition of a projector: real rank-1 vectors in the
// symmetric class, (v, Z conj(v)) rank-2 pairs in the self-dual class;
// factors reconstruct P.
struct RankFactor {
    Vec v;
    Vec w;  // empty in the symmetric class
};
std::vector<RankFactor> structured_rank_decomposition(const Mat& p, SymClass cls,
                                                      double tol = 1e-10);

// Symmetry-preserving Naimark dilation of a POVM whose elements all carry the
// class. Returns the completed unitary M (first D rows are the stacked
// decomposition vectors), the ambient projectors, and the ambient Z.
struct SymmetricDilation {
    Mat m;                         // D' x D' unitary
    Mat pi;                        // projector onto the first D coordinates
    std::vector<Mat> q;            // per-outcome projectors, sum = I
    Mat z_ambient;                 // empty in the symmetric class
    std::vector<Eigen::Index> outcome_of_column;
};
SymmetricDilation symmetric_naimark_dilate(const std::vector<Mat>& elements, SymClass cls,
                                           double tol = 1e-10);

// Class-constrained random instances for pipeline tests: d nearly commuting
// unitaries of the given class, commutator scale set by eta.
torus::SoftTorus random_class_torus(int d, Eigen::Index dim, SymClass cls, double eta,
                                    std::uint64_t seed);

// Class defect of a soft torus / local projector: max over members.
double class_defect(const torus::SoftTorus& t, SymClass cls);
double class_defect(const torus::LocalProjector& p, SymClass cls);

// Structural class defect of a compressed dilation: factors real (symmetric)
// or A^T = -Z A^dag Z (self-dual), maximized over outcomes and the K_i.
double class_defect(const povm::Dilation& dil, SymClass cls);

}  // namespace qmnum::symmetry
