#include "qmnum/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace qmnum::linalg {

namespace {

void check_finite(const Mat& m, const char* who) {
    if (m.rows() == 0 || m.cols() == 0) throw invalid_input(std::string(who) + ": empty matrix");
    if (!m.allFinite()) throw invalid_input(std::string(who) + ": non-finite entries");
}

}  // namespace

double operator_norm(const Mat& m) {
    check_finite(m, "operator_norm");
    if (m.rows() == 1 && m.cols() == 1) return std::abs(m(0, 0));
    if (std::min(m.rows(), m.cols()) <= 32) {
        Eigen::JacobiSVD<Mat> svd(m);
        return svd.singularValues()(0);
    }
    // Top singular value through the smaller Gram matrix; accurate for the
    // largest eigenvalue and much faster than a full SVD at this size.
    Mat gram = m.rows() <= m.cols() ? Mat(m * m.adjoint()) : Mat(m.adjoint() * m);
    Eigen::SelfAdjointEigenSolver<Mat> es(gram, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues()(gram.rows() - 1)));
}

double commutator_norm(const Mat& a, const Mat& b) { return operator_norm(a * b - b * a); }

Mat polar(const Mat& x, double min_sv) {
    check_finite(x, "polar");
    require(x.rows() == x.cols(), "polar: square matrix required");
    Eigen::JacobiSVD<Mat> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.singularValues()(x.rows() - 1) <= min_sv)
        throw rank_deficient("polar: smallest singular value below threshold");
    return svd.matrixU() * svd.matrixV().adjoint();
}

HermitianEig hermitian_eig(const Mat& h, double herm_tol) {
    check_finite(h, "hermitian_eig");
    require(h.rows() == h.cols(), "hermitian_eig: square matrix required");
    double scale = std::max(1.0, frob_norm(h));
    if (frob_norm(h - h.adjoint()) > herm_tol * scale)
        throw invalid_input("hermitian_eig: matrix not Hermitian within tolerance");
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (h + h.adjoint()));
    if (es.info() != Eigen::Success) throw invariant_violation("hermitian_eig: solver failed");
    HermitianEig out{es.eigenvalues(), es.eigenvectors()};
    Mat rec = out.eigenvectors * out.eigenvalues.asDiagonal().toDenseMatrix().cast<cxd>() *
              out.eigenvectors.adjoint();
    if (frob_norm(rec - h) > 1e-10 * scale * std::sqrt(double(h.rows())) + 1e-12)
        throw invariant_violation("hermitian_eig: reconstruction check failed");
    return out;
}

Mat hermitian_function(const std::function<double(double)>& f, const Mat& h, double herm_tol) {
    HermitianEig eig = hermitian_eig(h, herm_tol);
    RVec fv(eig.eigenvalues.size());
    for (Eigen::Index i = 0; i < fv.size(); ++i) fv(i) = f(eig.eigenvalues(i));
    return eig.eigenvectors * fv.asDiagonal().toDenseMatrix().cast<cxd>() *
           eig.eigenvectors.adjoint();
}

UnitaryEig unitary_eig(const Mat& u, double unitary_tol) {
    check_finite(u, "unitary_eig");
    require(u.rows() == u.cols(), "unitary_eig: square matrix required");
    Eigen::Index n = u.rows();
    if (frob_norm(u * u.adjoint() - Mat::Identity(n, n)) > unitary_tol * std::sqrt(double(n)))
        throw invalid_input("unitary_eig: matrix not unitary within tolerance");
    Eigen::ComplexSchur<Mat> schur(u);
    if (schur.info() != Eigen::Success) throw invariant_violation("unitary_eig: Schur failed");
    // For a normal matrix the Schur form is diagonal up to roundoff.
    UnitaryEig out;
    out.q = schur.matrixU();
    out.eigenvalues = schur.matrixT().diagonal();
    for (Eigen::Index i = 0; i < n; ++i) out.eigenvalues(i) /= std::abs(out.eigenvalues(i));
    return out;
}

namespace {

// Recursive refinement: diagonalize a random Hermitian combination restricted
// to a cluster; split by eigenvalue gaps; recurse until every U_i is scalar on
// the cluster.
void refine_cluster(const std::vector<Mat>& us, Mat& basis, Eigen::Index lo, Eigen::Index hi,
                    std::mt19937_64& rng, int depth) {
    Eigen::Index n = hi - lo;
    if (n <= 1 || depth > 12) return;
    const Eigen::Index dim = basis.rows();
    Mat block = basis.middleCols(lo, n);

    bool all_scalar = true;
    for (const Mat& u : us) {
        Mat r = block.adjoint() * (u * block);
        cxd mean = r.trace() / double(n);
        if ((r - mean * Mat::Identity(n, n)).norm() > 1e-11 * double(n)) {
            all_scalar = false;
            break;
        }
    }
    if (all_scalar) return;

    std::normal_distribution<double> g;
    Mat h = Mat::Zero(n, n);
    for (const Mat& u : us) {
        Mat r = block.adjoint() * (u * block);
        double cx = g(rng), cy = g(rng);
        h += cx * 0.5 * (r + r.adjoint());
        h += cy * (r - r.adjoint()) * cxd(0, -0.5);
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    basis.middleCols(lo, n) = block * es.eigenvectors();

    double span = std::max(1e-12, es.eigenvalues()(n - 1) - es.eigenvalues()(0));
    double gap_tol = std::max(1e-9, 1e-7 * span);
    Eigen::Index start = 0;
    for (Eigen::Index i = 1; i <= n; ++i) {
        if (i == n || es.eigenvalues()(i) - es.eigenvalues()(i - 1) > gap_tol) {
            refine_cluster(us, basis, lo + start, lo + i, rng, depth + 1);
            start = i;
        }
    }
    (void)dim;
}

}  // namespace

JointEigenbasis joint_diagonalize(const std::vector<Mat>& us, std::uint64_t seed,
                                  double comm_tol) {
    require(!us.empty(), "joint_diagonalize: empty input");
    const Eigen::Index n = us.front().rows();
    for (const Mat& u : us) {
        check_finite(u, "joint_diagonalize");
        require(u.rows() == n && u.cols() == n, "joint_diagonalize: dimension mismatch");
    }
    for (std::size_t i = 0; i < us.size(); ++i)
        for (std::size_t j = i + 1; j < us.size(); ++j)
            if (commutator_norm(us[i], us[j]) > comm_tol)
                throw not_commuting("joint_diagonalize: commutator above threshold");

    std::mt19937_64 rng(seed);
    Mat basis = Mat::Identity(n, n);
    refine_cluster(us, basis, 0, n, rng, 0);

    JointEigenbasis out;
    out.basis = basis;
    out.phases.assign(us.size(), std::vector<double>(static_cast<std::size_t>(n)));
    double res = 0.0;
    for (std::size_t i = 0; i < us.size(); ++i) {
        Mat r = basis.adjoint() * us[i] * basis;
        Mat offdiag = r;
        offdiag.diagonal().setZero();
        res = std::max(res, offdiag.norm());
        for (Eigen::Index v = 0; v < n; ++v) {
            double ph = std::arg(r(v, v));
            if (ph < 0) ph += 2 * kPi;
            out.phases[i][static_cast<std::size_t>(v)] = ph;
        }
    }
    out.residual = res;

    // Deterministic column order: sort by phase tuple.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        for (std::size_t i = 0; i < us.size(); ++i) {
            double pa = out.phases[i][static_cast<std::size_t>(a)];
            double pb = out.phases[i][static_cast<std::size_t>(b)];
            if (std::abs(pa - pb) > 1e-9) return pa < pb;
        }
        return false;
    });
    Mat sorted(n, n);
    std::vector<std::vector<double>> sorted_phases(us.size(),
                                                   std::vector<double>(static_cast<std::size_t>(n)));
    for (Eigen::Index c = 0; c < n; ++c) {
        sorted.col(c) = out.basis.col(order[static_cast<std::size_t>(c)]);
        for (std::size_t i = 0; i < us.size(); ++i)
            sorted_phases[i][static_cast<std::size_t>(c)] =
                out.phases[i][static_cast<std::size_t>(order[static_cast<std::size_t>(c)])];
    }
    out.basis = std::move(sorted);
    out.phases = std::move(sorted_phases);
    return out;
}

Mat ginibre(int rows, int cols, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Mat z(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) z(i, j) = cxd(g(rng), g(rng));
    return z;
}

Mat haar_unitary(int k, std::mt19937_64& rng) {
    require(k >= 1, "haar_unitary: k >= 1 required");
    Mat z = ginibre(k, k, rng) / std::sqrt(2.0);
    Eigen::HouseholderQR<Mat> qr(z);
    Mat q = qr.householderQ();
    Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < k; ++j) {
        cxd d = r(j, j);
        q.col(j) *= (d == cxd(0, 0)) ? cxd(1, 0) : d / std::abs(d);
    }
    return q;
}

Mat haar_unitary(int k, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return haar_unitary(k, rng);
}

Mat random_hermitian(int k, std::mt19937_64& rng) {
    Mat a = ginibre(k, k, rng);
    return (a + a.adjoint()) / (2.0 * std::sqrt(double(k)));
}

bool is_unitary(const Mat& u, double tol) {
    if (u.rows() != u.cols()) return false;
    return operator_norm(u * u.adjoint() - Mat::Identity(u.rows(), u.rows())) <= tol;
}

bool is_projector(const Mat& p, double tol) {
    if (p.rows() != p.cols()) return false;
    if (operator_norm(p - p.adjoint()) > tol) return false;
    return operator_norm(p * p - p) <= tol;
}

}  // namespace qmnum::linalg
