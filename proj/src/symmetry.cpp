#include "qmnum/symmetry.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "qmnum/linalg.hpp"

namespace qmnum::symmetry {

using linalg::operator_norm;

Mat standard_z(Eigen::Index dim) {
    require(dim >= 2 && dim % 2 == 0, "standard_z: even dimension required");
    Mat z = Mat::Zero(dim, dim);
    const Eigen::Index h = dim / 2;
    z.topRightCorner(h, h) = Mat::Identity(h, h);
    z.bottomLeftCorner(h, h) = -Mat::Identity(h, h);
    return z;
}

double symmetry_check(const Mat& m, SymClass cls) {
    require(m.rows() == m.cols(), "symmetry_check: square matrix required");
    switch (cls) {
        case SymClass::None:
            return 0.0;
        case SymClass::Symmetric:
            return operator_norm(m - m.transpose());
        case SymClass::SelfDual: {
            if (m.rows() % 2 != 0)
                throw invalid_input("symmetry_check: self-dual needs even dimension");
            Mat z = standard_z(m.rows());
            return operator_norm(m + z * m.transpose() * z);
        }
    }
    return 0.0;
}

namespace {

// Paired rank decomposition with an explicit Z (used both for the standard
// ambient form and for the column-space form in the dilation completion).
std::vector<RankFactor> decompose_with_z(const Mat& p, SymClass cls, const Mat& z, double tol) {
    require(linalg::is_projector(p, 10 * tol), "structured_rank_decomposition: not a projector");
    std::vector<RankFactor> out;
    const Eigen::Index n = p.rows();

    if (cls == SymClass::Symmetric) {
        if (operator_norm(p - p.transpose()) > tol)
            throw invalid_input("structured_rank_decomposition: class defect too large");
        // Hermitian + complex-symmetric means real symmetric.
        RMat preal = p.real();
        Eigen::SelfAdjointEigenSolver<RMat> es(preal);
        for (Eigen::Index i = 0; i < n; ++i)
            if (es.eigenvalues()(i) > 0.5) {
                RankFactor f;
                f.v = es.eigenvectors().col(i).cast<cxd>();
                out.push_back(std::move(f));
            }
        return out;
    }

    if (operator_norm(p + z * p.transpose() * z) > tol)
        throw invalid_input("structured_rank_decomposition: class defect too large");
    Mat rem = p;
    while (true) {
        Eigen::SelfAdjointEigenSolver<Mat> es(rem);
        Eigen::Index top = rem.rows() - 1;
        if (es.eigenvalues()(top) < 0.5) break;
        Vec v = es.eigenvectors().col(top);
        Vec w = z * v.conjugate();
        // w lies in the same eigenspace and is orthogonal to v; clean up the
        // numerics and renormalize.
        w -= v * (v.adjoint() * w);
        double nw = w.norm();
        if (nw < 1e-8)
            throw invalid_input("structured_rank_decomposition: self-dual pairing failed");
        w /= nw;
        out.push_back(RankFactor{v, w});
        rem -= v * v.adjoint() + w * w.adjoint();
    }
    return out;
}

}  // namespace

std::vector<RankFactor> structured_rank_decomposition(const Mat& p, SymClass cls, double tol) {
    require(cls != SymClass::None, "structured_rank_decomposition: class required");
    Mat z;
    if (cls == SymClass::SelfDual) {
        require(p.rows() % 2 == 0, "structured_rank_decomposition: even dimension required");
        z = standard_z(p.rows());
    }
    return decompose_with_z(p, cls, z, tol);
}

namespace {

Mat j_blocks(Eigen::Index dim) {
    require(dim % 2 == 0, "j_blocks: even dimension");
    Mat z = Mat::Zero(dim, dim);
    for (Eigen::Index k = 0; k + 1 < dim; k += 2) {
        z(k, k + 1) = 1.0;
        z(k + 1, k) = -1.0;
    }
    return z;
}

}  // namespace

SymmetricDilation symmetric_naimark_dilate(const std::vector<Mat>& elements, SymClass cls,
                                           double tol) {
    require(!elements.empty(), "symmetric_naimark_dilate: empty POVM");
    require(cls != SymClass::None, "symmetric_naimark_dilate: class required");
    const Eigen::Index dim = elements.front().rows();
    Mat total = Mat::Zero(dim, dim);
    for (const Mat& e : elements) {
        require(e.rows() == dim && e.cols() == dim, "symmetric_naimark_dilate: shape mismatch");
        if (symmetry_check(e, cls) > tol)
            throw invalid_input("symmetric_naimark_dilate: element class defect too large");
        total += e;
    }
    if (operator_norm(total - Mat::Identity(dim, dim)) > 1e-10)
        throw invalid_input("symmetric_naimark_dilate: POVM not complete");

    // Class-structured vectors w with E_i = sum w w^dag: spectral clusters of
    // each element, then the paired rank decomposition scaled by sqrt(lambda).
    std::vector<Vec> columns;
    std::vector<Eigen::Index> outcome_of_column;
    for (std::size_t i = 0; i < elements.size(); ++i) {
        linalg::HermitianEig eig = linalg::hermitian_eig(elements[i]);
        Eigen::Index v = 0;
        while (v < dim) {
            double lam = eig.eigenvalues(v);
            if (lam < 1e-12) {
                ++v;
                continue;
            }
            Eigen::Index hi = v;
            while (hi + 1 < dim && eig.eigenvalues(hi + 1) - eig.eigenvalues(hi) < 1e-8) ++hi;
            Mat proj = Mat::Zero(dim, dim);
            for (Eigen::Index k = v; k <= hi; ++k)
                proj += eig.eigenvectors.col(k) * eig.eigenvectors.col(k).adjoint();
            double lam_mean = 0.0;
            for (Eigen::Index k = v; k <= hi; ++k) lam_mean += eig.eigenvalues(k);
            lam_mean /= double(hi - v + 1);
            auto factors = structured_rank_decomposition(proj, cls, 100 * tol);
            for (const auto& f : factors) {
                columns.push_back(std::sqrt(lam_mean) * f.v);
                outcome_of_column.push_back(static_cast<Eigen::Index>(i));
                if (cls == SymClass::SelfDual) {
                    columns.push_back(std::sqrt(lam_mean) * f.w);
                    outcome_of_column.push_back(static_cast<Eigen::Index>(i));
                }
            }
            v = hi + 1;
        }
    }

    const Eigen::Index big = static_cast<Eigen::Index>(columns.size());
    require(big >= dim, "symmetric_naimark_dilate: defective decomposition");
    Mat a(dim, big);
    for (Eigen::Index c = 0; c < big; ++c) a.col(c) = columns[static_cast<std::size_t>(c)];
    if (operator_norm(a * a.adjoint() - Mat::Identity(dim, dim)) > 1e-10)
        throw invariant_violation("symmetric_naimark_dilate: A A^dag != I");

    Mat perp = Mat::Identity(big, big) - a.adjoint() * a;
    Mat b;  // remaining rows
    if (cls == SymClass::Symmetric) {
        auto factors = decompose_with_z(perp, SymClass::Symmetric, Mat(), 1e-8);
        b = Mat::Zero(big - dim, big);
        require(static_cast<Eigen::Index>(factors.size()) == big - dim,
                "symmetric_naimark_dilate: completion rank mismatch");
        for (Eigen::Index k = 0; k < big - dim; ++k)
            b.row(k) = factors[static_cast<std::size_t>(k)].v.adjoint();
    } else {
        Mat zcol = j_blocks(big);
        auto factors = decompose_with_z(perp, SymClass::SelfDual, zcol, 1e-8);
        b = Mat::Zero(big - dim, big);
        require(static_cast<Eigen::Index>(factors.size()) * 2 == big - dim,
                "symmetric_naimark_dilate: completion rank mismatch");
        for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(factors.size()); ++k) {
            b.row(2 * k) = factors[static_cast<std::size_t>(k)].v.adjoint();
            b.row(2 * k + 1) = factors[static_cast<std::size_t>(k)].w.adjoint();
        }
    }

    SymmetricDilation out;
    out.m = Mat::Zero(big, big);
    out.m.topRows(dim) = a;
    out.m.bottomRows(big - dim) = b;
    if (operator_norm(out.m * out.m.adjoint() - Mat::Identity(big, big)) > 1e-8)
        throw invariant_violation("symmetric_naimark_dilate: completion not unitary");

    out.pi = Mat::Zero(big, big);
    out.pi.topLeftCorner(dim, dim) = Mat::Identity(dim, dim);
    out.q.assign(elements.size(), Mat::Zero(big, big));
    for (Eigen::Index c = 0; c < big; ++c) {
        Eigen::Index i = outcome_of_column[static_cast<std::size_t>(c)];
        out.q[static_cast<std::size_t>(i)] += out.m.col(c) * out.m.col(c).adjoint();
    }
    if (cls == SymClass::SelfDual) {
        out.z_ambient = Mat::Zero(big, big);
        out.z_ambient.topLeftCorner(dim, dim) = standard_z(dim);
        out.z_ambient.bottomRightCorner(big - dim, big - dim) = j_blocks(big - dim);
    }
    out.outcome_of_column = std::move(outcome_of_column);
    return out;
}

namespace {

Mat expm_i(const Mat& h) {
    linalg::HermitianEig eig = linalg::hermitian_eig(h);
    Vec ph(eig.eigenvalues.size());
    for (Eigen::Index i = 0; i < ph.size(); ++i) ph(i) = std::polar(1.0, eig.eigenvalues(i));
    return eig.eigenvectors * ph.asDiagonal() * eig.eigenvectors.adjoint();
}

Mat class_symmetrize(const Mat& h, SymClass cls) {
    switch (cls) {
        case SymClass::None:
            return h;
        case SymClass::Symmetric:
            return 0.5 * (h + h.transpose());
        case SymClass::SelfDual: {
            Mat z = standard_z(h.rows());
            return 0.5 * (h - z * h.conjugate() * z);
        }
    }
    return h;
}

}  // namespace

torus::SoftTorus random_class_torus(int d, Eigen::Index dim, SymClass cls, double eta,
                                    std::uint64_t seed) {
    require(d >= 1 && dim >= 2, "random_class_torus: bad parameters");
    if (cls == SymClass::SelfDual) require(dim % 2 == 0, "random_class_torus: even dim required");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Mat shared = class_symmetrize(linalg::random_hermitian(static_cast<int>(dim), rng), cls);
    torus::SoftTorus t;
    for (int i = 0; i < d; ++i) {
        Mat noise = class_symmetrize(linalg::random_hermitian(static_cast<int>(dim), rng), cls);
        Mat h = g(rng) * shared + eta * noise;
        h = 0.5 * (h + h.adjoint()).eval();
        t.u.push_back(expm_i(h));
    }
    t.epsilon = torus::commutator_epsilon(t);
    return t;
}

double class_defect(const torus::SoftTorus& t, SymClass cls) {
    double worst = 0.0;
    for (const Mat& u : t.u) worst = std::max(worst, symmetry_check(u, cls));
    return worst;
}

double class_defect(const torus::LocalProjector& p, SymClass cls) {
    double worst = symmetry_check(p.p, cls);
    for (const Mat& u : p.u) worst = std::max(worst, symmetry_check(u, cls));
    return worst;
}

double class_defect(const povm::Dilation& dil, SymClass cls) {
    double worst = 0.0;
    Mat z;
    if (cls == SymClass::SelfDual) z = standard_z(dil.povm.dim);
    for (const auto& oc : dil.povm.outcomes) {
        if (cls == SymClass::Symmetric)
            worst = std::max(worst, operator_norm(oc.a - oc.a.conjugate()));
        else if (cls == SymClass::SelfDual)
            worst = std::max(worst,
                             operator_norm(oc.a.transpose() + z * oc.a.adjoint() * z));
    }
    for (const Mat& k : dil.k) worst = std::max(worst, symmetry_check(k, cls));
    return worst;
}

}  // namespace qmnum::symmetry
