#include "qmnum/soft_torus.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "qmnum/linalg.hpp"
#include "qmnum/serialize.hpp"

namespace qmnum::torus {

using linalg::commutator_norm;
using linalg::operator_norm;
using linalg::polar;

double commutator_epsilon(const SoftTorus& t) {
    double eps = 0.0;
    for (std::size_t i = 0; i < t.u.size(); ++i)
        for (std::size_t j = i + 1; j < t.u.size(); ++j)
            eps = std::max(eps, commutator_norm(t.u[i], t.u[j]));
    return eps;
}

double locality_epsilon(const LocalProjector& p) {
    double eps = 0.0;
    for (const Mat& u : p.u) eps = std::max(eps, commutator_norm(p.p, u));
    return eps;
}

void validate(const SoftTorus& t, double tol) {
    require(!t.u.empty(), "SoftTorus: empty tuple");
    for (const Mat& u : t.u) {
        require(u.rows() == t.dim() && u.cols() == t.dim(), "SoftTorus: dimension mismatch");
        if (!linalg::is_unitary(u, tol)) throw invariant_violation("SoftTorus: non-unitary entry");
    }
    if (commutator_epsilon(t) > t.epsilon + tol)
        throw invariant_violation("SoftTorus: certificate understates commutators");
}

void validate(const LocalProjector& p, double tol) {
    require(!p.u.empty(), "LocalProjector: empty tuple");
    for (const Mat& u : p.u) {
        require(u.rows() == p.dim() && u.cols() == p.dim(), "LocalProjector: dimension mismatch");
        if (!linalg::is_unitary(u, tol))
            throw invariant_violation("LocalProjector: non-unitary entry");
    }
    for (std::size_t i = 0; i < p.u.size(); ++i)
        for (std::size_t j = i + 1; j < p.u.size(); ++j)
            if (commutator_norm(p.u[i], p.u[j]) > tol)
                throw invariant_violation("LocalProjector: unitaries do not commute");
    if (!linalg::is_projector(p.p, tol))
        throw invariant_violation("LocalProjector: P not a projector");
    if (locality_epsilon(p) > p.epsilon + tol)
        throw invariant_violation("LocalProjector: certificate understates [P,U]");
}

namespace {

inline cxd ux_phase(int m, int n, int N) {
    m = ((m % N) + N) % N;
    n = ((n % N) + N) % N;
    if (m != N - 1) return cxd(1.0, 0.0);
    return std::polar(1.0, -2.0 * kPi * n / N);
}

inline cxd uy_phase(int m, int n, int N) {
    m = ((m % N) + N) % N;
    return std::polar(1.0, 2.0 * kPi * m / (double(N) * N));
}

inline int vid(int m, int n, int N) { return ((m % N + N) % N) * N + ((n % N + N) % N); }

}  // namespace

SoftTorus voiculescu_pair(int n) {
    require(n >= 2, "voiculescu_pair: N >= 2 required");
    const int dim = n * n;
    Mat u = Mat::Zero(dim, dim), v = Mat::Zero(dim, dim);
    for (int m = 0; m < n; ++m) {
        for (int k = 0; k < n; ++k) {
            u(vid(m + 1, k, n), vid(m, k, n)) = ux_phase(m, k, n);
            v(vid(m, k + 1, n), vid(m, k, n)) = uy_phase(m, k, n);
        }
    }
    SoftTorus t;
    t.u = {std::move(u), std::move(v)};
    t.epsilon = std::abs(std::polar(1.0, 2.0 * kPi / (double(n) * n)) - 1.0);
    return t;
}

namespace {

// Wilson loop around the square at (m, k): right, up, left, down, with the
// reverse hops carrying the conjugate of the forward transport phase.
cxd wilson_loop(int m, int k, int n) {
    return ux_phase(m, k, n) * uy_phase(m + 1, k, n) * std::conj(ux_phase(m, k + 1, n)) *
           std::conj(uy_phase(m, k, n));
}

}  // namespace

cxd plaquette_phase(int n) {
    require(n >= 2, "plaquette_phase: N >= 2 required");
    return wilson_loop(0, 0, n);
}

std::vector<cxd> plaquette_phases(int n) {
    require(n >= 2, "plaquette_phases: N >= 2 required");
    std::vector<cxd> out;
    out.reserve(static_cast<std::size_t>(n) * n);
    for (int m = 0; m < n; ++m)
        for (int k = 0; k < n; ++k) out.push_back(wilson_loop(m, k, n));
    return out;
}

cxd z_direction(int attempt) {
    // Golden-angle sequence keeps successive directions well separated.
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    return std::polar(1.0, 0.5 + golden * attempt);
}

namespace {

Mat polar_with_nudge(const Mat& x, bool& perturbed, cxd& zused) {
    try {
        return polar(x);
    } catch (const rank_deficient&) {
        const double shift = 1e-6;
        for (int attempt = 0; attempt < 64; ++attempt) {
            cxd z = z_direction(attempt);
            Mat y = x + shift * z * Mat::Identity(x.rows(), x.cols());
            Eigen::JacobiSVD<Mat> svd(y);
            if (svd.singularValues()(y.rows() - 1) > 1e-8) {
                perturbed = true;
                zused = z;
                return polar(y);
            }
        }
        throw rank_deficient("map_G: no workable z direction found");
    }
}

}  // namespace

MapGResult map_G(const LocalProjector& p) {
    require(p.epsilon <= 0.6, "map_G: input epsilon must be <= 0.6");
    MapGResult out;

    Mat basis;
    const Eigen::Index dim = p.dim();
    if (operator_norm(p.p - Mat::Identity(dim, dim)) <= 1e-12) {
        out.torus.u = p.u;
        out.torus.epsilon = commutator_epsilon(out.torus);
        return out;
    }
    linalg::HermitianEig eig = linalg::hermitian_eig(p.p);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < dim; ++i)
        if (eig.eigenvalues(i) > 0.5) ++rank;
    require(rank > 0, "map_G: zero-rank projector");
    basis = eig.eigenvectors.rightCols(rank);

    for (const Mat& u : p.u) {
        Mat block = basis.adjoint() * u * basis;
        out.torus.u.push_back(polar_with_nudge(block, out.perturbed, out.z));
    }
    out.torus.epsilon = commutator_epsilon(out.torus);
    return out;
}

SoftTorus direct_sum(const SoftTorus& a, const SoftTorus& b) {
    require(a.d() == b.d(), "direct_sum: mismatched d");
    SoftTorus out;
    for (int i = 0; i < a.d(); ++i) {
        Mat m = Mat::Zero(a.dim() + b.dim(), a.dim() + b.dim());
        m.topLeftCorner(a.dim(), a.dim()) = a.u[i];
        m.bottomRightCorner(b.dim(), b.dim()) = b.u[i];
        out.u.push_back(std::move(m));
    }
    out.epsilon = std::max(a.epsilon, b.epsilon);
    return out;
}

LocalProjector direct_sum(const LocalProjector& a, const LocalProjector& b) {
    require(a.d() == b.d(), "direct_sum: mismatched d");
    LocalProjector out;
    for (int i = 0; i < a.d(); ++i) {
        Mat m = Mat::Zero(a.dim() + b.dim(), a.dim() + b.dim());
        m.topLeftCorner(a.dim(), a.dim()) = a.u[i];
        m.bottomRightCorner(b.dim(), b.dim()) = b.u[i];
        out.u.push_back(std::move(m));
    }
    out.p = Mat::Zero(a.dim() + b.dim(), a.dim() + b.dim());
    out.p.topLeftCorner(a.dim(), a.dim()) = a.p;
    out.p.bottomRightCorner(b.dim(), b.dim()) = b.p;
    out.epsilon = std::max(a.epsilon, b.epsilon);
    return out;
}

LocalProjector complement(const LocalProjector& p) {
    LocalProjector out = p;
    out.p = Mat::Identity(p.dim(), p.dim()) - p.p;
    return out;
}

namespace {

double conjugation_defect(const SoftTorus& a, const SoftTorus& b, const Mat& y) {
    double worst = 0.0;
    for (int i = 0; i < a.d(); ++i)
        worst = std::max(worst, operator_norm(y.adjoint() * a.u[i] * y - b.u[i]));
    return worst;
}

// Alignment from the spectrum of the first pair: match eigenvectors by sorted
// phase, then fix the per-eigenvector phase freedom by synchronizing against
// the second unitary (top eigenvector of the entrywise cross product).
Mat spectral_alignment(const SoftTorus& a, const SoftTorus& b) {
    linalg::UnitaryEig ea = linalg::unitary_eig(a.u[0]), eb = linalg::unitary_eig(b.u[0]);
    auto order = [](const Vec& z) {
        std::vector<Eigen::Index> idx(static_cast<std::size_t>(z.size()));
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](Eigen::Index p, Eigen::Index q) {
            return std::arg(z(p)) < std::arg(z(q));
        });
        return idx;
    };
    auto oa = order(ea.eigenvalues), ob = order(eb.eigenvalues);
    const Eigen::Index n = a.dim();
    Mat qa(n, n), qb(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        qa.col(c) = ea.q.col(oa[static_cast<std::size_t>(c)]);
        qb.col(c) = eb.q.col(ob[static_cast<std::size_t>(c)]);
    }
    if (a.d() == 1) return qa * qb.adjoint();

    Mat u2 = qa.adjoint() * a.u[1] * qa;
    Mat v2 = qb.adjoint() * b.u[1] * qb;
    Mat s = u2.cwiseProduct(v2.conjugate());
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (s + s.adjoint()));
    Vec top = es.eigenvectors().col(n - 1);
    Vec d(n);
    for (Eigen::Index i = 0; i < n; ++i)
        d(i) = std::abs(top(i)) > 1e-12 ? top(i) / std::abs(top(i)) : cxd(1, 0);
    return qa * d.asDiagonal() * qb.adjoint();
}

}  // namespace

double distance_upper(const SoftTorus& a, const SoftTorus& b) {
    require(a.d() == b.d(), "distance_upper: mismatched d");
    require(a.dim() == b.dim(), "distance_upper: dimension mismatch");
    double best = conjugation_defect(a, b, Mat::Identity(a.dim(), a.dim()));

    try {
        best = std::min(best, conjugation_defect(a, b, spectral_alignment(a, b)));
    } catch (const std::exception&) {
        // alignment heuristic unavailable; other candidates still apply
    }

    // Iterated cross-Gram fixed point: Y <- polar(sum_i U_i Y V_i^dag) / d.
    Mat y = Mat::Identity(a.dim(), a.dim());
    for (int it = 0; it < 60; ++it) {
        Mat t = Mat::Zero(a.dim(), a.dim());
        for (int i = 0; i < a.d(); ++i) t += a.u[i] * y * b.u[i].adjoint();
        try {
            Mat ynew = polar(t);
            double step = operator_norm(ynew - y);
            y = ynew;
            best = std::min(best, conjugation_defect(a, b, y));
            if (step < 1e-13) break;
        } catch (const rank_deficient&) {
            break;
        }
    }
    return best;
}

nlohmann::json to_json(const SoftTorus& t) {
    nlohmann::json us = nlohmann::json::array();
    for (const Mat& u : t.u) us.push_back(io::matrix_to_json(u));
    return {{"kind", "soft_torus"}, {"d", t.d()}, {"epsilon", t.epsilon}, {"unitaries", us}};
}

nlohmann::json to_json(const LocalProjector& p) {
    nlohmann::json us = nlohmann::json::array();
    for (const Mat& u : p.u) us.push_back(io::matrix_to_json(u));
    return {{"kind", "local_projector"},
            {"d", p.d()},
            {"epsilon", p.epsilon},
            {"unitaries", us},
            {"projector", io::matrix_to_json(p.p)}};
}

SoftTorus soft_torus_from_json(const nlohmann::json& j) {
    require(j.value("kind", "") == std::string("soft_torus"), "soft_torus_from_json: bad kind");
    SoftTorus t;
    for (const auto& uj : j.at("unitaries")) t.u.push_back(io::matrix_from_json(uj));
    t.epsilon = j.at("epsilon").get<double>();
    return t;
}

LocalProjector local_projector_from_json(const nlohmann::json& j) {
    require(j.value("kind", "") == std::string("local_projector"),
            "local_projector_from_json: bad kind");
    LocalProjector p;
    for (const auto& uj : j.at("unitaries")) p.u.push_back(io::matrix_from_json(uj));
    p.p = io::matrix_from_json(j.at("projector"));
    p.epsilon = j.at("epsilon").get<double>();
    return p;
}

}  // namespace qmnum::torus
