#include "qmnum/mps.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "qmnum/linalg.hpp"

namespace qmnum::mps {

using linalg::operator_norm;

void MPSChain::check() const {
    require(n_sites >= 2, "MPSChain: need at least two sites");
    require(phys_dim >= 1 && bond_dim >= 1, "MPSChain: bad dimensions");
    require(static_cast<int>(kraus.size()) == phys_dim, "MPSChain: wrong Kraus count");
    for (const Mat& a : kraus)
        require(a.rows() == bond_dim && a.cols() == bond_dim, "MPSChain: bad Kraus shape");
    require(left.size() == bond_dim && right.size() == bond_dim, "MPSChain: bad boundary");
    if (manifestly_hermitian) {
        require(phys_dim % 2 == 0, "MPSChain: manifest Hermiticity needs even d");
        for (int s = 0; s < phys_dim; ++s) {
            int sp = (s + phys_dim / 2) % phys_dim;
            if ((kraus[static_cast<std::size_t>(sp)] - kraus[static_cast<std::size_t>(s)].adjoint())
                    .norm() > 1e-12)
                throw invariant_violation("MPSChain: A(s+d/2) != A(s)^dag");
        }
    }
}

MPSChain build_expander_mps(int bond_dim, int phys_dim, int n_sites, std::uint64_t seed) {
    require(phys_dim % 2 == 0 && phys_dim >= 2, "build_expander_mps: d must be even");
    require(bond_dim >= 2, "build_expander_mps: k >= 2 required");
    require(n_sites >= 4, "build_expander_mps: N >= 4 required");
    MPSChain chain;
    chain.n_sites = n_sites;
    chain.phys_dim = phys_dim;
    chain.bond_dim = bond_dim;
    chain.manifestly_hermitian = true;
    std::mt19937_64 rng(seed);
    const double scale = 1.0 / std::sqrt(double(phys_dim));
    chain.kraus.resize(static_cast<std::size_t>(phys_dim));
    for (int s = 0; s < phys_dim / 2; ++s) {
        Mat u = linalg::haar_unitary(bond_dim, rng);
        chain.kraus[static_cast<std::size_t>(s)] = scale * u;
        chain.kraus[static_cast<std::size_t>(s + phys_dim / 2)] = scale * u.adjoint();
    }
    chain.left = Vec::Zero(bond_dim);
    chain.right = Vec::Zero(bond_dim);
    chain.left(0) = 1.0;
    chain.right(0) = 1.0;
    chain.check();
    return chain;
}

Mat apply_transfer(const std::vector<Mat>& kraus, const Mat& rho) {
    Mat out = Mat::Zero(rho.rows(), rho.cols());
    for (const Mat& a : kraus) out += a.adjoint() * rho * a;
    return out;
}

Mat transfer_matrix_rep(const std::vector<Mat>& kraus) {
    const Eigen::Index k = kraus.front().rows();
    Mat rep = Mat::Zero(k * k, k * k);
    for (const Mat& a : kraus)
        rep += Eigen::kroneckerProduct(a.transpose(), a.adjoint()).eval();
    return rep;
}

TransferOperator transfer_spectrum(const MPSChain& chain) {
    chain.check();
    TransferOperator top;
    top.kraus = chain.kraus;
    Mat rep = transfer_matrix_rep(top.kraus);
    Eigen::ComplexEigenSolver<Mat> es(rep);
    if (es.info() != Eigen::Success)
        throw invariant_violation("transfer_spectrum: eigensolver failed");

    const Eigen::Index n = rep.rows();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return std::abs(es.eigenvalues()(a)) > std::abs(es.eigenvalues()(b));
    });

    double radius = std::abs(es.eigenvalues()(order[0]));
    require(radius > 0, "transfer_spectrum: zero spectral radius");
    double rescale = 1.0 / std::sqrt(radius);
    for (Mat& a : top.kraus) a *= rescale;
    top.matrix_rep = rep / radius;

    top.spectrum = Vec(n);
    for (Eigen::Index i = 0; i < n; ++i)
        top.spectrum(i) = es.eigenvalues()(order[static_cast<std::size_t>(i)]) / radius;
    top.lambda = n > 1 ? std::abs(top.spectrum(1)) : 0.0;

    const Eigen::Index k = chain.bond_dim;
    Vec fp = es.eigenvectors().col(order[0]);
    Mat lam = Eigen::Map<const Mat>(fp.data(), k, k);
    lam /= lam.norm();
    cxd tr = lam.trace();
    if (std::abs(tr) > 1e-12) lam *= std::conj(tr) / std::abs(tr);
    top.fixed_point = lam;
    top.fixed_point_defect = (apply_transfer(top.kraus, lam) - lam).norm();
    top.hermiticity_defect = operator_norm(top.matrix_rep - top.matrix_rep.adjoint());
    return top;
}

namespace {

// Site-ordered operator blocks; index convention: leftmost site is the most
// significant digit of the tensor index.
struct Block {
    Interval iv;
    const Mat* op;
};

bool interval_empty(const Interval& iv) { return iv.last < iv.first; }

// All bulk products A(s_f) ... A(s_l) for one interval.
std::vector<Mat> interval_products(const MPSChain& chain, const Interval& iv) {
    const int len = iv.length();
    std::int64_t combos = 1;
    for (int i = 0; i < len; ++i) combos *= chain.phys_dim;
    std::vector<Mat> out(static_cast<std::size_t>(combos));
    for (std::int64_t c = 0; c < combos; ++c) {
        Mat prod = Mat::Identity(chain.bond_dim, chain.bond_dim);
        std::int64_t rest = c;
        std::int64_t div = combos / chain.phys_dim;
        for (int i = 0; i < len; ++i) {
            int s = static_cast<int>(rest / div);
            rest %= div;
            if (i + 1 < len) div /= chain.phys_dim;
            prod = prod * chain.kraus[static_cast<std::size_t>(s)];
        }
        out[static_cast<std::size_t>(c)] = prod;
    }
    return out;
}

// <Psi| (product of blocks) |Psi>, un-normalized.
cxd contract(const MPSChain& chain, const std::vector<Block>& blocks) {
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        require(blocks[i].iv.first >= 1 && blocks[i].iv.last <= chain.n_sites,
                "contract: interval out of range");
        if (i + 1 < blocks.size())
            require(blocks[i].iv.last < blocks[i + 1].iv.first, "contract: overlapping supports");
        std::int64_t dim = 1;
        for (int j = 0; j < blocks[i].iv.length(); ++j) dim *= chain.phys_dim;
        require(blocks[i].op->rows() == dim && blocks[i].op->cols() == dim,
                "contract: operator dimension mismatch");
    }

    Mat l = chain.left * chain.left.adjoint();
    int site = 1;
    for (const Block& b : blocks) {
        for (; site < b.iv.first; ++site) l = apply_transfer(chain.kraus, l);
        std::vector<Mat> prods = interval_products(chain, b.iv);
        const std::int64_t dim = static_cast<std::int64_t>(prods.size());
        Mat lnew = Mat::Zero(chain.bond_dim, chain.bond_dim);
        for (std::int64_t sp = 0; sp < dim; ++sp) {
            Mat bra = prods[static_cast<std::size_t>(sp)].adjoint() * l;
            for (std::int64_t s = 0; s < dim; ++s) {
                cxd w = (*b.op)(sp, s);
                if (w != cxd(0, 0)) lnew += w * (bra * prods[static_cast<std::size_t>(s)]);
            }
        }
        l = std::move(lnew);
        site = b.iv.last + 1;
    }
    for (; site <= chain.n_sites; ++site) l = apply_transfer(chain.kraus, l);
    return chain.right.adjoint() * l * chain.right;
}

}  // namespace

double norm_squared(const MPSChain& chain) {
    cxd v = contract(chain, {});
    return v.real();
}

cxd amplitude(const MPSChain& chain, const std::vector<int>& config) {
    require(static_cast<int>(config.size()) == chain.n_sites, "amplitude: wrong length");
    Mat prod = Mat::Identity(chain.bond_dim, chain.bond_dim);
    for (int s : config) {
        require(s >= 0 && s < chain.phys_dim, "amplitude: bad symbol");
        prod = prod * chain.kraus[static_cast<std::size_t>(s)];
    }
    return chain.left.adjoint() * prod * chain.right;
}

namespace {

Mat left_contraction(const MPSChain& chain, const Mat& op, const Interval& iv) {
    Mat l = chain.left * chain.left.adjoint();
    int site = 1;
    for (; site < iv.first; ++site) l = apply_transfer(chain.kraus, l);
    std::vector<Mat> prods = interval_products(chain, iv);
    const std::int64_t dim = static_cast<std::int64_t>(prods.size());
    Mat lnew = Mat::Zero(chain.bond_dim, chain.bond_dim);
    for (std::int64_t sp = 0; sp < dim; ++sp) {
        Mat bra = prods[static_cast<std::size_t>(sp)].adjoint() * l;
        for (std::int64_t s = 0; s < dim; ++s) {
            cxd w = op(sp, s);
            if (w != cxd(0, 0)) lnew += w * (bra * prods[static_cast<std::size_t>(s)]);
        }
    }
    return lnew;
}

Mat right_contraction(const MPSChain& chain, const Mat& op, const Interval& iv) {
    Mat r = chain.right * chain.right.adjoint();
    int site = chain.n_sites;
    for (; site > iv.last; --site) {
        Mat rnew = Mat::Zero(chain.bond_dim, chain.bond_dim);
        for (const Mat& a : chain.kraus) rnew += a * r * a.adjoint();
        r = std::move(rnew);
    }
    std::vector<Mat> prods = interval_products(chain, iv);
    const std::int64_t dim = static_cast<std::int64_t>(prods.size());
    Mat rnew = Mat::Zero(chain.bond_dim, chain.bond_dim);
    for (std::int64_t sp = 0; sp < dim; ++sp)
        for (std::int64_t s = 0; s < dim; ++s) {
            cxd w = op(sp, s);
            if (w != cxd(0, 0))
                rnew += w * (prods[static_cast<std::size_t>(s)] * r *
                             prods[static_cast<std::size_t>(sp)].adjoint());
        }
    return rnew;
}

}  // namespace

CorrelationResult connected_correlation(const MPSChain& chain, const Mat& op_a, Interval ia,
                                        const Mat& op_b, Interval ib) {
    return connected_correlation(chain, transfer_spectrum(chain), op_a, ia, op_b, ib);
}

CorrelationResult connected_correlation(const MPSChain& chain, const TransferOperator& top,
                                        const Mat& op_a, Interval ia, const Mat& op_b,
                                        Interval ib) {
    chain.check();
    require(1 <= ia.first && ia.first <= ia.last && ia.last < ib.first && ib.first <= ib.last &&
                ib.last <= chain.n_sites,
            "connected_correlation: need 1 <= P <= Q < R <= S <= N");

    double nrm = norm_squared(chain);
    require(nrm > 0, "connected_correlation: unnormalizable state");
    cxd ab = contract(chain, {{ia, &op_a}, {ib, &op_b}}) / nrm;
    cxd ea = contract(chain, {{ia, &op_a}}) / nrm;
    cxd eb = contract(chain, {{ib, &op_b}}) / nrm;

    CorrelationResult res;
    res.value = ab - ea * eb;
    res.separation = ib.first - ia.last;
    res.lambda = top.lambda;
    res.bound = operator_norm(op_a) * operator_norm(op_b) * std::pow(top.lambda, res.separation);
    res.lambda_a = left_contraction(chain, op_a, ia) / nrm;
    res.lambda_b = right_contraction(chain, op_b, ib) / nrm;
    return res;
}

CorrelationResult two_interval_correlation(const MPSChain& chain, const Mat& op_a, Interval ia,
                                           const Mat& op_b1, Interval ib1, const Mat& op_b2,
                                           Interval ib2) {
    chain.check();
    if (interval_empty(ib1)) return connected_correlation(chain, op_a, ia, op_b2, ib2);
    require(ib1.first >= 1 && ib1.last < ia.first && ia.first <= ia.last &&
                ia.last < ib2.first && ib2.first <= ib2.last && ib2.last <= chain.n_sites,
            "two_interval_correlation: need S1 < P <= Q < R2");

    double nrm = norm_squared(chain);
    require(nrm > 0, "two_interval_correlation: unnormalizable state");
    cxd full = contract(chain, {{ib1, &op_b1}, {ia, &op_a}, {ib2, &op_b2}}) / nrm;
    cxd ea = contract(chain, {{ia, &op_a}}) / nrm;
    cxd eb = contract(chain, {{ib1, &op_b1}, {ib2, &op_b2}}) / nrm;

    TransferOperator top = transfer_spectrum(chain);
    CorrelationResult res;
    res.value = full - ea * eb;
    res.separation = std::min(ia.first - ib1.last, ib2.first - ia.last);
    res.lambda = top.lambda;
    res.bound = operator_norm(op_a) * operator_norm(op_b1) * operator_norm(op_b2) *
                std::pow(top.lambda, res.separation);
    res.lambda_a = left_contraction(chain, op_a, ia) / nrm;
    res.lambda_b = right_contraction(chain, op_b2, ib2) / nrm;

    // Folded-chain spectrum is {lambda_i * conj(lambda_j)}: the top stays at 1
    // and the second modulus equals the single-chain gap.
    res.folded_lambda = top.lambda;
    return res;
}

MPSChain gauge_transform(const MPSChain& chain, const Mat& x) {
    require(x.rows() == chain.bond_dim && x.cols() == chain.bond_dim,
            "gauge_transform: shape mismatch");
    Eigen::FullPivLU<Mat> lu(x);
    require(lu.isInvertible(), "gauge_transform: X not invertible");
    Mat xinv = lu.inverse();
    MPSChain out = chain;
    for (Mat& a : out.kraus) a = xinv * a * x;
    out.left = x.adjoint() * chain.left;
    out.right = xinv * chain.right;
    out.manifestly_hermitian = false;  // gauge generally breaks the flag
    return out;
}

std::vector<Mat> folded_kraus(const MPSChain& chain) {
    std::vector<Mat> out;
    out.reserve(chain.kraus.size() * chain.kraus.size());
    for (const Mat& a : chain.kraus)
        for (const Mat& b : chain.kraus)
            out.push_back(Eigen::kroneckerProduct(a, b.conjugate()).eval());
    return out;
}

}  // namespace qmnum::mps
