#include "qmnum/channels.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "qmnum/linalg.hpp"

namespace qmnum::channels {

Mat erasure_apply(const ErasureChannel& ch, const Mat& rho) {
    require(ch.p >= 0.0 && ch.p <= 1.0, "erasure_apply: p in [0,1]");
    require(rho.rows() == 2 && rho.cols() == 2, "erasure_apply: qubit input required");
    if (std::abs(rho.trace() - cxd(1, 0)) > 1e-9 ||
        linalg::operator_norm(rho - rho.adjoint()) > 1e-9)
        throw invalid_input("erasure_apply: input not a density matrix");
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (rho + rho.adjoint()));
    if (es.eigenvalues()(0) < -1e-9) throw invalid_input("erasure_apply: input not PSD");
    Mat out = Mat::Zero(3, 3);
    out.topLeftCorner(2, 2) = ch.p * rho;
    out(2, 2) = 1.0 - ch.p;
    return out;
}

bool is_monotone(const BooleanFn& f) {
    const std::uint32_t size = 1u << f.n;
    for (std::uint32_t s = 0; s < size; ++s)
        for (int b = 0; b < f.n; ++b)
            if (!(s & (1u << b)) && f.value(s) && !f.value(s | (1u << b))) return false;
    return true;
}

MonotoneBooleanFn monotonize(const BooleanFn& f) {
    MonotoneBooleanFn out;
    out.n = f.n;
    out.table = f.table;
    const std::uint32_t size = 1u << f.n;
    // Upward closure by single-bit covers.
    for (int b = 0; b < f.n; ++b)
        for (std::uint32_t s = 0; s < size; ++s)
            if ((s & (1u << b)) && out.table[s ^ (1u << b)]) out.table[s] = 1;
    return out;
}

double ReliabilityPoly::value(double p) const {
    double acc = 0.0;
    for (int k = 0; k <= n; ++k) {
        if (weight_count[static_cast<std::size_t>(k)] == 0.0) continue;
        acc += weight_count[static_cast<std::size_t>(k)] * std::pow(p, k) *
               std::pow(1.0 - p, n - k);
    }
    return acc;
}

double ReliabilityPoly::derivative(double p) const {
    double acc = 0.0;
    for (int k = 0; k <= n; ++k) {
        double b = weight_count[static_cast<std::size_t>(k)];
        if (b == 0.0) continue;
        if (k > 0) acc += b * k * std::pow(p, k - 1) * std::pow(1.0 - p, n - k);
        if (n - k > 0) acc -= b * (n - k) * std::pow(p, k) * std::pow(1.0 - p, n - k - 1);
    }
    return acc;
}

ReliabilityPoly reliability_poly(const MonotoneBooleanFn& f) {
    require(f.n >= 1 && f.n <= 24, "reliability_poly: n in [1,24]");
    ReliabilityPoly poly;
    poly.n = f.n;
    poly.weight_count.assign(static_cast<std::size_t>(f.n) + 1, 0.0);
    const std::uint32_t size = 1u << f.n;
    for (std::uint32_t s = 0; s < size; ++s)
        if (f.value(s)) poly.weight_count[static_cast<std::size_t>(std::popcount(s))] += 1.0;

    // Expand: p^k (1-p)^{n-k} = sum_j p^{k+j} C(n-k, j) (-1)^j.
    poly.monomial.assign(static_cast<std::size_t>(f.n) + 1, 0.0);
    std::vector<std::vector<double>> binom(static_cast<std::size_t>(f.n) + 1);
    for (int m = 0; m <= f.n; ++m) {
        binom[static_cast<std::size_t>(m)].assign(static_cast<std::size_t>(m) + 1, 1.0);
        for (int j = 1; j < m; ++j)
            binom[static_cast<std::size_t>(m)][static_cast<std::size_t>(j)] =
                binom[static_cast<std::size_t>(m - 1)][static_cast<std::size_t>(j - 1)] +
                binom[static_cast<std::size_t>(m - 1)][static_cast<std::size_t>(j)];
    }
    for (int k = 0; k <= f.n; ++k) {
        double b = poly.weight_count[static_cast<std::size_t>(k)];
        if (b == 0.0) continue;
        for (int j = 0; j <= f.n - k; ++j)
            poly.monomial[static_cast<std::size_t>(k + j)] +=
                b * binom[static_cast<std::size_t>(f.n - k)][static_cast<std::size_t>(j)] *
                ((j % 2) ? -1.0 : 1.0);
    }
    return poly;
}

namespace {

// DFS over truth tables in weight-layer order with monotone pruning.
void enumerate_rec(int n, std::vector<std::uint32_t>& order, std::size_t pos,
                   MonotoneBooleanFn& f, const std::function<void(const MonotoneBooleanFn&)>& sink) {
    if (pos == order.size()) {
        sink(f);
        return;
    }
    std::uint32_t s = order[pos];
    bool forced_one = false;
    for (int b = 0; b < n; ++b)
        if ((s & (1u << b)) && f.table[s ^ (1u << b)]) {
            forced_one = true;
            break;
        }
    if (forced_one) {
        f.table[s] = 1;
        enumerate_rec(n, order, pos + 1, f, sink);
        f.table[s] = 0;
        return;
    }
    f.table[s] = 0;
    enumerate_rec(n, order, pos + 1, f, sink);
    f.table[s] = 1;
    enumerate_rec(n, order, pos + 1, f, sink);
    f.table[s] = 0;
}

}  // namespace

void enumerate_monotone(int n, const std::function<void(const MonotoneBooleanFn&)>& sink) {
    require(n >= 0 && n <= 5, "enumerate_monotone: n <= 5");
    MonotoneBooleanFn f;
    f.n = n;
    f.table.assign(std::size_t(1) << n, 0);
    std::vector<std::uint32_t> order(std::size_t(1) << n);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [](std::uint32_t a, std::uint32_t b) {
        return std::popcount(a) < std::popcount(b);
    });
    enumerate_rec(n, order, 0, f, sink);
}

std::int64_t count_monotone(int n) {
    std::int64_t count = 0;
    enumerate_monotone(n, [&](const MonotoneBooleanFn&) { ++count; });
    return count;
}

std::vector<double> default_p_grid() {
    std::vector<double> g;
    for (int i = 1; i <= 49; ++i) g.push_back(0.02 * i);
    return g;
}

MatthewReport matthew_check(const MonotoneBooleanFn& f, const std::vector<double>& p_grid,
                            double tol) {
    MatthewReport rep;
    const std::uint32_t size = 1u << f.n;
    bool any0 = false, any1 = false;
    for (std::uint32_t s = 0; s < size; ++s) (f.value(s) ? any1 : any0) = true;
    if (!any0 || !any1) {
        rep.constant = true;
        return rep;
    }
    ReliabilityPoly poly = reliability_poly(f);
    rep.min_ratio = std::numeric_limits<double>::infinity();
    rep.passed = true;
    rep.corollary_passed = true;
    for (double p : p_grid) {
        double fp = poly.value(p);
        double fd = poly.derivative(p);
        double lhs = p * (1.0 - p) * fd;
        double rhs = fp * (1.0 - fp);
        if (rhs > 0) rep.min_ratio = std::min(rep.min_ratio, lhs / rhs);
        if (lhs < (1.0 - tol) * rhs) rep.passed = false;
        // strict hypothesis, with a margin so that f(p) = p (dictators) does
        // not trigger on roundoff
        if (p <= 0.5 && fp > p + 1e-9) {
            if (!(fp + poly.value(1.0 - p) > 1.0 - 1e-12)) rep.corollary_passed = false;
        }
    }
    return rep;
}

ComplementPairReport complement_pair_check(const MonotoneBooleanFn& f,
                                           const std::vector<double>& p_grid) {
    ComplementPairReport rep;
    const std::uint32_t size = 1u << f.n;
    const std::uint32_t full = size - 1;
    for (std::uint32_t s = 0; s < size; ++s)
        if (f.value(s) && f.value(full ^ s)) {
            rep.has_complementary_pair = true;
            break;
        }
    ReliabilityPoly poly = reliability_poly(f);
    rep.max_sum_minus_one = -std::numeric_limits<double>::infinity();
    for (double p : p_grid)
        rep.max_sum_minus_one =
            std::max(rep.max_sum_minus_one, poly.value(p) + poly.value(1.0 - p) - 1.0);
    rep.sum_bound_passed = rep.max_sum_minus_one <= 1e-12;
    return rep;
}

void QubitDecodeChannel::check() const {
    require(!kraus.empty(), "QubitDecodeChannel: no Kraus operators");
    Mat acc = Mat::Zero(2, 2);
    for (const Mat& k : kraus) {
        require(k.rows() == 3 && k.cols() == 2, "QubitDecodeChannel: Kraus must be 3 x 2");
        acc += k.adjoint() * k;
    }
    if (linalg::operator_norm(acc - Mat::Identity(2, 2)) > 1e-10)
        throw invalid_input("QubitDecodeChannel: not trace preserving");
}

QubitDecodeChannel identity_decode() {
    QubitDecodeChannel ch;
    Mat k = Mat::Zero(3, 2);
    k(0, 0) = 1.0;
    k(1, 1) = 1.0;
    ch.kraus.push_back(k);
    return ch;
}

QubitDecodeChannel depolarize_to_mixed() {
    QubitDecodeChannel ch;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            Mat k = Mat::Zero(3, 2);
            k(i, j) = 1.0 / std::sqrt(2.0);
            ch.kraus.push_back(k);
        }
    return ch;
}

QubitDecodeChannel random_decode(std::uint64_t seed, int env_dim) {
    require(env_dim >= 1, "random_decode: env_dim >= 1");
    std::mt19937_64 rng(seed);
    Mat u = linalg::haar_unitary(3 * env_dim, rng);
    Mat v = u.leftCols(2);  // isometry C^2 -> C^3 (x) C^env
    QubitDecodeChannel ch;
    for (int e = 0; e < env_dim; ++e) {
        Mat k(3, 2);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 2; ++c) k(r, c) = v(r * env_dim + e, c);
        ch.kraus.push_back(k);
    }
    ch.check();
    return ch;
}

namespace {

// Mistake rate at a Bloch vector: 1 - sum_K tr[M psi M^dag psi], M = J^dag K.
struct MistakeEvaluator {
    double c0 = 0.0;
    Eigen::Vector3d lin = Eigen::Vector3d::Zero();
    Eigen::Matrix3d quad = Eigen::Matrix3d::Zero();

    explicit MistakeEvaluator(const QubitDecodeChannel& dec) {
        std::array<Mat, 3> sigma;
        sigma[0] = Mat::Zero(2, 2);
        sigma[0] << 0, 1, 1, 0;
        sigma[1] = Mat::Zero(2, 2);
        sigma[1] << cxd(0, 0), cxd(0, -1), cxd(0, 1), cxd(0, 0);
        sigma[2] = Mat::Zero(2, 2);
        sigma[2] << 1, 0, 0, -1;
        for (const Mat& k : dec.kraus) {
            Mat m = k.topRows(2);  // J^dag K
            c0 += (m * m.adjoint()).trace().real();
            for (int a = 0; a < 3; ++a) {
                lin(a) += ((m * sigma[static_cast<std::size_t>(a)] * m.adjoint()).trace() +
                           (m * m.adjoint() * sigma[static_cast<std::size_t>(a)]).trace())
                              .real();
                for (int b = 0; b < 3; ++b)
                    quad(a, b) += (m * sigma[static_cast<std::size_t>(a)] * m.adjoint() *
                                   sigma[static_cast<std::size_t>(b)])
                                      .trace()
                                      .real();
            }
        }
    }

    double operator()(double theta, double phi) const {
        Eigen::Vector3d n(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                          std::cos(theta));
        double fid = 0.25 * (c0 + lin.dot(n) + n.dot(quad * n));
        return 1.0 - fid;
    }
};

}  // namespace

MistakeRates mistake_rates(const QubitDecodeChannel& dec, int grid, int refinements) {
    dec.check();
    MistakeRates out;

    // Exact Haar average: int tr[M psi M^dag psi] = (|tr M|^2 + ||M||_F^2) / 6.
    double fid = 0.0;
    for (const Mat& k : dec.kraus) {
        Mat m = k.topRows(2);
        fid += (std::norm(m.trace()) + m.squaredNorm()) / 6.0;
    }
    out.average = 1.0 - fid;

    MistakeEvaluator ev(dec);
    double best = -1.0, best_theta = 0.0, best_phi = 0.0;
    double t_lo = 0.0, t_hi = kPi, p_lo = 0.0, p_hi = 2 * kPi;
    for (int level = 0; level <= refinements; ++level) {
        for (int i = 0; i <= grid; ++i)
            for (int j = 0; j <= grid; ++j) {
                double th = t_lo + (t_hi - t_lo) * i / grid;
                double ph = p_lo + (p_hi - p_lo) * j / grid;
                double e = ev(th, ph);
                if (e > best) {
                    best = e;
                    best_theta = th;
                    best_phi = ph;
                }
            }
        double dt = (t_hi - t_lo) / grid, dp = (p_hi - p_lo) / grid;
        t_lo = std::max(0.0, best_theta - 2 * dt);
        t_hi = std::min(kPi, best_theta + 2 * dt);
        p_lo = best_phi - 2 * dp;
        p_hi = best_phi + 2 * dp;
    }
    out.maximum = best;
    return out;
}

double average_mistake_quadrature(const QubitDecodeChannel& dec, int n_theta, int n_phi) {
    dec.check();
    MistakeEvaluator ev(dec);
    // Midpoint rule in u = cos(theta) and phi; uniform measure on the sphere.
    double acc = 0.0;
    for (int i = 0; i < n_theta; ++i) {
        double u = -1.0 + 2.0 * (i + 0.5) / n_theta;
        double theta = std::acos(u);
        for (int j = 0; j < n_phi; ++j) {
            double phi = 2 * kPi * (j + 0.5) / n_phi;
            acc += ev(theta, phi);
        }
    }
    return acc / (double(n_theta) * n_phi);
}

}  // namespace qmnum::channels
