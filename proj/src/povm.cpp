#include "qmnum/povm.hpp"

#include <algorithm>
#include <cmath>

#include "qmnum/parallel.hpp"

namespace qmnum::povm {

using linalg::operator_norm;

namespace {

double bump(double x) {
    if (std::abs(x) >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - x * x));
}

}  // namespace

double window_value(Window w, double x) {
    if (std::abs(x) >= 1.0) return 0.0;
    switch (w) {
        case Window::Bump: {
            double den = bump(x - 1.0) + bump(x) + bump(x + 1.0);
            return bump(x) / den;
        }
        case Window::Hann: {
            double c = std::cos(0.5 * kPi * x);
            return c * c;
        }
    }
    return 0.0;
}

namespace {

struct AxisCache {
    // factor[a][shift index] for X factors then Y factors; empty matrix when
    // the window misses the spectrum entirely.
    std::vector<std::vector<Mat>> x_factors;  // [axis][m + bound]
    std::vector<std::vector<Mat>> y_factors;  // [axis][n + bound]
    int bound = 0;
};

AxisCache build_factors(const SoftTorus& t, double delta, Window window) {
    AxisCache cache;
    cache.bound = static_cast<int>(std::ceil(1.0 / delta)) + 1;
    const int nshift = 2 * cache.bound + 1;
    const Eigen::Index dim = t.dim();
    cache.x_factors.assign(t.u.size(), {});
    cache.y_factors.assign(t.u.size(), {});
    for (std::size_t i = 0; i < t.u.size(); ++i) {
        linalg::UnitaryEig eig = linalg::unitary_eig(t.u[i]);
        cache.x_factors[i].resize(nshift);
        cache.y_factors[i].resize(nshift);
        for (int s = 0; s < nshift; ++s) {
            int shift = s - cache.bound;
            RVec fx(dim), fy(dim);
            bool any_x = false, any_y = false;
            for (Eigen::Index v = 0; v < dim; ++v) {
                double x = eig.eigenvalues(v).real();
                double y = eig.eigenvalues(v).imag();
                fx(v) = std::sqrt(window_value(window, x / delta - shift));
                fy(v) = std::sqrt(window_value(window, y / delta - shift));
                any_x |= fx(v) != 0.0;
                any_y |= fy(v) != 0.0;
            }
            if (any_x)
                cache.x_factors[i][s] =
                    eig.q * fx.asDiagonal().toDenseMatrix().cast<cxd>() * eig.q.adjoint();
            if (any_y)
                cache.y_factors[i][s] =
                    eig.q * fy.asDiagonal().toDenseMatrix().cast<cxd>() * eig.q.adjoint();
        }
    }
    return cache;
}

Mat outcome_product(const AxisCache& cache, const std::vector<int>& m, const std::vector<int>& n) {
    const std::size_t d = cache.x_factors.size();
    Mat a = cache.x_factors[0][static_cast<std::size_t>(m[0] + cache.bound)];
    for (std::size_t i = 1; i < d; ++i)
        a = a * cache.x_factors[i][static_cast<std::size_t>(m[i] + cache.bound)];
    for (std::size_t i = 0; i < d; ++i)
        a = a * cache.y_factors[i][static_cast<std::size_t>(n[i] + cache.bound)];
    return a;
}

struct BuildScratch {
    std::vector<std::vector<int>> ms, ns;  // index tuples per outcome candidate
};

BuildScratch enumerate_candidates(const AxisCache& cache) {
    const std::size_t d = cache.x_factors.size();
    std::vector<std::vector<int>> x_valid(d), y_valid(d);
    for (std::size_t i = 0; i < d; ++i) {
        for (int s = -cache.bound; s <= cache.bound; ++s) {
            if (cache.x_factors[i][static_cast<std::size_t>(s + cache.bound)].size() > 0)
                x_valid[i].push_back(s);
            if (cache.y_factors[i][static_cast<std::size_t>(s + cache.bound)].size() > 0)
                y_valid[i].push_back(s);
        }
    }
    BuildScratch out;
    std::vector<std::size_t> digit(2 * d, 0);
    while (true) {
        std::vector<int> m(d), n(d);
        for (std::size_t i = 0; i < d; ++i) {
            m[i] = x_valid[i][digit[i]];
            n[i] = y_valid[i][digit[d + i]];
        }
        out.ms.push_back(std::move(m));
        out.ns.push_back(std::move(n));
        std::size_t pos = 0;
        for (; pos < 2 * d; ++pos) {
            std::size_t limit = pos < d ? x_valid[pos].size() : y_valid[pos - d].size();
            if (++digit[pos] < limit) break;
            digit[pos] = 0;
        }
        if (pos == 2 * d) break;
    }
    return out;
}

PovmSystem build_impl(const SoftTorus& t, double delta, Window window, bool parallel,
                      double prune_threshold) {
    require(!t.u.empty(), "build_povm: empty torus");
    // The index range grows like 1/delta per axis; the floor keeps the
    // outcome count at desk scale.
    require(delta >= 0.02 && delta <= 2.0, "build_povm: need 0.02 <= delta <= 2");
    // Partition property spot check on a sample grid.
    for (double x = -1.0; x <= 1.0; x += 1.0 / 64) {
        double s = window_value(window, x - 1) + window_value(window, x) +
                   window_value(window, x + 1);
        if (std::abs(s - 1.0) > 1e-12 || window_value(window, x) < 0)
            throw invalid_input("build_povm: window violates the partition property");
    }

    PovmSystem sys;
    sys.d = t.d();
    sys.dim = t.dim();
    sys.delta = delta;
    sys.window = window;

    AxisCache cache = build_factors(t, delta, window);
    sys.index_bound = cache.bound;
    BuildScratch cand = enumerate_candidates(cache);
    const std::int64_t nc = static_cast<std::int64_t>(cand.ms.size());

    std::vector<Mat> as(static_cast<std::size_t>(nc));
    auto body = [&](std::int64_t c) {
        as[static_cast<std::size_t>(c)] =
            outcome_product(cache, cand.ms[static_cast<std::size_t>(c)],
                            cand.ns[static_cast<std::size_t>(c)]);
    };
    if (parallel)
        par::for_each_index(nc, body);
    else
        par::for_each_index_serial(nc, body);

    double dropped = 0.0;
    for (std::int64_t c = 0; c < nc; ++c) {
        Mat& a = as[static_cast<std::size_t>(c)];
        double w = a.squaredNorm();
        if (prune_threshold > 0.0 && w <= prune_threshold) {
            dropped += w;
            continue;
        }
        if (w == 0.0) continue;
        sys.outcomes.push_back(Outcome{cand.ms[static_cast<std::size_t>(c)],
                                       cand.ns[static_cast<std::size_t>(c)], std::move(a)});
    }

    Mat total = Mat::Zero(sys.dim, sys.dim);
    for (const Outcome& oc : sys.outcomes) total += oc.a * oc.a.adjoint();

    if (prune_threshold > 0.0) {
        Mat defect = Mat::Identity(sys.dim, sys.dim) - total;
        if (operator_norm(defect) > 0.2)
            throw out_of_regime("build_povm: pruning removed too much weight");
        // Renormalize to exact completeness: A <- T^{-1/2} A.
        Mat tinvsq = linalg::hermitian_function(
            [](double x) { return 1.0 / std::sqrt(std::max(x, 1e-12)); }, total);
        for (Outcome& oc : sys.outcomes) oc.a = tinvsq * oc.a;
        total = Mat::Zero(sys.dim, sys.dim);
        for (const Outcome& oc : sys.outcomes) total += oc.a * oc.a.adjoint();
    }

    sys.completeness_defect = operator_norm(total - Mat::Identity(sys.dim, sys.dim));
    if (sys.completeness_defect > 1e-10)
        throw invariant_violation("build_povm: completeness defect above 1e-10");
    return sys;
}

}  // namespace

PovmSystem build_povm(const SoftTorus& t, double delta, Window window, bool parallel,
                      double prune_threshold) {
    return build_impl(t, delta, window, parallel, prune_threshold);
}

PovmSystem build_povm_serial(const SoftTorus& t, double delta, Window window,
                             double prune_threshold) {
    return build_impl(t, delta, window, false, prune_threshold);
}

Mat PovmSystem::weighted_sum(const std::function<cxd(const Outcome&)>& w) const {
    Mat acc = Mat::Zero(dim, dim);
    for (const Outcome& oc : outcomes) acc += w(oc) * (oc.a * oc.a.adjoint());
    return acc;
}

Mat Dilation::isometry() const {
    const Eigen::Index d0 = povm.dim;
    Mat w(ambient_dim(), d0);
    for (Eigen::Index c = 0; c < povm.count(); ++c)
        w.middleRows(c * d0, d0) = povm.outcomes[static_cast<std::size_t>(c)].a.adjoint();
    return w;
}

Mat Dilation::projector_dense() const {
    Mat w = isometry();
    return w * w.adjoint();
}

Mat Dilation::outcome_projector_dense(Eigen::Index c) const {
    Mat q = Mat::Zero(ambient_dim(), ambient_dim());
    q.block(c * povm.dim, c * povm.dim, povm.dim, povm.dim) = Mat::Identity(povm.dim, povm.dim);
    return q;
}

Mat Dilation::unitary_dense(int axis) const {
    Mat u = Mat::Zero(ambient_dim(), ambient_dim());
    for (Eigen::Index c = 0; c < povm.count(); ++c)
        u.block(c * povm.dim, c * povm.dim, povm.dim, povm.dim) =
            phases[static_cast<std::size_t>(axis)][static_cast<std::size_t>(c)] *
            Mat::Identity(povm.dim, povm.dim);
    return u;
}

double Dilation::commutator_dense(int axis) const {
    Mat pi = projector_dense();
    Mat u = unitary_dense(axis);
    return operator_norm(pi * u - u * pi);
}

LocalProjector Dilation::materialize() const {
    LocalProjector lp;
    for (int i = 0; i < povm.d; ++i) lp.u.push_back(unitary_dense(i));
    lp.p = projector_dense();
    lp.epsilon = epsilon;
    return lp;
}

Dilation naimark_dilate(const PovmSystem& povm_in) {
    if (povm_in.completeness_defect > 1e-10)
        throw invalid_input("naimark_dilate: POVM not complete");
    Dilation dil;
    dil.povm = povm_in;
    dil.phases.assign(static_cast<std::size_t>(povm_in.d),
                      std::vector<cxd>(static_cast<std::size_t>(povm_in.count()), cxd(1, 0)));
    return dil;
}

namespace {

// Accumulates completeness and the d phase-weighted sums in one streaming
// pass, chunked for deterministic parallel reduction.
void accumulate_k(Dilation& dil, bool parallel) {
    const Eigen::Index dim = dil.povm.dim;
    const std::int64_t nc = dil.povm.count();
    const int d = dil.povm.d;
    const std::int64_t chunk = 32;
    const std::int64_t nchunks = (nc + chunk - 1) / chunk;

    std::vector<std::vector<Mat>> partial(static_cast<std::size_t>(nchunks));
    auto body = [&](std::int64_t b) {
        std::vector<Mat> local(static_cast<std::size_t>(d), Mat::Zero(dim, dim));
        for (std::int64_t c = b * chunk; c < std::min(nc, (b + 1) * chunk); ++c) {
            const Outcome& oc = dil.povm.outcomes[static_cast<std::size_t>(c)];
            Mat e = oc.a * oc.a.adjoint();
            for (int i = 0; i < d; ++i)
                local[static_cast<std::size_t>(i)] +=
                    dil.phases[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] * e;
        }
        partial[static_cast<std::size_t>(b)] = std::move(local);
    };
    if (parallel)
        par::for_each_index(nchunks, body);
    else
        par::for_each_index_serial(nchunks, body);

    dil.k.assign(static_cast<std::size_t>(d), Mat::Zero(dim, dim));
    for (std::int64_t b = 0; b < nchunks; ++b)
        for (int i = 0; i < d; ++i)
            dil.k[static_cast<std::size_t>(i)] += partial[static_cast<std::size_t>(b)][static_cast<std::size_t>(i)];
}

}  // namespace

Dilation map_F(const SoftTorus& t, const PovmOptions& opts) {
    double eps = t.epsilon;
    double delta = opts.delta_override ? *opts.delta_override : std::sqrt(t.d() * eps);
    if (delta < 0.02)
        throw invalid_input(
            "map_F: epsilon (numerically) zero; use the trivial embedding or a delta override");
    if (delta >= 2.0) throw out_of_regime("map_F: delta >= 2, epsilon too large");

    Dilation dil;
    dil.povm = build_povm(t, delta, opts.window, opts.parallel, opts.prune_threshold);

    // Deterministic z with the fixed 1e-6 shift; accepted once every
    // per-outcome eigenvalue of V_i + x z clears 1e-8.
    const double x = 1e-6;
    cxd z(1.0, 0.0);
    for (int attempt = 0; attempt < 64; ++attempt) {
        z = torus::z_direction(attempt);
        double minabs = 2.0;
        for (const Outcome& oc : dil.povm.outcomes)
            for (int i = 0; i < dil.povm.d; ++i)
                minabs = std::min(minabs, std::abs(cxd(oc.m[static_cast<std::size_t>(i)] * delta,
                                                       oc.n[static_cast<std::size_t>(i)] * delta) +
                                                   x * z));
        if (minabs > 1e-8) break;
    }
    dil.z = z;
    dil.x_shift = x;

    dil.phases.assign(static_cast<std::size_t>(dil.povm.d),
                      std::vector<cxd>(static_cast<std::size_t>(dil.povm.count())));
    for (Eigen::Index c = 0; c < dil.povm.count(); ++c) {
        const Outcome& oc = dil.povm.outcomes[static_cast<std::size_t>(c)];
        for (int i = 0; i < dil.povm.d; ++i) {
            cxd v = cxd(oc.m[static_cast<std::size_t>(i)] * delta,
                        oc.n[static_cast<std::size_t>(i)] * delta) +
                    x * z;
            dil.phases[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] = v / std::abs(v);
        }
    }

    accumulate_k(dil, opts.parallel);

    double worst = 0.0;
    const Mat id = Mat::Identity(dil.povm.dim, dil.povm.dim);
    for (const Mat& k : dil.k) {
        double a = operator_norm(id - k.adjoint() * k);
        double b = operator_norm(id - k * k.adjoint());
        worst = std::max(worst, std::sqrt(std::max(a, b)));
    }
    dil.epsilon = worst;
    return dil;
}

double roundtrip_GF(const SoftTorus& t, const Dilation& dil) {
    double worst = 0.0;
    for (int i = 0; i < t.d(); ++i) {
        Mat k = dil.k[static_cast<std::size_t>(i)];
        Mat u;
        try {
            u = linalg::polar(k);
        } catch (const rank_deficient&) {
            for (int attempt = 0;; ++attempt) {
                if (attempt == 64) throw;
                Mat nudged = k + 1e-6 * torus::z_direction(attempt) * Mat::Identity(k.rows(), k.cols());
                Eigen::JacobiSVD<Mat> svd(nudged);
                if (svd.singularValues()(k.rows() - 1) > 1e-8) {
                    u = linalg::polar(nudged);
                    break;
                }
            }
        }
        worst = std::max(worst, operator_norm(u - t.u[static_cast<std::size_t>(i)]));
    }
    return worst;
}

double roundtrip_GF(const SoftTorus& t, const PovmOptions& opts) {
    Dilation dil = map_F(t, opts);
    return roundtrip_GF(t, dil);
}

Mat first_moment(const Dilation& dil, int axis, bool y_axis) {
    double delta = dil.povm.delta;
    return dil.povm.weighted_sum([&](const Outcome& oc) {
        int idx = y_axis ? oc.n[static_cast<std::size_t>(axis)] : oc.m[static_cast<std::size_t>(axis)];
        return cxd(idx * delta, 0.0);
    });
}

Mat second_moment(const Dilation& dil, int axis, bool y_axis) {
    double delta = dil.povm.delta;
    return dil.povm.weighted_sum([&](const Outcome& oc) {
        int idx = y_axis ? oc.n[static_cast<std::size_t>(axis)] : oc.m[static_cast<std::size_t>(axis)];
        return cxd(idx * delta * idx * delta, 0.0);
    });
}

}  // namespace qmnum::povm
