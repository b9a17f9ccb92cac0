#include "qmnum/walk.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <set>

#include "qmnum/parallel.hpp"

namespace qmnum::walk {

RMat RegularGraph::transition() const {
    RMat p = RMat::Zero(vertices, vertices);
    for (int v = 0; v < vertices; ++v)
        for (int w : adjacency[static_cast<std::size_t>(v)]) p(v, w) += 1.0 / degree;
    return p;
}

namespace {

bool connected(const std::vector<std::vector<int>>& adj) {
    const int n = static_cast<int>(adj.size());
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    int count = 1;
    while (!q.empty()) {
        int v = q.front();
        q.pop();
        for (int w : adj[static_cast<std::size_t>(v)])
            if (!seen[static_cast<std::size_t>(w)]) {
                seen[static_cast<std::size_t>(w)] = 1;
                ++count;
                q.push(w);
            }
    }
    return count == n;
}

}  // namespace

RegularGraph random_regular_graph(int vertices, int degree, std::uint64_t seed) {
    require(vertices >= 2 && degree >= 3, "random_regular_graph: need V >= 2, degree >= 3");
    require(degree < vertices, "random_regular_graph: degree must be < V");
    require((static_cast<std::int64_t>(vertices) * degree) % 2 == 0,
            "random_regular_graph: V * degree must be even");

    std::mt19937_64 rng(seed);
    std::vector<int> stubs(static_cast<std::size_t>(vertices) * degree);
    for (int v = 0; v < vertices; ++v)
        for (int j = 0; j < degree; ++j) stubs[static_cast<std::size_t>(v) * degree + j] = v;

    const int max_tries = 2000;
    for (int attempt = 0; attempt < max_tries; ++attempt) {
        std::shuffle(stubs.begin(), stubs.end(), rng);
        std::set<std::pair<int, int>> edges;
        bool ok = true;
        for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
            int a = stubs[i], b = stubs[i + 1];
            if (a == b) {
                ok = false;
                break;
            }
            auto e = std::minmax(a, b);
            if (!edges.emplace(e.first, e.second).second) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        std::vector<std::vector<int>> adj(static_cast<std::size_t>(vertices));
        for (const auto& [a, b] : edges) {
            adj[static_cast<std::size_t>(a)].push_back(b);
            adj[static_cast<std::size_t>(b)].push_back(a);
        }
        if (!connected(adj)) continue;
        for (auto& nb : adj) std::sort(nb.begin(), nb.end());
        return RegularGraph{vertices, degree, std::move(adj)};
    }
    throw generation_failure("random_regular_graph: retries exhausted");
}

int girth(const RegularGraph& g) {
    require(g.vertices > 0, "girth: empty graph");
    int best = std::numeric_limits<int>::max();
    std::vector<int> dist(static_cast<std::size_t>(g.vertices));
    std::vector<int> parent(static_cast<std::size_t>(g.vertices));
    for (int root = 0; root < g.vertices; ++root) {
        std::fill(dist.begin(), dist.end(), -1);
        std::fill(parent.begin(), parent.end(), -1);
        std::queue<int> q;
        q.push(root);
        dist[static_cast<std::size_t>(root)] = 0;
        while (!q.empty()) {
            int v = q.front();
            q.pop();
            if (2 * dist[static_cast<std::size_t>(v)] >= best) break;
            for (int w : g.adjacency[static_cast<std::size_t>(v)]) {
                if (dist[static_cast<std::size_t>(w)] < 0) {
                    dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(v)] + 1;
                    parent[static_cast<std::size_t>(w)] = v;
                    q.push(w);
                } else if (parent[static_cast<std::size_t>(v)] != w &&
                           parent[static_cast<std::size_t>(w)] != v) {
                    best = std::min(best, dist[static_cast<std::size_t>(v)] +
                                              dist[static_cast<std::size_t>(w)] + 1);
                }
            }
        }
    }
    return best;
}

double second_eigenvalue_modulus(const RegularGraph& g, double tol) {
    (void)tol;
    Eigen::SelfAdjointEigenSolver<RMat> es(g.transition(), Eigen::EigenvaluesOnly);
    const RVec& ev = es.eigenvalues();  // ascending; top is 1 for connected regular graphs
    const Eigen::Index n = ev.size();
    if (n < 2) return 0.0;
    return std::max(std::abs(ev(0)), std::abs(ev(n - 2)));
}

TwoTimeObservable random_pm_one(const RegularGraph& g, int tau, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> bit(0, 1);
    TwoTimeObservable obs;
    obs.tau = tau;
    obs.g.resize(static_cast<std::size_t>(g.vertices));
    for (double& v : obs.g) v = bit(rng) ? 1.0 : -1.0;
    return obs;
}

namespace {

RMat matrix_power_sparse(const RegularGraph& g, int tau) {
    const int n = g.vertices;
    RMat m = RMat::Identity(n, n);
    for (int t = 0; t < tau; ++t) {
        RMat next = RMat::Zero(n, n);
        for (int a = 0; a < n; ++a)
            for (int b : g.adjacency[static_cast<std::size_t>(a)])
                next.row(a) += m.row(b) / g.degree;
        m = std::move(next);
    }
    return m;
}

}  // namespace

double conditional_mean(const RegularGraph& g, const std::vector<double>& gfun, int v, int w,
                        int tau) {
    require(tau >= 0, "conditional_mean: tau >= 0 required");
    require(v >= 0 && v < g.vertices && w >= 0 && w < g.vertices,
            "conditional_mean: vertex out of range");
    require(static_cast<int>(gfun.size()) == g.vertices, "conditional_mean: bad g");
    if (tau == 0) {
        require(v == w, "conditional_mean: unreachable pair at 2 tau = 0");
        return gfun[static_cast<std::size_t>(v)];
    }
    const int n = g.vertices;
    // Row v and column w of P^tau via repeated sparse applications.
    RVec row = RVec::Zero(n), col = RVec::Zero(n);
    row(v) = 1.0;
    col(w) = 1.0;
    for (int t = 0; t < tau; ++t) {
        RVec rnew = RVec::Zero(n), cnew = RVec::Zero(n);
        for (int a = 0; a < n; ++a)
            for (int b : g.adjacency[static_cast<std::size_t>(a)]) {
                rnew(b) += row(a) / g.degree;
                cnew(a) += col(b) / g.degree;
            }
        row = std::move(rnew);
        col = std::move(cnew);
    }
    double num = 0.0, den = 0.0;
    for (int u = 0; u < n; ++u) {
        num += row(u) * gfun[static_cast<std::size_t>(u)] * col(u);
        den += row(u) * col(u);
    }
    if (den <= 0.0) throw invalid_input("conditional_mean: unreachable pair at 2 tau");
    return num / den;
}

namespace {

TwoTimeResult two_time_impl(const RegularGraph& g, const TwoTimeObservable& obs, bool parallel) {
    require(obs.tau >= 0, "two_time_correlation: tau >= 0 required");
    require(static_cast<int>(obs.g.size()) == g.vertices, "two_time_correlation: bad g");
    const int n = g.vertices;

    RMat ptau = matrix_power_sparse(g, obs.tau);
    RVec gv(n);
    for (int i = 0; i < n; ++i) gv(i) = obs.g[static_cast<std::size_t>(i)];
    RMat weighted = ptau * gv.asDiagonal() * ptau;  // sum_u P^t(v,u) g(u) P^t(u,w)
    RMat p2 = ptau * ptau;

    struct Partial {
        double fg = 0.0, f = 0.0;
        std::int64_t ties = 0;
    };
    std::vector<Partial> partial(static_cast<std::size_t>(n));
    auto body = [&](std::int64_t v) {
        Partial acc;
        for (int w = 0; w < n; ++w) {
            double m = weighted(v, w);
            double f = m >= 0.0 ? 1.0 : -1.0;  // exact zero maps to +1
            if (m == 0.0) ++acc.ties;
            acc.fg += f * m;
            acc.f += f * p2(v, w);
        }
        partial[static_cast<std::size_t>(v)] = acc;
        return 0;
    };
    if (parallel)
        par::for_each_index(n, [&](std::int64_t v) { body(v); });
    else
        par::for_each_index_serial(n, [&](std::int64_t v) { body(v); });

    TwoTimeResult res;
    double fg = 0.0, f = 0.0;
    for (int v = 0; v < n; ++v) {
        fg += partial[static_cast<std::size_t>(v)].fg;
        f += partial[static_cast<std::size_t>(v)].f;
        res.tie_count += partial[static_cast<std::size_t>(v)].ties;
    }
    fg /= n;
    f /= n;
    res.mean_f = f;
    res.mean_g = gv.mean();
    res.correlation = fg - f * res.mean_g;
    return res;
}

}  // namespace

TwoTimeResult two_time_correlation(const RegularGraph& g, const TwoTimeObservable& obs,
                                   bool parallel) {
    return two_time_impl(g, obs, parallel);
}

TwoTimeResult two_time_correlation_serial(const RegularGraph& g, const TwoTimeObservable& obs) {
    return two_time_impl(g, obs, false);
}

double two_time_correlation_with_f(const RegularGraph& g, const std::vector<double>& gfun,
                                   const RMat& f, int tau) {
    require(tau >= 0, "two_time_correlation_with_f: tau >= 0 required");
    const int n = g.vertices;
    require(f.rows() == n && f.cols() == n, "two_time_correlation_with_f: bad f");
    RMat ptau = matrix_power_sparse(g, tau);
    RVec gv(n);
    for (int i = 0; i < n; ++i) gv(i) = gfun[static_cast<std::size_t>(i)];
    RMat weighted = ptau * gv.asDiagonal() * ptau;
    RMat p2 = ptau * ptau;
    double fg = 0.0, fm = 0.0;
    for (int v = 0; v < n; ++v)
        for (int w = 0; w < n; ++w) {
            fg += f(v, w) * weighted(v, w);
            fm += f(v, w) * p2(v, w);
        }
    fg /= n;
    fm /= n;
    return fg - fm * gv.mean();
}

double fit_loglog_exponent(const std::vector<double>& taus, const std::vector<double>& corrs) {
    require(taus.size() == corrs.size() && taus.size() >= 2, "fit_loglog_exponent: need >= 2 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < taus.size(); ++i) {
        if (corrs[i] <= 0) continue;
        double x = std::log(taus[i]), y = std::log(corrs[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    require(n >= 2, "fit_loglog_exponent: not enough positive points");
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace qmnum::walk
