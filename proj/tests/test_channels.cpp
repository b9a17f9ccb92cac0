#include <doctest.h>

#include <random>
#include <set>

#include "qmnum/channels.hpp"
#include "qmnum/linalg.hpp"

using namespace qmnum;
using namespace qmnum::channels;

namespace {

// Brute-force monotone count over all 2^(2^n) tables (oracle for n <= 4).
std::int64_t brute_force_monotone_count(int n) {
    const std::uint32_t size = 1u << n;
    std::int64_t count = 0;
    for (std::uint64_t mask = 0; mask < (1ull << size); ++mask) {
        BooleanFn f;
        f.n = n;
        f.table.assign(size, 0);
        for (std::uint32_t s = 0; s < size; ++s) f.table[s] = (mask >> s) & 1;
        if (is_monotone(f)) ++count;
    }
    return count;
}

MonotoneBooleanFn majority3() {
    MonotoneBooleanFn f;
    f.n = 3;
    f.table.assign(8, 0);
    for (std::uint32_t s = 0; s < 8; ++s) f.table[s] = std::popcount(s) >= 2 ? 1 : 0;
    return f;
}

MonotoneBooleanFn dictator(int n) {
    MonotoneBooleanFn f;
    f.n = n;
    f.table.assign(std::size_t(1) << n, 0);
    for (std::uint32_t s = 0; s < (1u << n); ++s) f.table[s] = s & 1;
    return f;
}

}  // namespace

TEST_CASE("erasure channel") {
    Mat rho = Mat::Zero(2, 2);
    rho(0, 0) = 0.25;
    rho(1, 1) = 0.75;
    rho(0, 1) = cxd(0.1, 0.2);
    rho(1, 0) = cxd(0.1, -0.2);

    Mat full = erasure_apply({1.0}, rho);
    CHECK(linalg::operator_norm(full.topLeftCorner(2, 2) - rho) < 1e-15);
    CHECK(std::abs(full(2, 2)) < 1e-15);

    Mat none = erasure_apply({0.0}, rho);
    CHECK(std::abs(none(2, 2) - cxd(1, 0)) < 1e-15);
    CHECK(linalg::operator_norm(none.topLeftCorner(2, 2)) < 1e-15);

    Mat half = erasure_apply({0.37}, rho);
    CHECK(std::abs(half.trace() - cxd(1, 0)) < 1e-15);

    Mat bad = rho;
    bad(0, 0) = -0.5;
    CHECK_THROWS_AS(erasure_apply({0.5}, bad), invalid_input);
}

TEST_CASE("reliability polynomial") {
    ReliabilityPoly dict = reliability_poly(dictator(3));
    for (double p : {0.1, 0.4, 0.9}) CHECK(dict.value(p) == doctest::Approx(p).epsilon(1e-12));

    ReliabilityPoly maj = reliability_poly(majority3());
    for (double p : {0.2, 0.5, 0.6}) {
        double want = 3 * p * p - 2 * p * p * p;
        CHECK(maj.value(p) == doctest::Approx(want).epsilon(1e-12));
        CHECK(maj.derivative(p) == doctest::Approx(6 * p - 6 * p * p).epsilon(1e-10));
    }
    // monomial expansion: 3 p^2 - 2 p^3
    CHECK(maj.monomial[0] == doctest::Approx(0.0));
    CHECK(maj.monomial[1] == doctest::Approx(0.0));
    CHECK(maj.monomial[2] == doctest::Approx(3.0));
    CHECK(maj.monomial[3] == doctest::Approx(-2.0));

    MonotoneBooleanFn ones;
    ones.n = 2;
    ones.table.assign(4, 1);
    ReliabilityPoly all = reliability_poly(ones);
    CHECK(all.value(0.3) == doctest::Approx(1.0).epsilon(1e-12));

    // degree <= n and endpoint values
    CHECK(maj.value(0.0) == doctest::Approx(0.0));
    CHECK(maj.value(1.0) == doctest::Approx(1.0));
}

TEST_CASE("dedekind counts") {
    CHECK(count_monotone(2) == 6);
    CHECK(count_monotone(3) == 20);
    CHECK(count_monotone(4) == 168);
    CHECK(brute_force_monotone_count(2) == 6);
    CHECK(brute_force_monotone_count(3) == 20);
    CHECK(brute_force_monotone_count(4) == 168);

    // every streamed function is monotone and distinct
    std::set<std::vector<char>> seen;
    enumerate_monotone(3, [&](const MonotoneBooleanFn& f) {
        CHECK(is_monotone(f));
        CHECK(seen.insert(f.table).second);
    });
}

TEST_CASE("monotonize") {
    BooleanFn f;
    f.n = 2;
    f.table = {0, 1, 0, 0};  // s1 and not s2
    MonotoneBooleanFn m = monotonize(f);
    CHECK(m.table == std::vector<char>{0, 1, 0, 1});  // equals s1

    MonotoneBooleanFn maj = majority3();
    MonotoneBooleanFn m2 = monotonize(maj);
    CHECK(m2.table == maj.table);

    BooleanFn zero;
    zero.n = 3;
    zero.table.assign(8, 0);
    CHECK(monotonize(zero).table == zero.table);

    // minimality against brute force for n = 3
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        BooleanFn g;
        g.n = 3;
        g.table.assign(8, 0);
        for (auto& b : g.table) b = (rng() & 1);
        MonotoneBooleanFn mg = monotonize(g);
        CHECK(is_monotone(mg));
        for (std::uint32_t s = 0; s < 8; ++s) CHECK(mg.table[s] >= g.table[s]);
        enumerate_monotone(3, [&](const MonotoneBooleanFn& h) {
            bool geq = true;
            for (std::uint32_t s = 0; s < 8; ++s)
                if (h.table[s] < g.table[s]) geq = false;
            if (!geq) return;
            for (std::uint32_t s = 0; s < 8; ++s) CHECK(h.table[s] >= mg.table[s]);
        });
    }
}

TEST_CASE("matthew principle checks") {
    std::vector<double> grid = default_p_grid();

    SUBCASE("dictator sits at equality") {
        MatthewReport rep = matthew_check(dictator(3), grid);
        CHECK(!rep.constant);
        CHECK(rep.passed);
        CHECK(rep.min_ratio == doctest::Approx(1.0).epsilon(1e-9));  // g = p/(1-p) exactly
    }

    SUBCASE("majority at p = 1/2 has margin 0.5") {
        ReliabilityPoly maj = reliability_poly(majority3());
        double p = 0.5;
        double lhs = p * (1 - p) * maj.derivative(p);
        double rhs = maj.value(p) * (1 - maj.value(p));
        CHECK(lhs / rhs == doctest::Approx(1.5).epsilon(1e-12));
        MatthewReport rep = matthew_check(majority3(), grid);
        CHECK(rep.passed);
        CHECK(rep.corollary_passed);
    }

    SUBCASE("majority values from the closed form") {
        ReliabilityPoly maj = reliability_poly(majority3());
        CHECK(maj.value(0.6) == doctest::Approx(0.648).epsilon(1e-12));
        CHECK(maj.value(0.6) + maj.value(0.4) == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("constants are skipped") {
        MonotoneBooleanFn zero;
        zero.n = 2;
        zero.table.assign(4, 0);
        CHECK(matthew_check(zero, grid).constant);
    }

    SUBCASE("exhaustive n = 3") {
        enumerate_monotone(3, [&](const MonotoneBooleanFn& f) {
            MatthewReport rep = matthew_check(f, grid);
            if (!rep.constant) {
                CHECK(rep.passed);
                CHECK(rep.corollary_passed);
            }
        });
    }
}

TEST_CASE("complement pair check") {
    std::vector<double> grid = default_p_grid();

    ComplementPairReport dict = complement_pair_check(dictator(2), grid);
    CHECK(!dict.has_complementary_pair);
    CHECK(std::abs(dict.max_sum_minus_one) < 1e-12);  // f(p)+f(1-p) = 1
    CHECK(dict.sum_bound_passed);

    ComplementPairReport maj = complement_pair_check(majority3(), grid);
    CHECK(!maj.has_complementary_pair);
    CHECK(std::abs(maj.max_sum_minus_one) < 1e-12);

    MonotoneBooleanFn orfn;
    orfn.n = 2;
    orfn.table = {0, 1, 1, 1};
    ComplementPairReport rep = complement_pair_check(orfn, grid);
    CHECK(rep.has_complementary_pair);
    CHECK(rep.max_sum_minus_one > 0.4);  // f(1/2)+f(1/2) = 1.5
}

TEST_CASE("mistake rates") {
    MistakeRates ident = mistake_rates(identity_decode());
    CHECK(std::abs(ident.average) < 1e-12);
    CHECK(std::abs(ident.maximum) < 1e-9);

    MistakeRates mixed = mistake_rates(depolarize_to_mixed());
    CHECK(mixed.average == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(mixed.maximum == doctest::Approx(0.5).epsilon(1e-9));

    SUBCASE("closed form matches the quadrature oracle") {
        for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
            QubitDecodeChannel ch = random_decode(seed, 2);
            MistakeRates mr = mistake_rates(ch);
            double quad = average_mistake_quadrature(ch);
            CHECK(std::abs(mr.average - quad) < 1e-4);
        }
    }

    SUBCASE("relation E_av <= E_max <= 4 E_av on random channels") {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            QubitDecodeChannel ch = random_decode(seed, 1 + static_cast<int>(seed % 3));
            MistakeRates mr = mistake_rates(ch);
            CHECK(mr.average <= mr.maximum + 1e-9);
            CHECK(mr.maximum <= 4 * mr.average + 1e-9);
        }
    }

    SUBCASE("refinement never decreases the maximum estimate") {
        QubitDecodeChannel ch = random_decode(11, 2);
        double prev = 0.0;
        for (int refinements = 0; refinements <= 3; ++refinements) {
            MistakeRates mr = mistake_rates(ch, 40, refinements);
            CHECK(mr.maximum >= prev - 1e-15);
            prev = mr.maximum;
        }
    }
}
