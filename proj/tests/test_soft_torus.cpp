#include <doctest.h>

#include <random>

#include "qmnum/linalg.hpp"
#include "qmnum/soft_torus.hpp"

using namespace qmnum;
using linalg::operator_norm;

namespace {

Mat clock_matrix(int k) {
    Mat c = Mat::Zero(k, k);
    for (int j = 0; j < k; ++j) c(j, j) = std::polar(1.0, 2 * kPi * j / k);
    return c;
}

Mat shift_matrix(int k) {
    Mat s = Mat::Zero(k, k);
    for (int j = 0; j < k; ++j) s((j + 1) % k, j) = 1.0;
    return s;
}

// Commuting unitaries plus a projector rotated by a small random conjugation,
// scaled so the measured locality lands near the requested delta.
torus::LocalProjector random_local_projector(int dim, int d, double target_delta,
                                             std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Mat q = linalg::haar_unitary(dim, rng);
    torus::LocalProjector lp;
    for (int i = 0; i < d; ++i) {
        Vec z(dim);
        for (int j = 0; j < dim; ++j) z(j) = std::polar(1.0, 2 * kPi * ((j * (i + 2)) % dim) / dim);
        lp.u.push_back(q * z.asDiagonal() * q.adjoint());
    }
    Mat p0 = Mat::Zero(dim, dim);
    for (int j = 0; j < dim / 2; ++j) p0 += q.col(j) * q.col(j).adjoint();
    Mat a = linalg::random_hermitian(dim, rng);

    double eta = 0.05;
    for (int it = 0; it < 40; ++it) {
        Vec ph(dim);
        linalg::HermitianEig ea = linalg::hermitian_eig(a);
        for (int j = 0; j < dim; ++j) ph(j) = std::polar(1.0, eta * ea.eigenvalues(j));
        Mat rot = ea.eigenvectors * ph.asDiagonal() * ea.eigenvectors.adjoint();
        lp.p = rot * p0 * rot.adjoint();
        lp.epsilon = torus::locality_epsilon(lp);
        if (std::abs(lp.epsilon - target_delta) < 0.02 * target_delta) break;
        if (lp.epsilon <= 0) break;
        eta *= target_delta / lp.epsilon;
    }
    return lp;
}

}  // namespace

TEST_CASE("voiculescu pair identities") {
    for (int n : {2, 3, 4, 5}) {
        torus::SoftTorus t = torus::voiculescu_pair(n);
        const Eigen::Index dim = n * n;
        cxd omega = std::polar(1.0, 2 * kPi / double(dim));

        torus::validate(t);
        Mat braid = t.u[1].adjoint() * t.u[0].adjoint() * t.u[1] * t.u[0];
        CHECK(operator_norm(braid - omega * Mat::Identity(dim, dim)) < 1e-12);

        for (const Mat& u : t.u) {
            linalg::UnitaryEig eig = linalg::unitary_eig(u);
            std::vector<double> ph;
            for (Eigen::Index j = 0; j < dim; ++j) {
                double a = std::arg(eig.eigenvalues(j));
                ph.push_back(a < 0 ? a + 2 * kPi : a);
            }
            std::sort(ph.begin(), ph.end());
            for (Eigen::Index j = 0; j < dim; ++j) {
                cxd got = std::polar(1.0, ph[static_cast<std::size_t>(j)]);
                cxd want = std::polar(1.0, 2 * kPi * double(j) / double(dim));
                CHECK(std::abs(got - want) < 1e-8);
            }
        }
    }
    CHECK_THROWS_AS(torus::voiculescu_pair(1), invalid_input);
}

TEST_CASE("voiculescu commutator closed form") {
    torus::SoftTorus t3 = torus::voiculescu_pair(3);
    CHECK(torus::commutator_epsilon(t3) == doctest::Approx(0.6840402866513374).epsilon(1e-9));
    torus::SoftTorus t4 = torus::voiculescu_pair(4);
    CHECK(torus::commutator_epsilon(t4) ==
          doctest::Approx(std::abs(std::polar(1.0, kPi / 8) - 1.0)).epsilon(1e-10));
    CHECK(torus::commutator_epsilon(t4) == doctest::Approx(0.3901806440322565).epsilon(1e-9));
}

TEST_CASE("plaquette phases") {
    for (int n : {2, 3, 5}) {
        std::vector<cxd> ph = torus::plaquette_phases(n);
        cxd want = std::polar(1.0, 2 * kPi / (double(n) * n));
        REQUIRE(static_cast<int>(ph.size()) == n * n);
        cxd prod(1, 0);
        for (cxd p : ph) {
            CHECK(std::abs(p - want) < 1e-12);
            prod *= p;
        }
        CHECK(std::abs(prod - cxd(1, 0)) < 1e-10);  // total flux quantization
    }
    CHECK(std::abs(torus::plaquette_phase(2) - cxd(0, 1)) < 1e-12);
}

TEST_CASE("commutator_epsilon on standard pairs") {
    torus::SoftTorus diag;
    diag.u = {clock_matrix(4), (clock_matrix(4) * clock_matrix(4)).eval()};
    diag.epsilon = 0;
    CHECK(torus::commutator_epsilon(diag) < 1e-14);

    for (int k : {3, 5, 8}) {
        torus::SoftTorus cs;
        cs.u = {clock_matrix(k), shift_matrix(k)};
        cs.epsilon = 2.0;
        CHECK(torus::commutator_epsilon(cs) ==
              doctest::Approx(std::abs(std::polar(1.0, 2 * kPi / k) - 1.0)).epsilon(1e-10));
    }
}

TEST_CASE("map_G") {
    SUBCASE("P = I returns the original unitaries exactly") {
        torus::SoftTorus t = torus::voiculescu_pair(3);
        torus::LocalProjector lp;
        lp.u = {clock_matrix(9), (clock_matrix(9) * clock_matrix(9)).eval()};
        lp.p = Mat::Identity(9, 9);
        lp.epsilon = 0;
        torus::MapGResult g = torus::map_G(lp);
        CHECK((g.torus.u[0] - lp.u[0]).norm() == 0.0);
        CHECK((g.torus.u[1] - lp.u[1]).norm() == 0.0);
    }

    SUBCASE("trivial local projector gives a 0-soft torus") {
        const int dim = 8;
        torus::LocalProjector lp;
        lp.u = {clock_matrix(dim), (clock_matrix(dim) * clock_matrix(dim)).eval()};
        Mat p = Mat::Zero(dim, dim);
        for (int j = 0; j < 4; ++j) p(j, j) = 1.0;
        lp.p = p;
        lp.epsilon = 0;
        torus::MapGResult g = torus::map_G(lp);
        CHECK(g.torus.dim() == 4);
        CHECK(g.torus.epsilon < 1e-12);
        for (const Mat& u : g.torus.u) CHECK(linalg::is_unitary(u, 1e-10));
    }

    SUBCASE("lemma bound 4 delta^2 on randomized instances") {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            torus::LocalProjector lp = random_local_projector(12, 2, 0.1, seed);
            REQUIRE(lp.epsilon > 0.01);
            REQUIRE(lp.epsilon <= 0.6);
            torus::MapGResult g = torus::map_G(lp);
            CHECK(g.torus.epsilon <= 4 * lp.epsilon * lp.epsilon + 1e-10);
        }
    }

    SUBCASE("rejects epsilon above the lemma hypothesis") {
        torus::LocalProjector lp = random_local_projector(8, 2, 0.1, 3);
        lp.epsilon = 0.7;
        CHECK_THROWS_AS(torus::map_G(lp), invalid_input);
    }
}

TEST_CASE("direct sums and complement") {
    torus::SoftTorus a = torus::voiculescu_pair(2);
    torus::SoftTorus b;
    b.u = {clock_matrix(3), clock_matrix(3)};
    b.epsilon = 0;

    torus::SoftTorus s = torus::direct_sum(a, b);
    CHECK(s.dim() == a.dim() + 3);
    CHECK(s.epsilon == a.epsilon);  // sum with a trivial torus preserves epsilon
    CHECK(torus::commutator_epsilon(s) <= s.epsilon + 1e-12);

    torus::LocalProjector lp;
    lp.u = {clock_matrix(4), clock_matrix(4)};
    Mat p = Mat::Zero(4, 4);
    p(0, 0) = 1;
    lp.p = p;
    lp.epsilon = 0.25;  // loose certificate
    torus::LocalProjector lc = torus::complement(lp);
    CHECK(lc.epsilon == lp.epsilon);
    CHECK(operator_norm(lc.p - (Mat::Identity(4, 4) - p)) < 1e-15);
}

TEST_CASE("distance upper bound") {
    torus::SoftTorus a = torus::voiculescu_pair(3);
    CHECK(torus::distance_upper(a, a) < 1e-12);

    std::mt19937_64 rng(51);
    Mat y = linalg::haar_unitary(9, rng);
    torus::SoftTorus b;
    for (const Mat& u : a.u) b.u.push_back(y.adjoint() * u * y);
    b.epsilon = a.epsilon;
    CHECK(torus::distance_upper(a, b) < 1e-8);

    // with Y = identity in the family, the bound never exceeds max ||U_i - V_i||
    double raw = 0.0;
    for (int i = 0; i < 2; ++i) raw = std::max(raw, operator_norm(a.u[i] - b.u[i]));
    CHECK(torus::distance_upper(a, b) <= raw + 1e-12);
}

TEST_CASE("serialization round trip") {
    torus::SoftTorus t = torus::voiculescu_pair(2);
    torus::SoftTorus t2 = torus::soft_torus_from_json(torus::to_json(t));
    CHECK(t2.d() == 2);
    for (int i = 0; i < 2; ++i) CHECK((t.u[i] - t2.u[i]).norm() == 0.0);
    CHECK(t2.epsilon == t.epsilon);

    torus::LocalProjector lp;
    lp.u = {clock_matrix(3)};
    lp.p = Mat::Identity(3, 3);
    lp.epsilon = 0.0;
    torus::LocalProjector lp2 = torus::local_projector_from_json(torus::to_json(lp));
    CHECK((lp2.p - lp.p).norm() == 0.0);
}

TEST_CASE("certificates never understate") {
    torus::SoftTorus t = torus::voiculescu_pair(4);
    CHECK(torus::commutator_epsilon(t) <= t.epsilon + 1e-10);
    t.epsilon = 0.1;  // deliberately wrong
    CHECK_THROWS_AS(torus::validate(t), invariant_violation);
}
