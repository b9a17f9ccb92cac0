#include <doctest.h>

#include <random>

#include "qmnum/linalg.hpp"
#include "qmnum/serialize.hpp"

using namespace qmnum;
using linalg::operator_norm;

TEST_CASE("operator_norm basics") {
    CHECK(operator_norm(Mat::Identity(3, 3)) == doctest::Approx(1.0).epsilon(1e-12));

    Mat m = Mat::Zero(2, 2);
    m(0, 1) = 2.0;
    // singular values of [[0,2],[0,0]] by hand: sqrt(eig of M M^dag) = {2, 0}
    CHECK(operator_norm(m) == doctest::Approx(2.0).epsilon(1e-12));

    CHECK_THROWS_AS(operator_norm(Mat()), invalid_input);

    Mat bad = Mat::Zero(2, 2);
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(operator_norm(bad), invalid_input);
}

TEST_CASE("operator_norm is submultiplicative on random pairs") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 8; ++trial) {
        Mat a = linalg::ginibre(5, 5, rng);
        Mat b = linalg::ginibre(5, 5, rng);
        CHECK(operator_norm(a * b) <= operator_norm(a) * operator_norm(b) + 1e-10);
    }
}

TEST_CASE("polar of a unitary is the unitary") {
    Mat u = linalg::haar_unitary(5, 7);
    CHECK(operator_norm(linalg::polar(u) - u) < 1e-12);
}

TEST_CASE("polar of positive diagonal is the identity") {
    Mat d = Mat::Zero(2, 2);
    d(0, 0) = 3.0;
    d(1, 1) = 0.5;
    CHECK(operator_norm(linalg::polar(d) - Mat::Identity(2, 2)) < 1e-12);
}

TEST_CASE("polar against an explicit SVD oracle") {
    Mat x = Mat::Zero(2, 2);
    x(0, 1) = 2.0;
    x(1, 0) = 1.0;
    Mat want = Mat::Zero(2, 2);
    want(0, 1) = 1.0;
    want(1, 0) = 1.0;
    CHECK(operator_norm(linalg::polar(x) - want) < 1e-12);
}

TEST_CASE("polar rejects singular input and is idempotent") {
    Mat x = Mat::Zero(2, 2);
    x(0, 0) = 1.0;
    CHECK_THROWS_AS(linalg::polar(x), rank_deficient);

    std::mt19937_64 rng(3);
    Mat y = linalg::ginibre(4, 4, rng) + 3.0 * Mat::Identity(4, 4);
    Mat p1 = linalg::polar(y);
    CHECK(operator_norm(linalg::polar(p1) - p1) < 1e-10);
    CHECK(linalg::is_unitary(p1, 1e-10));
}

TEST_CASE("polar contraction property ||polar(X)-X|| <= delta") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 6; ++trial) {
        Mat u = linalg::haar_unitary(6, rng);
        Mat x = u + 0.05 * linalg::ginibre(6, 6, rng);
        double delta = operator_norm(x.adjoint() * x - Mat::Identity(6, 6));
        if (delta > 0.6) continue;
        CHECK(operator_norm(linalg::polar(x) - x) <= delta + 1e-10);
    }
}

TEST_CASE("hermitian_function") {
    std::mt19937_64 rng(5);
    Mat h = linalg::random_hermitian(5, rng);
    CHECK(operator_norm(linalg::hermitian_function([](double x) { return x; }, h) - h) < 1e-10);

    Mat d = Mat::Zero(2, 2);
    d(0, 0) = 1.0;
    d(1, 1) = 2.0;
    Mat d2 = linalg::hermitian_function([](double x) { return x * x; }, d);
    CHECK(std::abs(d2(0, 0) - cxd(1, 0)) < 1e-12);
    CHECK(std::abs(d2(1, 1) - cxd(4, 0)) < 1e-12);

    Mat g = linalg::ginibre(3, 3, rng);
    CHECK_THROWS_AS(linalg::hermitian_function([](double x) { return x; }, g), invalid_input);

    // indicator functions produce projectors
    Mat p = linalg::hermitian_function([](double x) { return x > 0.5 ? 1.0 : 0.0; }, h);
    CHECK(operator_norm(p * p - p) < 2e-10);
}

TEST_CASE("joint_diagonalize on commuting unitaries") {
    SUBCASE("single diagonal unitary") {
        Mat u = Mat::Zero(3, 3);
        u(0, 0) = 1.0;
        u(1, 1) = std::polar(1.0, 1.0);
        u(2, 2) = std::polar(1.0, 2.0);
        linalg::JointEigenbasis jb = linalg::joint_diagonalize({u});
        CHECK(jb.residual < 1e-10);
        Mat r = jb.basis.adjoint() * u * jb.basis;
        Mat off = r;
        off.diagonal().setZero();
        CHECK(off.norm() < 1e-10);
    }

    SUBCASE("clock matrix and its square") {
        cxd w = std::polar(1.0, 2 * kPi / 3);
        Mat u = Mat::Zero(3, 3);
        u(0, 0) = 1.0;
        u(1, 1) = w;
        u(2, 2) = w * w;
        linalg::JointEigenbasis jb = linalg::joint_diagonalize({u, (u * u).eval()});
        CHECK(jb.residual < 1e-10);
    }

    SUBCASE("cyclic shift diagonalizes to Fourier phases") {
        const int n = 5;
        Mat s = Mat::Zero(n, n);
        for (int i = 0; i < n; ++i) s((i + 1) % n, i) = 1.0;
        linalg::JointEigenbasis jb = linalg::joint_diagonalize({s, Mat::Identity(n, n)});
        CHECK(jb.residual < 1e-9);
        // DFT oracle: the phase multiset is {2 pi j / n}, compared on the circle
        std::vector<double> got = jb.phases[0];
        std::sort(got.begin(), got.end());
        double worst = 1.0;
        for (int rot = 0; rot < n; ++rot) {
            double w = 0.0;
            for (int j = 0; j < n; ++j) {
                double diff = std::abs(got[static_cast<std::size_t>((j + rot) % n)] -
                                       2 * kPi * j / n);
                w = std::max(w, std::min(diff, 2 * kPi - diff));
            }
            worst = std::min(worst, w);
        }
        CHECK(worst < 1e-8);
    }

    SUBCASE("round trip reproduces inputs") {
        std::mt19937_64 rng(9);
        Mat q = linalg::haar_unitary(6, rng);
        std::vector<Mat> us;
        for (int i = 0; i < 2; ++i) {
            Vec d(6);
            for (int j = 0; j < 6; ++j) d(j) = std::polar(1.0, 0.7 * i + 0.9 * j);
            us.push_back(q * d.asDiagonal() * q.adjoint());
        }
        linalg::JointEigenbasis jb = linalg::joint_diagonalize(us);
        for (std::size_t i = 0; i < us.size(); ++i) {
            Vec d(6);
            for (int j = 0; j < 6; ++j) d(j) = std::polar(1.0, jb.phases[i][static_cast<std::size_t>(j)]);
            Mat rec = jb.basis * d.asDiagonal() * jb.basis.adjoint();
            CHECK(operator_norm(rec - us[i]) < 1e-8 + 10 * jb.residual);
        }
    }

    SUBCASE("rejects non-commuting input") {
        std::mt19937_64 rng(13);
        Mat a = linalg::haar_unitary(4, rng), b = linalg::haar_unitary(4, rng);
        CHECK_THROWS_AS(linalg::joint_diagonalize({a, b}), not_commuting);
    }
}

TEST_CASE("haar_unitary") {
    Mat u = linalg::haar_unitary(4, 123);
    CHECK(operator_norm(u * u.adjoint() - Mat::Identity(4, 4)) < 1e-12);
    Mat u2 = linalg::haar_unitary(4, 123);
    CHECK((u - u2).norm() == 0.0);  // determinism

    // Haar moment oracle: E |tr U|^2 = 1
    std::mt19937_64 rng(77);
    double acc = 0.0;
    const int samples = 10000;
    for (int i = 0; i < samples; ++i) acc += std::norm(linalg::haar_unitary(4, rng).trace());
    CHECK(acc / samples == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("matrix json round trip is bit stable") {
    std::mt19937_64 rng(21);
    Mat m = linalg::ginibre(3, 2, rng);
    m(0, 0) = cxd(0.1 + 1e-17, -3.0 / 7.0);
    std::string text = io::matrix_to_json(m).dump();
    Mat back = io::matrix_from_json(nlohmann::json::parse(text));
    REQUIRE(back.rows() == m.rows());
    REQUIRE(back.cols() == m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            CHECK(std::memcmp(&m(i, j), &back(i, j), sizeof(cxd)) == 0);
        }
}
