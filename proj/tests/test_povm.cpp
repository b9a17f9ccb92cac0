#include <doctest.h>

#include <random>

#include "qmnum/linalg.hpp"
#include "qmnum/povm.hpp"

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

torus::SoftTorus clock_shift(int k) {
    torus::SoftTorus t;
    t.u = {clock_matrix(k), shift_matrix(k)};
    t.epsilon = std::abs(std::polar(1.0, 2 * kPi / k) - 1.0);
    return t;
}

// Commuting pair with spread spectra, for delta-override tests.
torus::SoftTorus commuting_pair(int dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Mat q = linalg::haar_unitary(dim, rng);
    torus::SoftTorus t;
    for (int i = 0; i < 2; ++i) {
        Vec z(dim);
        for (int j = 0; j < dim; ++j)
            z(j) = std::polar(1.0, 2 * kPi * ((j * (2 * i + 3)) % (dim + i)) / double(dim + i));
        t.u.push_back(q * z.asDiagonal() * q.adjoint());
    }
    t.epsilon = torus::commutator_epsilon(t);
    return t;
}

}  // namespace

TEST_CASE("window partition property") {
    for (povm::Window w : {povm::Window::Bump, povm::Window::Hann}) {
        for (double x = -1.0; x <= 1.0; x += 1.0 / 37) {
            double s = povm::window_value(w, x - 1) + povm::window_value(w, x) +
                       povm::window_value(w, x + 1);
            CHECK(s == doctest::Approx(1.0).epsilon(1e-13));
            CHECK(povm::window_value(w, x) >= 0.0);
        }
        CHECK(povm::window_value(w, 0.0) == doctest::Approx(1.0));
        CHECK(povm::window_value(w, 1.0) == 0.0);
        CHECK(std::sqrt(povm::window_value(w, 0.0)) == doctest::Approx(1.0));  // F^{1/2} at 0
    }
}

TEST_CASE("povm completeness and positivity") {
    torus::SoftTorus t = clock_shift(3);
    double delta = std::sqrt(2.0 * t.epsilon);
    for (povm::Window w : {povm::Window::Bump, povm::Window::Hann}) {
        povm::PovmSystem sys = povm::build_povm(t, delta, w);
        CHECK(sys.completeness_defect < 1e-10);
        for (Eigen::Index c = 0; c < sys.count(); ++c) {
            Mat e = sys.element(c);
            linalg::HermitianEig eig = linalg::hermitian_eig(e);
            CHECK(eig.eigenvalues(0) >= -1e-12);
            CHECK(operator_norm(e) <= 1.0 + 1e-10);
        }
    }
}

TEST_CASE("povm serial kernel matches the parallel kernel") {
    torus::SoftTorus t = clock_shift(4);
    povm::PovmSystem a = povm::build_povm(t, 0.9);
    povm::PovmSystem b = povm::build_povm_serial(t, 0.9);
    REQUIRE(a.count() == b.count());
    for (Eigen::Index c = 0; c < a.count(); ++c) {
        CHECK(a.outcomes[static_cast<std::size_t>(c)].m == b.outcomes[static_cast<std::size_t>(c)].m);
        CHECK((a.outcomes[static_cast<std::size_t>(c)].a - b.outcomes[static_cast<std::size_t>(c)].a)
                  .norm() == 0.0);
    }
}

TEST_CASE("single-axis diagonal torus gives commuting elements") {
    torus::SoftTorus t;
    t.u = {clock_matrix(5)};
    t.epsilon = 0.0;
    povm::PovmSystem sys = povm::build_povm(t, 0.8);
    CHECK(sys.completeness_defect < 1e-12);
    for (Eigen::Index c = 0; c < sys.count(); ++c)
        for (Eigen::Index c2 = c + 1; c2 < sys.count(); ++c2)
            CHECK(linalg::commutator_norm(sys.element(c), sys.element(c2)) < 1e-12);
}

TEST_CASE("window rejection") {
    torus::SoftTorus t = clock_shift(3);
    CHECK_THROWS_AS(povm::build_povm(t, 2.5), invalid_input);
    CHECK_THROWS_AS(povm::build_povm(t, 0.0), invalid_input);
}

TEST_CASE("naimark dilation of a scalar two-outcome povm") {
    const double e = 0.3;
    povm::PovmSystem sys;
    sys.d = 1;
    sys.dim = 1;
    sys.delta = 1.0;
    sys.index_bound = 0;
    sys.outcomes.push_back(povm::Outcome{{0}, {0}, Mat::Constant(1, 1, std::sqrt(e))});
    sys.outcomes.push_back(povm::Outcome{{0}, {0}, Mat::Constant(1, 1, std::sqrt(1 - e))});
    sys.completeness_defect = 0.0;

    povm::Dilation dil = povm::naimark_dilate(sys);
    Mat pi = dil.projector_dense();
    CHECK(pi.rows() == 2);
    CHECK(std::abs(pi.trace() - cxd(1, 0)) < 1e-12);  // rank 1
    Mat qsum = Mat::Zero(2, 2);
    for (Eigen::Index c = 0; c < 2; ++c) {
        Mat q = dil.outcome_projector_dense(c);
        qsum += q;
        Mat w = dil.isometry();
        Mat restricted = w.adjoint() * q * w;
        CHECK(operator_norm(restricted - sys.element(c)) < 1e-12);
        for (Eigen::Index c2 = c + 1; c2 < 2; ++c2)
            CHECK(operator_norm(q * dil.outcome_projector_dense(c2)) < 1e-15);
    }
    CHECK((qsum - Mat::Identity(2, 2)).norm() == 0.0);
}

TEST_CASE("dilation identity on a small torus") {
    torus::SoftTorus t = clock_shift(3);
    povm::Dilation dil = povm::map_F(t, {});
    Mat w = dil.isometry();
    CHECK(operator_norm(w.adjoint() * w - Mat::Identity(3, 3)) < 1e-12);

    Mat pi = dil.projector_dense();
    for (Eigen::Index c = 0; c < dil.povm.count(); ++c) {
        Mat q = dil.outcome_projector_dense(c);
        Mat restricted = w.adjoint() * (pi * q * pi) * w;
        CHECK(operator_norm(restricted - dil.povm.element(c)) < 1e-10);
    }
}

TEST_CASE("map_F invariants on the voiculescu pair") {
    torus::SoftTorus t = torus::voiculescu_pair(3);
    povm::Dilation dil = povm::map_F(t, {});
    CHECK(dil.povm.delta == doctest::Approx(std::sqrt(2.0 * t.epsilon)));
    CHECK(dil.povm.completeness_defect < 1e-10);

    // materialized U' are exactly commuting unitaries
    torus::LocalProjector lp = dil.materialize();
    for (const Mat& u : lp.u) CHECK(linalg::is_unitary(u, 1e-10));
    for (std::size_t i = 0; i < lp.u.size(); ++i)
        for (std::size_t j = i + 1; j < lp.u.size(); ++j)
            CHECK(linalg::commutator_norm(lp.u[i], lp.u[j]) < 1e-10);

    // compressed commutator identity agrees with the dense evaluation
    for (int axis = 0; axis < 2; ++axis) {
        double dense = dil.commutator_dense(axis);
        Mat k = dil.k[static_cast<std::size_t>(axis)];
        Mat id = Mat::Identity(t.dim(), t.dim());
        double compressed = std::sqrt(std::max(operator_norm(id - k.adjoint() * k),
                                               operator_norm(id - k * k.adjoint())));
        CHECK(std::abs(dense - compressed) < 1e-9);
    }
    CHECK(dil.epsilon <= 2.0);
}

TEST_CASE("first and second moments on a commuting pair") {
    torus::SoftTorus t = commuting_pair(6, 3);
    REQUIRE(t.epsilon < 1e-10);

    double prev_err1 = 1e9, prev_err2 = 1e9;
    for (double delta : {0.8, 0.4, 0.2}) {
        povm::PovmOptions opts;
        opts.delta_override = delta;
        povm::Dilation dil = povm::map_F(t, opts);
        Mat x0 = 0.5 * (t.u[0] + t.u[0].adjoint());
        double err1 = operator_norm(povm::first_moment(dil, 0, false) - x0);
        double err2 = operator_norm(povm::second_moment(dil, 0, false) - x0 * x0);
        CHECK(err1 <= delta + 1e-9);  // Pi X' Pi tracks X within O(Delta)
        CHECK(err1 < prev_err1 + 1e-12);
        CHECK(err2 < prev_err2 + 1e-12);
        prev_err1 = err1;
        prev_err2 = err2;
    }
}

TEST_CASE("roundtrip distance shrinks with delta on a commuting pair") {
    torus::SoftTorus t = commuting_pair(6, 5);
    double prev = 1e9;
    for (double delta : {0.8, 0.4, 0.2}) {
        povm::PovmOptions opts;
        opts.delta_override = delta;
        double dist = povm::roundtrip_GF(t, opts);
        CHECK(dist < prev + 1e-12);
        prev = dist;
    }
    CHECK(prev < 0.5);
}

TEST_CASE("pruned povm is renormalized to exact completeness") {
    torus::SoftTorus t = torus::voiculescu_pair(3);
    povm::PovmOptions opts;
    opts.prune_threshold = 1e-6;
    povm::Dilation dil = povm::map_F(t, opts);
    CHECK(dil.povm.completeness_defect < 1e-10);

    povm::Dilation full = povm::map_F(t, {});
    CHECK(dil.povm.count() <= full.povm.count());
    CHECK(std::abs(dil.epsilon - full.epsilon) < 0.05);
}

TEST_CASE("map_F regime errors") {
    torus::SoftTorus t = clock_shift(2);  // epsilon = 2, delta = 2 is out of regime
    CHECK_THROWS_AS(povm::map_F(t, {}), out_of_regime);

    torus::SoftTorus c = commuting_pair(4, 9);
    CHECK_THROWS_AS(povm::map_F(c, {}), invalid_input);  // epsilon 0 without override
}
