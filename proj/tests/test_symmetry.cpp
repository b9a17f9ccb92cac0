#include <doctest.h>

#include <unsupported/Eigen/KroneckerProduct>
#include <random>

#include "qmnum/bundle.hpp"
#include "qmnum/linalg.hpp"
#include "qmnum/povm.hpp"
#include "qmnum/symmetry.hpp"

using namespace qmnum;
using linalg::operator_norm;
using symmetry::SymClass;

TEST_CASE("symmetry_check") {
    std::mt19937_64 rng(3);
    Mat a = linalg::random_hermitian(4, rng);
    Mat sym = 0.5 * (a + a.transpose());
    CHECK(symmetry::symmetry_check(sym.real().cast<cxd>().eval(), SymClass::Symmetric) < 1e-14);

    // 2x2 self-dual unitaries under U = -Z U^T Z are the scalars (Kramers);
    // Z itself is anti-self-dual with defect 2.
    Mat z2 = symmetry::standard_z(2);
    CHECK(symmetry::symmetry_check(z2, SymClass::SelfDual) == doctest::Approx(2.0));
    Mat scalar = std::polar(1.0, 0.7) * Mat::Identity(2, 2);
    CHECK(symmetry::symmetry_check(scalar, SymClass::SelfDual) < 1e-14);
    Mat h4 = Mat::Zero(4, 4);
    h4 << cxd(0.3, 0), cxd(0.1, 0.2), cxd(0, 0), cxd(0, 0.4),
          cxd(0.1, -0.2), cxd(-0.5, 0), cxd(0, -0.4), cxd(0, 0),
          cxd(0, 0), cxd(0, 0.4), cxd(0.3, 0), cxd(0.1, -0.2),
          cxd(0, -0.4), cxd(0, 0), cxd(0.1, 0.2), cxd(-0.5, 0);
    // quaternionic Hermitian block pattern [[A, B], [-conj(B), conj(A)]]
    CHECK(symmetry::symmetry_check(h4, SymClass::SelfDual) < 1e-12);

    torus::SoftTorus v = torus::voiculescu_pair(3);
    CHECK(symmetry::symmetry_check(v.u[0], SymClass::Symmetric) > 0.1);

    CHECK_THROWS_AS(symmetry::symmetry_check(Mat::Identity(3, 3), SymClass::SelfDual),
                    invalid_input);
}

TEST_CASE("structured rank decomposition") {
    SUBCASE("identity in the symmetric class") {
        auto factors = symmetry::structured_rank_decomposition(Mat::Identity(3, 3),
                                                               SymClass::Symmetric);
        REQUIRE(factors.size() == 3);
        Mat rec = Mat::Zero(3, 3);
        for (const auto& f : factors) {
            CHECK(f.v.imag().norm() < 1e-12);  // real vectors
            rec += f.v * f.v.adjoint();
        }
        CHECK(operator_norm(rec - Mat::Identity(3, 3)) < 1e-10);
    }

    SUBCASE("self-dual rank-2 pair") {
        // P = (vv^dag + ww^dag) with w = Z conj(v) is self-dual
        Mat z = symmetry::standard_z(4);
        std::mt19937_64 rng(5);
        Vec v = Vec::Zero(4);
        v << cxd(0.4, 0.1), cxd(-0.2, 0.3), cxd(0.5, -0.6), cxd(0.1, 0.2);
        v.normalize();
        Vec w = z * v.conjugate();
        w -= v * (v.adjoint() * w);
        w.normalize();
        Mat p = v * v.adjoint() + w * w.adjoint();
        REQUIRE(symmetry::symmetry_check(p, SymClass::SelfDual) < 1e-12);

        auto factors = symmetry::structured_rank_decomposition(p, SymClass::SelfDual);
        REQUIRE(factors.size() == 1);
        CHECK((factors[0].w - z * factors[0].v.conjugate()).norm() < 1e-8);
        Mat rec = factors[0].v * factors[0].v.adjoint() + factors[0].w * factors[0].w.adjoint();
        CHECK(operator_norm(rec - p) < 1e-10);
    }
}

TEST_CASE("symmetric naimark dilation, scalar two-outcome") {
    const double e = 0.4;
    std::vector<Mat> elems{Mat::Constant(1, 1, e), Mat::Constant(1, 1, 1 - e)};
    symmetry::SymmetricDilation sd =
        symmetry::symmetric_naimark_dilate(elems, SymClass::Symmetric);
    REQUIRE(sd.m.rows() == 2);
    CHECK(sd.m.imag().norm() < 1e-12);  // real orthogonal completion
    CHECK(operator_norm(sd.m * sd.m.adjoint() - Mat::Identity(2, 2)) < 1e-10);
    for (std::size_t i = 0; i < 2; ++i) {
        Mat restricted = (sd.pi * sd.q[i] * sd.pi).topLeftCorner(1, 1);
        CHECK(operator_norm(restricted - elems[i]) < 1e-10);
    }
}

TEST_CASE("symmetric dilation of a symmetric povm") {
    torus::SoftTorus t = symmetry::random_class_torus(2, 4, SymClass::Symmetric, 0.05, 31);
    REQUIRE(symmetry::class_defect(t, SymClass::Symmetric) < 1e-12);
    povm::PovmSystem sys = povm::build_povm(t, 1.0);
    std::vector<Mat> elems;
    for (Eigen::Index c = 0; c < sys.count(); ++c) elems.push_back(sys.element(c));

    symmetry::SymmetricDilation sd = symmetry::symmetric_naimark_dilate(elems, SymClass::Symmetric);
    CHECK(symmetry::symmetry_check(sd.pi, SymClass::Symmetric) < 1e-10);
    Mat qsum = Mat::Zero(sd.m.rows(), sd.m.rows());
    for (std::size_t i = 0; i < sd.q.size(); ++i) {
        CHECK(symmetry::symmetry_check(sd.q[i], SymClass::Symmetric) < 1e-10);
        qsum += sd.q[i];
        Mat restricted = (sd.pi * sd.q[i] * sd.pi).topLeftCorner(4, 4);
        CHECK(operator_norm(restricted - elems[i]) < 1e-10);
    }
    CHECK(operator_norm(qsum - Mat::Identity(sd.m.rows(), sd.m.rows())) < 1e-10);
}

TEST_CASE("self-dual dilation carries the extended Z") {
    torus::SoftTorus t = symmetry::random_class_torus(2, 4, SymClass::SelfDual, 0.05, 37);
    REQUIRE(symmetry::class_defect(t, SymClass::SelfDual) < 1e-12);
    povm::PovmSystem sys = povm::build_povm(t, 1.0);
    std::vector<Mat> elems;
    for (Eigen::Index c = 0; c < sys.count(); ++c) elems.push_back(sys.element(c));

    symmetry::SymmetricDilation sd = symmetry::symmetric_naimark_dilate(elems, SymClass::SelfDual);
    // ambient Z = original Z on the first block, J blocks after
    CHECK(operator_norm(sd.z_ambient.topLeftCorner(4, 4) - symmetry::standard_z(4)) < 1e-15);
    CHECK(operator_norm(sd.z_ambient * sd.z_ambient +
                        Mat::Identity(sd.m.rows(), sd.m.rows())) < 1e-12);
    auto ambient_defect = [&](const Mat& m) {
        return operator_norm(m + sd.z_ambient * m.transpose() * sd.z_ambient);
    };
    CHECK(ambient_defect(sd.pi) < 1e-10);
    for (std::size_t i = 0; i < sd.q.size(); ++i) {
        CHECK(ambient_defect(sd.q[i]) < 1e-10);
        Mat restricted = (sd.pi * sd.q[i] * sd.pi).topLeftCorner(4, 4);
        CHECK(operator_norm(restricted - elems[i]) < 1e-10);
    }
}

TEST_CASE("polar preserves the class") {
    std::mt19937_64 rng(7);
    Mat a = linalg::ginibre(4, 4, rng);
    Mat xs = 0.5 * (a + a.transpose()) + 3.0 * Mat::Identity(4, 4);
    CHECK(symmetry::symmetry_check(linalg::polar(xs), SymClass::Symmetric) < 1e-10);

    Mat z = symmetry::standard_z(4);
    Mat b = linalg::ginibre(4, 4, rng);
    Mat xd = 0.5 * (b - z * b.transpose() * z) + 3.0 * Mat::Identity(4, 4);
    REQUIRE(symmetry::symmetry_check(xd, SymClass::SelfDual) < 1e-12);
    CHECK(symmetry::symmetry_check(linalg::polar(xd), SymClass::SelfDual) < 1e-10);
}

TEST_CASE("map_G and map_F preserve the class") {
    for (SymClass cls : {SymClass::Symmetric, SymClass::SelfDual}) {
        torus::SoftTorus t = symmetry::random_class_torus(2, 6, cls, 0.04, 101);
        REQUIRE(symmetry::class_defect(t, cls) < 1e-12);

        povm::Dilation dil = povm::map_F(t, {});
        CHECK(symmetry::class_defect(dil, cls) < 1e-8);

        for (const Mat& k : dil.k) {
            Mat u = linalg::polar(k);
            CHECK(symmetry::symmetry_check(u, cls) < 1e-8);
        }
    }
}

TEST_CASE("map_A symmetry under index reflection") {
    // field with E(theta) = E(-theta)^T: nx even, ny odd, nz even
    auto eval = [](const std::vector<double>& th) {
        double nx = std::cos(th[0]);
        double ny = 0.6 * (std::sin(th[0]) + std::sin(th[1]));
        double nz = 2.0 + std::cos(th[1]);
        double n = std::sqrt(nx * nx + ny * ny + nz * nz);
        nx /= n;
        ny /= n;
        nz /= n;
        Mat e(2, 2);
        e(0, 0) = 0.5 * (1 + nz);
        e(1, 1) = 0.5 * (1 - nz);
        e(0, 1) = 0.5 * cxd(nx, -ny);
        e(1, 0) = 0.5 * cxd(nx, ny);
        return e;
    };
    // verify the input symmetry
    std::vector<double> th{1.1, 2.3}, mth{-1.1, -2.3};
    CHECK(operator_norm(eval(th) - eval(mth).transpose()) < 1e-12);

    bundle::ProjectorField f;
    f.torus_dim = 2;
    f.fiber_dim = 2;
    f.rank = 1;
    f.eval = eval;

    const int n = 6;
    torus::LocalProjector lp = bundle::map_A(f, n);
    // Fourier basis diagonalizes the shifts; P becomes symmetric there
    const Eigen::Index cells = n * n;
    Mat fourier = Mat::Zero(cells, cells);
    for (int a1 = 0; a1 < n; ++a1)
        for (int a2 = 0; a2 < n; ++a2)
            for (int b1 = 0; b1 < n; ++b1)
                for (int b2 = 0; b2 < n; ++b2)
                    fourier(a1 * n + a2, b1 * n + b2) =
                        std::polar(1.0 / n, 2 * kPi * (a1 * b1 + a2 * b2) / double(n));
    Mat big = Eigen::kroneckerProduct(fourier, Mat::Identity(2, 2)).eval();
    Mat pf = big.adjoint() * lp.p * big;
    CHECK(symmetry::symmetry_check(pf, SymClass::Symmetric) < 1e-10);
    for (const Mat& u : lp.u) {
        Mat uf = big.adjoint() * u * big;
        CHECK(symmetry::symmetry_check(uf, SymClass::Symmetric) < 1e-10);
    }
}
