#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "ped2/linalg.hpp"
#include "ped2/rng.hpp"
#include "test_oracles.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_symmetric(ped2::Rng& rng, int n) {
    MatrixXd m(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) m(i, j) = rng.normal();
    }
    return MatrixXd(0.5 * (m + m.transpose()));
}

}  // namespace

TEST_CASE("jacobi reconstructs random symmetric matrices") {
    ped2::Rng rng(101);
    for (int trial = 0; trial < 20; ++trial) {
        const MatrixXd a = random_symmetric(rng, 10);
        const ped2::SymmetricEigen e = ped2::jacobi_eigen(a);
        const MatrixXd rebuilt = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
        CHECK((rebuilt - a).cwiseAbs().maxCoeff() <= 1e-9);
        CHECK((e.vectors.transpose() * e.vectors - MatrixXd::Identity(10, 10))
                  .cwiseAbs()
                  .maxCoeff() <= 1e-12);
        for (int i = 0; i + 1 < 10; ++i) CHECK(e.values(i) <= e.values(i + 1));
    }
}

TEST_CASE("jacobi matches the closed-form 3x3 oracle") {
    ped2::Rng rng(202);
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::Matrix3d a;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) a(i, j) = rng.normal();
        }
        a = (0.5 * (a + a.transpose())).eval();
        const auto expected = test_oracles::sym3_eigenvalues(a);
        const ped2::SymmetricEigen e = ped2::jacobi_eigen(a);
        for (int i = 0; i < 3; ++i) {
            CHECK(std::abs(e.values(i) - expected[static_cast<std::size_t>(i)]) <= 1e-10);
        }
    }
}

TEST_CASE("jacobi rejects bad input") {
    CHECK_THROWS_AS(ped2::jacobi_eigen(MatrixXd::Random(3, 4)), std::invalid_argument);
    MatrixXd skew(2, 2);
    skew << 0.0, 1.0, -1.0, 0.0;
    CHECK_THROWS_AS(ped2::jacobi_eigen(skew), std::invalid_argument);
}

TEST_CASE("jacobi handles already-diagonal and zero matrices") {
    MatrixXd d = MatrixXd::Zero(3, 3);
    d(0, 0) = 3.0;
    d(1, 1) = -1.0;
    d(2, 2) = 2.0;
    const ped2::SymmetricEigen e = ped2::jacobi_eigen(d);
    CHECK(e.values(0) == doctest::Approx(-1.0));
    CHECK(e.values(2) == doctest::Approx(3.0));

    const ped2::SymmetricEigen z = ped2::jacobi_eigen(MatrixXd::Zero(4, 4));
    CHECK(z.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sqrt_psd squares back to the input") {
    ped2::Rng rng(303);
    for (int trial = 0; trial < 10; ++trial) {
        MatrixXd m(6, 6);
        for (int i = 0; i < 6; ++i) {
            for (int j = 0; j < 6; ++j) m(i, j) = rng.normal();
        }
        const MatrixXd psd = m * m.transpose();
        const MatrixXd root = ped2::sqrt_psd(psd);
        CHECK((root * root - psd).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, psd.norm()));
        CHECK((root - root.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("spectral norm and gram minimum match direct computation") {
    MatrixXd b(2, 3);
    b << 1.0, 0.0, 0.0,
         0.0, 2.0, 0.0;
    CHECK(ped2::spectral_norm(b) == doctest::Approx(2.0));
    CHECK(ped2::min_eigenvalue_gram(b) == doctest::Approx(1.0));

    ped2::Rng rng(404);
    MatrixXd wide(3, 7);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 7; ++j) wide(i, j) = rng.normal();
    }
    // cross-check the two Gram sides
    const double via_small = ped2::spectral_norm(wide);
    const double via_large = std::sqrt(ped2::max_eigenvalue(MatrixXd(wide.transpose() * wide)));
    CHECK(via_small == doctest::Approx(via_large).epsilon(1e-12));
}
