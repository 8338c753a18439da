// Independent reference computations used only by tests. Nothing here may
// call into the library paths it is checking.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>

namespace test_oracles {

/// Central finite-difference gradient with step h.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h = 1e-5) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Eigen::VectorXd hi = x, lo = x;
        hi(i) += h;
        lo(i) -= h;
        g(i) = (f(hi) - f(lo)) / (2.0 * h);
    }
    return g;
}

/// Closed-form eigenvalues of a symmetric 3x3 matrix (trigonometric solution
/// of the characteristic cubic), ascending.
inline std::array<double, 3> sym3_eigenvalues(const Eigen::Matrix3d& a) {
    const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    std::array<double, 3> eig{};
    if (p1 == 0.0) {
        eig = {a(0, 0), a(1, 1), a(2, 2)};
        std::sort(eig.begin(), eig.end());
        return eig;
    }
    const double q = a.trace() / 3.0;
    const double p2 = (a(0, 0) - q) * (a(0, 0) - q) + (a(1, 1) - q) * (a(1, 1) - q) +
                      (a(2, 2) - q) * (a(2, 2) - q) + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    Eigen::Matrix3d b = (a - q * Eigen::Matrix3d::Identity()) / p;
    const double det_b = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1)) -
                         b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0)) +
                         b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
    const double r = std::clamp(det_b / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double e1 = q + 2.0 * p * std::cos(phi);
    const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
    const double e2 = 3.0 * q - e1 - e3;
    eig = {e3, e2, e1};
    std::sort(eig.begin(), eig.end());
    return eig;
}

/// Dense Kronecker product, small sizes only.
inline Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

}  // namespace test_oracles
