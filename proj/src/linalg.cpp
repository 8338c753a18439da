#include "ped2/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace ped2 {

namespace {

double off_diagonal_norm(const Eigen::MatrixXd& a) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            if (i != j) sum += a(i, j) * a(i, j);
        }
    }
    return std::sqrt(sum);
}

void check_symmetric(const Eigen::MatrixXd& input) {
    if (input.rows() != input.cols()) {
        throw std::invalid_argument("jacobi_eigen: matrix must be square");
    }
    const double scale = input.cwiseAbs().maxCoeff();
    const double asym = (input - input.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * std::max(1.0, scale)) {
        throw std::invalid_argument("jacobi_eigen: matrix is not symmetric");
    }
}

}  // namespace

SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& input) {
    check_symmetric(input);
    const Eigen::Index n = input.rows();

    Eigen::MatrixXd a = 0.5 * (input + input.transpose());
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);

    const double tol = 1e-14 * std::max(a.norm(), 1e-300);
    constexpr int kMaxSweeps = 100;

    bool converged = off_diagonal_norm(a) <= tol;
    for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
        for (Eigen::Index p = 0; p + 1 < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= 1e-300) continue;

                // Symmetric Schur rotation that annihilates a(p,q).
                const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t;
                if (std::abs(tau) > 1e100) {
                    t = 1.0 / (2.0 * tau);
                } else if (tau >= 0.0) {
                    t = 1.0 / (tau + std::sqrt(1.0 + tau * tau));
                } else {
                    t = -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
                }
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                a(p, p) -= t * apq;
                a(q, q) += t * apq;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (Eigen::Index k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(p, k) = a(k, p);
                    a(k, q) = s * akp + c * akq;
                    a(q, k) = a(k, q);
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
        converged = off_diagonal_norm(a) <= tol;
    }
    if (!converged) {
        throw std::runtime_error("jacobi_eigen: no convergence within 100 sweeps");
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&a](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });

    SymmetricEigen out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.values(i) = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
        out.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
    }
    return out;
}

double min_eigenvalue(const Eigen::MatrixXd& symmetric) {
    return jacobi_eigen(symmetric).values(0);
}

double max_eigenvalue(const Eigen::MatrixXd& symmetric) {
    const SymmetricEigen e = jacobi_eigen(symmetric);
    return e.values(e.values.size() - 1);
}

Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& symmetric) {
    const SymmetricEigen e = jacobi_eigen(symmetric);
    Eigen::VectorXd roots = e.values.cwiseMax(0.0).cwiseSqrt();
    Eigen::MatrixXd out = e.vectors * roots.asDiagonal() * e.vectors.transpose();
    return 0.5 * (out + out.transpose());
}

double spectral_norm(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    Eigen::MatrixXd gram;
    if (m.rows() <= m.cols()) {
        gram = m * m.transpose();
    } else {
        gram = m.transpose() * m;
    }
    return std::sqrt(std::max(0.0, max_eigenvalue(gram)));
}

double min_eigenvalue_gram(const Eigen::MatrixXd& m) {
    return min_eigenvalue(Eigen::MatrixXd(m * m.transpose()));
}

}  // namespace ped2
