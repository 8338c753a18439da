#pragma once

#include <Eigen/Dense>

namespace ped2 {

/// Eigendecomposition of a symmetric matrix: values ascending, vectors
/// stored columnwise so that input = vectors * values.asDiagonal() * vectors^T.
struct SymmetricEigen {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

/// Cyclic Jacobi eigensolver for dense symmetric matrices.
/// Sweeps until the off-diagonal Frobenius norm drops below 1e-14 relative
/// to the input norm (at most 100 sweeps). Throws std::invalid_argument on
/// non-square or non-symmetric input.
SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& input);

double min_eigenvalue(const Eigen::MatrixXd& symmetric);
double max_eigenvalue(const Eigen::MatrixXd& symmetric);

/// Symmetric PSD square root via eigendecomposition; eigenvalues slightly
/// below zero (numerical noise) are clamped to zero.
Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& symmetric);

/// Largest singular value of a (possibly rectangular) matrix, computed from
/// the Gram matrix on the smaller side.
double spectral_norm(const Eigen::MatrixXd& m);

/// Smallest eigenvalue of m * m^T.
double min_eigenvalue_gram(const Eigen::MatrixXd& m);

}  // namespace ped2
