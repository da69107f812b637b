#pragma once

#include <Eigen/Dense>

namespace mixdyn {

struct PowerIterationOptions {
  double rel_tol = 1e-10;
  int max_iterations = 10000;
};

/// Largest eigenvalue of a symmetric positive semi-definite matrix by power
/// iteration on the Rayleigh quotient. Returns 0 for the zero matrix.
/// Throws ConvergenceError (carrying the last Rayleigh quotient) when the
/// quotient has not settled to rel_tol within max_iterations.
double largest_eigenvalue_psd(const Eigen::MatrixXd& m,
                              const PowerIterationOptions& opts = {});

/// Operator 2-norm of an arbitrary matrix, sqrt(lambda_max(A^T A)).
double spectral_norm(const Eigen::MatrixXd& a, const PowerIterationOptions& opts = {});

/// Orthonormal basis (columns) of the null space of `a`. Singular values at or
/// below rel_tol * max(rows, cols) * sigma_max count as zero.
Eigen::MatrixXd null_space_basis(const Eigen::MatrixXd& a, double rel_tol = 1e-12);

/// Numerical rank under the same threshold as null_space_basis.
Eigen::Index numerical_rank(const Eigen::MatrixXd& a, double rel_tol = 1e-12);

}  // namespace mixdyn
