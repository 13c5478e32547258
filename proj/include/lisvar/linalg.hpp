#pragma once

#include <Eigen/Dense>

#include "lisvar/types.hpp"

namespace lisvar {

// Lower-triangular factor L with L L' = sigma and nonnegative diagonal.
// Positive definite input takes the plain Cholesky path; positive
// semidefinite input (smallest eigenvalue >= -tol*scale) is clipped at zero
// and refactored. Throws NotPositiveSemiDefinite beyond the tolerance.
Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& sigma, double tol = kRelTol);

// Singular values above max(rows, cols) * eps * sigma_max count toward rank.
int numerical_rank(const Eigen::MatrixXd& m);

// Duplication-style matrix for skew-symmetric vectorization: n^2 x n(n-1)/2,
// mapping the stacked below-diagonal entries (column-major order) of a
// skew-symmetric H to vec(H).
Eigen::MatrixXd dtilde(int n);

// vec(A') = commutation(m, n) * vec(A) for m x n matrices A.
Eigen::MatrixXd commutation(int m, int n);

// Orthonormal basis of the null space (columns); deterministic sign
// (largest-magnitude entry of each basis vector is positive).
Eigen::MatrixXd null_space(const Eigen::MatrixXd& m);

// Polar factor: the orthogonal matrix nearest to m in Frobenius norm.
Eigen::MatrixXd polar_factor(const Eigen::MatrixXd& m);

double spectral_radius(const Eigen::MatrixXd& m);

bool is_orthogonal(const Eigen::MatrixXd& q, double tol = kRelTol);

}  // namespace lisvar
