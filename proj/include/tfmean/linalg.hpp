#pragma once

#include <Eigen/Dense>
#include <functional>

namespace tfm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Eigendecomposition A = V diag(values) V^T of a symmetric matrix.
struct SymEigen {
  Vector values;
  Matrix vectors;
};

/// Cyclic Jacobi eigensolver for symmetric matrices.
///
/// Sweeps rotate every off-diagonal pair until the off-diagonal Frobenius
/// norm drops below `tol` times the Frobenius norm of the input. Throws
/// NumericError when `max_sweeps` is exhausted or the input is non-finite.
SymEigen jacobi_eigen(const Matrix& a, double tol = 1e-13, int max_sweeps = 100);

/// V f(Lambda) V^T.
Matrix sym_apply(const SymEigen& e, const std::function<double(double)>& f);

Matrix sym_log(const Matrix& a);
Matrix sym_exp(const Matrix& a);
Matrix sym_sqrt(const Matrix& a);
Matrix sym_inv_sqrt(const Matrix& a);
Matrix sym_pow(const Matrix& a, double p);

/// (A + A^T) / 2.
inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

}  // namespace tfm
