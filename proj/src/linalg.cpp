#include "tfmean/linalg.hpp"

#include <cmath>

#include "tfmean/error.hpp"

namespace tfm {

SymEigen jacobi_eigen(const Matrix& input, double tol, int max_sweeps) {
  const Eigen::Index n = input.rows();
  if (input.cols() != n) throw ShapeError("jacobi_eigen: matrix not square");
  if (!input.allFinite()) throw NumericError("jacobi_eigen: non-finite entries");

  Matrix a = symmetrize(input);
  Matrix v = Matrix::Identity(n, n);
  const double scale = a.norm();
  const double threshold = tol * (scale > 0.0 ? scale : 1.0);

  auto off_norm = [&] {
    double s = 0.0;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) s += 2.0 * a(p, q) * a(p, q);
    }
    return std::sqrt(s);
  };

  int sweep = 0;
  while (off_norm() > threshold) {
    if (sweep++ >= max_sweeps) {
      throw NumericError("jacobi_eigen: no convergence after " + std::to_string(max_sweeps) + " sweeps");
    }
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Symmetric Schur decomposition of the 2x2 block (Golub & Van Loan 8.5.2).
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  return {a.diagonal(), v};
}

Matrix sym_apply(const SymEigen& e, const std::function<double(double)>& f) {
  Vector fv(e.values.size());
  for (Eigen::Index i = 0; i < e.values.size(); ++i) fv(i) = f(e.values(i));
  return symmetrize(e.vectors * fv.asDiagonal() * e.vectors.transpose());
}

namespace {

void require_positive(const SymEigen& e, const char* op) {
  if (e.values.size() > 0 && !(e.values.minCoeff() > 0.0)) {
    throw DomainError(std::string(op) + ": matrix is not positive definite");
  }
}

}  // namespace

Matrix sym_log(const Matrix& a) {
  const auto e = jacobi_eigen(a);
  require_positive(e, "sym_log");
  return sym_apply(e, [](double x) { return std::log(x); });
}

Matrix sym_exp(const Matrix& a) {
  return sym_apply(jacobi_eigen(a), [](double x) { return std::exp(x); });
}

Matrix sym_sqrt(const Matrix& a) {
  const auto e = jacobi_eigen(a);
  require_positive(e, "sym_sqrt");
  return sym_apply(e, [](double x) { return std::sqrt(x); });
}

Matrix sym_inv_sqrt(const Matrix& a) {
  const auto e = jacobi_eigen(a);
  require_positive(e, "sym_inv_sqrt");
  return sym_apply(e, [](double x) { return 1.0 / std::sqrt(x); });
}

Matrix sym_pow(const Matrix& a, double p) {
  const auto e = jacobi_eigen(a);
  require_positive(e, "sym_pow");
  return sym_apply(e, [p](double x) { return std::pow(x, p); });
}

}  // namespace tfm
