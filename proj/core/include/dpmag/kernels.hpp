#pragma once

// Band kernels for the spin operators. fz is diagonal and fy tridiagonal in
// the z basis, so products with a dense state cost O(dim) per column instead
// of O(dim^2).

#include <algorithm>
#include <cmath>

#include "dpmag/spin.hpp"

namespace dpmag::kernels {

/// Y = fy * X. X may be a vector or a matrix.
template <typename Derived>
auto fy_left(const SpinOperators& ops, const Eigen::MatrixBase<Derived>& X) {
  using Plain = typename Derived::PlainObject;
  const Eigen::Index d = X.rows();
  Plain Y = Plain::Zero(d, X.cols());
  if (d < 2) return Y;
  const Eigen::VectorXcd up = ops.ladder.cast<Complex>() * Complex(0.0, -0.5);
  Y.topRows(d - 1).noalias() = up.asDiagonal() * X.bottomRows(d - 1);
  Y.bottomRows(d - 1).noalias() -= up.asDiagonal() * X.topRows(d - 1);
  return Y;
}

/// Z = X * fy.
inline Matrix fy_right(const SpinOperators& ops, const Matrix& X) {
  const Eigen::Index d = X.cols();
  Matrix Z = Matrix::Zero(X.rows(), d);
  if (d < 2) return Z;
  const Eigen::VectorXcd up = ops.ladder.cast<Complex>() * Complex(0.0, -0.5);
  // (X fy)(:, j) = X(:, j-1) fy(j-1, j) + X(:, j+1) fy(j+1, j)
  Z.rightCols(d - 1).noalias() = X.leftCols(d - 1) * up.asDiagonal();
  Z.leftCols(d - 1).noalias() -= X.rightCols(d - 1) * up.asDiagonal();
  return Z;
}

/// Z = X * fx.
inline Matrix fx_right(const SpinOperators& ops, const Matrix& X) {
  const Eigen::Index d = X.cols();
  Matrix Z = Matrix::Zero(X.rows(), d);
  if (d < 2) return Z;
  const Eigen::VectorXcd half = ops.ladder.cast<Complex>() * 0.5;
  Z.rightCols(d - 1).noalias() = X.leftCols(d - 1) * half.asDiagonal();
  Z.leftCols(d - 1).noalias() += X.rightCols(d - 1) * half.asDiagonal();
  return Z;
}

template <typename Derived>
auto fx_left(const SpinOperators& ops, const Eigen::MatrixBase<Derived>& X) {
  using Plain = typename Derived::PlainObject;
  const Eigen::Index d = X.rows();
  Plain Y = Plain::Zero(d, X.cols());
  if (d < 2) return Y;
  const Eigen::VectorXcd half = ops.ladder.cast<Complex>() * 0.5;
  Y.topRows(d - 1).noalias() = half.asDiagonal() * X.bottomRows(d - 1);
  Y.bottomRows(d - 1).noalias() += half.asDiagonal() * X.topRows(d - 1);
  return Y;
}

/// [fy, X]
inline Matrix fy_commutator(const SpinOperators& ops, const Matrix& X) {
  return fy_left(ops, X) - fy_right(ops, X);
}

/// {fz, X}_ij = (m_i + m_j) X_ij
inline Matrix fz_anticommutator(const SpinOperators& ops, const Matrix& X) {
  const Eigen::Index d = X.rows();
  Matrix Y(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    Y.col(j) = (ops.m.array() + ops.m(j)).cast<Complex>() * X.col(j).array();
  }
  return Y;
}

/// D[fz]X, elementwise -(m_i - m_j)^2 / 2 * X_ij.
inline Matrix fz_dissipator(const SpinOperators& ops, const Matrix& X) {
  const Eigen::Index d = X.rows();
  Matrix Y(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    Y.col(j) = (-0.5 * (ops.m.array() - ops.m(j)).square()).cast<Complex>() * X.col(j).array();
  }
  return Y;
}

/// exp(i theta fy) X by Taylor series, split into substeps so that each
/// substep has |theta| * F <= 0.5. Truncation error per substep is below
/// 1e-17 relative.
///
/// i fy is real in this basis: (i fy v)_j = h_j v_{j+1} - h_{j-1} v_{j-1}
/// with h = ladder / 2.
template <typename Derived>
auto fy_rotation(const SpinOperators& ops, double theta, const Eigen::MatrixBase<Derived>& X) {
  // column-major so each column is contiguous
  using Plain = Eigen::Matrix<Complex, Eigen::Dynamic, Derived::ColsAtCompileTime>;
  Plain out = X;
  const double norm = std::abs(theta) * ops.F();
  const Eigen::Index d = out.rows();
  if (norm == 0.0 || d < 2) return out;

  const int substeps = std::max(1, static_cast<int>(std::ceil(norm / 0.5)));
  const double x = norm / substeps;
  int order = 1;
  for (double bound = x; bound * x / (order + 1) >= 1e-17 && order < 40; ++order) {
    bound *= x / (order + 1);
  }

  const double a = theta / substeps;
  const double* h = ops.ladder.data();
  Plain term(d, out.cols());
  Plain next(d, out.cols());
  for (int s = 0; s < substeps; ++s) {
    term = out;
    for (int k = 1; k <= order; ++k) {
      const double c = 0.5 * a / k;
      for (Eigen::Index col = 0; col < out.cols(); ++col) {
        const Complex* t = term.col(col).data();
        Complex* n = next.col(col).data();
        n[0] = c * h[0] * t[1];
        for (Eigen::Index j = 1; j + 1 < d; ++j) n[j] = c * (h[j] * t[j + 1] - h[j - 1] * t[j - 1]);
        n[d - 1] = -c * h[d - 2] * t[d - 2];
      }
      out += next;
      term.swap(next);
    }
  }
  return out;
}

}  // namespace dpmag::kernels
