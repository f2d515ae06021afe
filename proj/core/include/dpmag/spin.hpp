#pragma once

// Collective spin algebra for a spin-F system in the z-eigenbasis.
//
// Basis ordering is fixed: index k holds |F, m = F - k>, so fz is
// diag(F, F-1, ..., -F). State dumps written by the CLI rely on this.

#include <complex>
#include <cstddef>
#include <Eigen/Dense>

namespace dpmag {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr int kDefaultMaxDimension = 4001;

/// Total collective spin F, stored as the integer 2F.
class SpinQuantum {
 public:
  /// Throws std::invalid_argument unless 2F is a nonnegative integer and
  /// 2F + 1 <= max_dim.
  explicit SpinQuantum(double F, int max_dim = kDefaultMaxDimension);
  static SpinQuantum from_twice(int twice_f, int max_dim = kDefaultMaxDimension);

  double value() const { return 0.5 * twice_f_; }
  int twice() const { return twice_f_; }
  int dim() const { return twice_f_ + 1; }

  friend bool operator==(const SpinQuantum&, const SpinQuantum&) = default;

 private:
  SpinQuantum() = default;
  int twice_f_ = 0;
};

/// fx, fy, fz as dense matrices, plus the band data the filter kernels use.
///
/// `m` is the diagonal of fz. `ladder[k]` is <m_k|J+|m_{k+1}>, so
/// fx(k, k+1) = ladder[k] / 2 and fy(k, k+1) = -i ladder[k] / 2.
/// Immutable after construction; share freely across threads.
struct SpinOperators {
  SpinQuantum spin;
  Matrix fx;
  Matrix fy;
  Matrix fz;
  RealVector m;
  RealVector ladder;

  int dim() const { return spin.dim(); }
  double F() const { return spin.value(); }
};

SpinOperators build_spin_operators(const SpinQuantum& spin);

struct DensityMatrix {
  Matrix rho;
  double time = 0.0;

  int dim() const { return static_cast<int>(rho.rows()); }
};

/// Normalized pure state. The trajectory engine propagates these directly
/// when the initial state is pure.
struct StateVector {
  Vector psi;
  double time = 0.0;

  int dim() const { return static_cast<int>(psi.size()); }
  DensityMatrix to_density() const;
};

/// Top eigenvector of fx, phase-fixed so the largest-magnitude component is
/// real and positive.
StateVector coherent_state_vector_x(const SpinOperators& ops);
DensityMatrix coherent_state_x(const SpinOperators& ops);
DensityMatrix coherent_state_x(const SpinQuantum& spin);

/// |F, m><F, m| in the z basis.
DensityMatrix z_eigenstate(const SpinOperators& ops, double m);

/// tr(X rho). Throws std::invalid_argument on a dimension mismatch.
Complex expectation(const Matrix& X, const DensityMatrix& rho);
/// tr(X^2 rho) - tr(X rho)^2 for Hermitian X.
double variance(const Matrix& X, const DensityMatrix& rho);

Complex expectation(const Matrix& X, const StateVector& state);
double variance(const Matrix& X, const StateVector& state);

double purity(const DensityMatrix& rho);
double min_eigenvalue(const DensityMatrix& rho);

/// Largest entrywise |A - A^dagger|.
double hermiticity_defect(const Matrix& A);
bool is_hermitian(const Matrix& A, double tol);

/// Eigenvector of the largest eigenvalue of a Hermitian rho; used to move a
/// pure density matrix onto the state-vector fast path.
StateVector dominant_state(const DensityMatrix& rho);

}  // namespace dpmag
