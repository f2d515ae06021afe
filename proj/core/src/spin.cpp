#include "dpmag/spin.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

namespace dpmag {

namespace {

void require_square_match(const Matrix& X, int dim, const char* what) {
  if (X.rows() != dim || X.cols() != dim) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(X.rows()) + "x" + std::to_string(X.cols()) +
                                " vs " + std::to_string(dim) + ")");
  }
}

void fix_phase(Vector& v) {
  Eigen::Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  if (std::abs(v(k)) > 0.0) v *= std::conj(v(k)) / std::abs(v(k));
}

}  // namespace

SpinQuantum::SpinQuantum(double F, int max_dim) {
  const double twice = 2.0 * F;
  const double rounded = std::round(twice);
  if (!std::isfinite(F) || F < 0.0 || std::abs(twice - rounded) > 1e-9) {
    throw std::invalid_argument("spin F must be a nonnegative half-integer, got " +
                                std::to_string(F));
  }
  if (rounded + 1.0 > static_cast<double>(max_dim)) {
    throw std::invalid_argument("spin F = " + std::to_string(F) + " exceeds dimension cap " +
                                std::to_string(max_dim));
  }
  twice_f_ = static_cast<int>(rounded);
}

SpinQuantum SpinQuantum::from_twice(int twice_f, int max_dim) {
  if (twice_f < 0) throw std::invalid_argument("2F must be nonnegative");
  return SpinQuantum(0.5 * twice_f, max_dim);
}

SpinOperators build_spin_operators(const SpinQuantum& spin) {
  const int d = spin.dim();
  const double F = spin.value();

  SpinOperators ops{spin, Matrix::Zero(d, d), Matrix::Zero(d, d), Matrix::Zero(d, d),
                    RealVector(d), RealVector(std::max(d - 1, 0))};

  for (int k = 0; k < d; ++k) ops.m(k) = F - k;
  for (int k = 0; k + 1 < d; ++k) {
    const double m_lower = ops.m(k + 1);
    ops.ladder(k) = std::sqrt((F - m_lower) * (F + m_lower + 1.0));
  }

  const Complex half_i(0.0, 0.5);
  for (int k = 0; k < d; ++k) ops.fz(k, k) = ops.m(k);
  for (int k = 0; k + 1 < d; ++k) {
    const double l = ops.ladder(k);
    ops.fx(k, k + 1) = 0.5 * l;
    ops.fx(k + 1, k) = 0.5 * l;
    ops.fy(k, k + 1) = -half_i * l;
    ops.fy(k + 1, k) = half_i * l;
  }
  return ops;
}

DensityMatrix StateVector::to_density() const {
  return DensityMatrix{psi * psi.adjoint(), time};
}

StateVector coherent_state_vector_x(const SpinOperators& ops) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(ops.fx);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("coherent_state_x: eigendecomposition of fx failed");
  }
  // Eigenvalues are sorted ascending.
  Vector v = solver.eigenvectors().col(ops.dim() - 1);
  v.normalize();
  fix_phase(v);
  return StateVector{std::move(v), 0.0};
}

DensityMatrix coherent_state_x(const SpinOperators& ops) {
  return coherent_state_vector_x(ops).to_density();
}

DensityMatrix coherent_state_x(const SpinQuantum& spin) {
  return coherent_state_x(build_spin_operators(spin));
}

DensityMatrix z_eigenstate(const SpinOperators& ops, double m) {
  const double idx = ops.F() - m;
  const double k = std::round(idx);
  if (std::abs(idx - k) > 1e-9 || k < 0 || k >= ops.dim()) {
    throw std::invalid_argument("z_eigenstate: m out of range");
  }
  DensityMatrix out{Matrix::Zero(ops.dim(), ops.dim()), 0.0};
  out.rho(static_cast<int>(k), static_cast<int>(k)) = 1.0;
  return out;
}

Complex expectation(const Matrix& X, const DensityMatrix& rho) {
  require_square_match(X, rho.dim(), "expectation");
  // tr(X rho) = sum_ij X_ij rho_ji
  return (X.transpose().cwiseProduct(rho.rho)).sum();
}

double variance(const Matrix& X, const DensityMatrix& rho) {
  require_square_match(X, rho.dim(), "variance");
  if (!is_hermitian(X, 1e-12)) throw std::invalid_argument("variance: X is not Hermitian");
  const Matrix X2 = X * X;
  const double mean = expectation(X, rho).real();
  return expectation(X2, rho).real() - mean * mean;
}

Complex expectation(const Matrix& X, const StateVector& state) {
  require_square_match(X, state.dim(), "expectation");
  return state.psi.dot(X * state.psi);
}

double variance(const Matrix& X, const StateVector& state) {
  require_square_match(X, state.dim(), "variance");
  if (!is_hermitian(X, 1e-12)) throw std::invalid_argument("variance: X is not Hermitian");
  const Vector Xpsi = X * state.psi;
  const double mean = state.psi.dot(Xpsi).real();
  return Xpsi.squaredNorm() - mean * mean;
}

double purity(const DensityMatrix& rho) {
  // tr(rho^2) = sum_ij rho_ij rho_ji; for Hermitian rho that is sum |rho_ij|^2.
  return (rho.rho.transpose().cwiseProduct(rho.rho)).sum().real();
}

double min_eigenvalue(const DensityMatrix& rho) {
  const Matrix h = 0.5 * (rho.rho + rho.rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("min_eigenvalue: eigendecomposition failed");
  }
  return solver.eigenvalues()(0);
}

double hermiticity_defect(const Matrix& A) {
  if (A.rows() != A.cols()) return std::numeric_limits<double>::infinity();
  return (A - A.adjoint()).cwiseAbs().maxCoeff();
}

bool is_hermitian(const Matrix& A, double tol) {
  return A.rows() == A.cols() && (A.size() == 0 || hermiticity_defect(A) <= tol);
}

StateVector dominant_state(const DensityMatrix& rho) {
  const Matrix h = 0.5 * (rho.rho + rho.rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("dominant_state: eigendecomposition failed");
  }
  Vector v = solver.eigenvectors().col(rho.dim() - 1);
  v.normalize();
  fix_phase(v);
  return StateVector{std::move(v), rho.time};
}

}  // namespace dpmag
