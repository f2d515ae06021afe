#include "dpmag/filter.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "dpmag/kernels.hpp"

namespace dpmag {

namespace {

void require_dim(const Matrix& X, const DensityMatrix& rho, const char* what) {
  if (X.rows() != rho.dim() || X.cols() != rho.dim()) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch");
  }
}

void require_ops(const SpinOperators& ops, int dim, const char* what) {
  if (ops.dim() != dim) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

RealVector measurement_weights(const SpinOperators& ops, const FilterParams& p, double dZ) {
  if (p.M == 0.0) return RealVector::Ones(ops.dim());
  const double sqrt_m = std::sqrt(p.M);
  RealVector exponent = (sqrt_m * dZ) * ops.m.array() - (p.M * p.dt) * ops.m.array().square();
  // Overall scale drops out on renormalization.
  exponent.array() -= exponent.maxCoeff();
  return exponent.array().exp().matrix();
}

double rotation_angle(const FilterParams& p, double dZ) {
  return p.gamma * p.B * p.dt + std::sqrt(p.K) * dZ;
}

}  // namespace

FilterParams FilterParams::make(double B, double gamma, double M, double K, double tau,
                                double dt) {
  if (!(tau > 0.0) || !(dt > 0.0)) throw std::invalid_argument("tau and dt must be positive");
  const double steps = tau / dt;
  const double rounded = std::round(steps);
  if (rounded < 1.0 || std::abs(steps - rounded) > 1e-6 * rounded) {
    throw std::invalid_argument("tau/dt must be an integer step count");
  }
  FilterParams p{B, gamma, M, K, tau, tau / rounded, static_cast<int>(rounded)};
  p.validate();
  return p;
}

void FilterParams::validate() const {
  if (!std::isfinite(B) || !std::isfinite(gamma)) throw std::invalid_argument("B, gamma must be finite");
  if (!(M >= 0.0) || !std::isfinite(M)) throw std::invalid_argument("M must be >= 0");
  if (!(K >= 0.0) || !std::isfinite(K)) throw std::invalid_argument("K must be >= 0");
  if (!(tau > 0.0) || !(dt > 0.0) || n_steps < 1) {
    throw std::invalid_argument("tau, dt, n_steps must be positive");
  }
  if (std::abs(dt * n_steps - tau) > 1e-12 * std::max(1.0, tau)) {
    throw std::invalid_argument("dt * n_steps must equal tau");
  }
  if (dt > tau / 100.0 * (1.0 + 1e-12)) throw std::invalid_argument("dt must be <= tau/100");
}

Matrix dissipator(const Matrix& X, const DensityMatrix& rho) {
  require_dim(X, rho, "dissipator");
  const Matrix XdX = X.adjoint() * X;
  return X * rho.rho * X.adjoint() - 0.5 * (XdX * rho.rho + rho.rho * XdX);
}

Matrix measurement_superop(const Matrix& X, const DensityMatrix& rho) {
  require_dim(X, rho, "measurement_superop");
  const Matrix sum = X + X.adjoint();
  const Complex mean = (sum.transpose().cwiseProduct(rho.rho)).sum();
  return X * rho.rho + rho.rho * X.adjoint() - mean * rho.rho;
}

FilterIncrement filter_increment(const DensityMatrix& rho, const SpinOperators& ops,
                                 const FilterParams& p) {
  require_ops(ops, rho.dim(), "filter_increment");
  if (p.M < 0.0 || p.K < 0.0) throw std::invalid_argument("filter_increment: negative rate");

  const Complex i(0.0, 1.0);
  const Matrix comm = kernels::fy_commutator(ops, rho.rho);
  const Matrix anti = kernels::fz_anticommutator(ops, rho.rho);
  const double fz_mean = (ops.m.cast<Complex>().array() * rho.rho.diagonal().array()).sum().real();

  // Terms linear in [fy, .] are collected into one commutator:
  // i gamma B [fy, rho] + i sqrt(KM) [fy, {fz, rho}] - K/2 [fy, [fy, rho]]
  Matrix inner = (i * p.gamma * p.B) * rho.rho;
  if (p.K > 0.0) {
    inner += (i * std::sqrt(p.K * p.M)) * anti;
    inner -= (0.5 * p.K) * comm;
  }
  Matrix drift = kernels::fy_commutator(ops, inner);
  if (p.M > 0.0) drift += p.M * kernels::fz_dissipator(ops, rho.rho);

  Matrix diffusion = (i * std::sqrt(p.K)) * comm;
  if (p.M > 0.0) diffusion += std::sqrt(p.M) * (anti - (2.0 * fz_mean) * rho.rho);

  return FilterIncrement{std::move(drift), std::move(diffusion)};
}

std::string_view to_string(Scheme s) {
  return s == Scheme::kraus ? "kraus" : "euler";
}

Scheme parse_scheme(std::string_view s) {
  if (s == "kraus") return Scheme::kraus;
  if (s == "euler") return Scheme::euler;
  throw std::invalid_argument("unknown scheme '" + std::string(s) + "' (expected kraus|euler)");
}

EulerStepResult euler_step(const DensityMatrix& rho, const SpinOperators& ops,
                           const FilterParams& p, double dW, bool check_positivity) {
  if (!std::isfinite(dW)) throw std::invalid_argument("euler_step: non-finite dW");
  const FilterIncrement inc = filter_increment(rho, ops, p);

  Matrix next = rho.rho + p.dt * inc.drift + dW * inc.diffusion;
  next = 0.5 * (next + next.adjoint()).eval();
  const double tr = next.trace().real();
  next /= tr;

  EulerStepResult out{DensityMatrix{std::move(next), rho.time + p.dt}, tr,
                      std::numeric_limits<double>::quiet_NaN(), true};
  if (check_positivity) {
    out.min_eigenvalue = min_eigenvalue(out.state);
    out.positivity_ok = out.min_eigenvalue >= -kPositivityTolerance;
  }
  return out;
}

DensityMatrix kraus_step(const DensityMatrix& rho, const SpinOperators& ops,
                         const FilterParams& p, double dZ) {
  require_ops(ops, rho.dim(), "kraus_step");
  if (!std::isfinite(dZ)) throw std::invalid_argument("kraus_step: non-finite dZ");

  const RealVector w = measurement_weights(ops, p, dZ);
  const Matrix measured = w.cast<Complex>().asDiagonal() * rho.rho * w.cast<Complex>().asDiagonal();
  const double theta = rotation_angle(p, dZ);
  // V rho V^+ = (V (V rho)^+)^+
  const Matrix half = kernels::fy_rotation(ops, theta, measured);
  Matrix next = kernels::fy_rotation(ops, theta, half.adjoint().eval()).adjoint();
  next = 0.5 * (next + next.adjoint()).eval();
  next /= next.trace().real();
  return DensityMatrix{std::move(next), rho.time + p.dt};
}

StateVector kraus_step(const StateVector& state, const SpinOperators& ops,
                       const FilterParams& p, double dZ) {
  require_ops(ops, state.dim(), "kraus_step");
  if (!std::isfinite(dZ)) throw std::invalid_argument("kraus_step: non-finite dZ");

  const RealVector w = measurement_weights(ops, p, dZ);
  Vector next = kernels::fy_rotation(ops, rotation_angle(p, dZ),
                                     (w.cast<Complex>().array() * state.psi.array()).matrix());
  next /= next.norm();
  return StateVector{std::move(next), state.time + p.dt};
}

double record_drift(const FilterParams& p, double fz_mean) {
  return 2.0 * std::sqrt(p.M) * fz_mean * p.dt;
}

}  // namespace dpmag
