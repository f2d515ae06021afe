#pragma once

// Conditional master equation of the double-pass magnetometer:
//
//   d rho = i gamma B [fy, rho] dt + i sqrt(KM) [fy, {fz, rho}] dt
//         + M D[fz] rho dt + K D[fy] rho dt
//         + (sqrt(M) M[fz] rho + i sqrt(K) [fy, rho]) dW
//
// with D[X] rho = X rho X^+ - {X^+ X, rho}/2 and
// M[X] rho = X rho + rho X^+ - tr((X + X^+) rho) rho. The measurement record
// obeys dZ = 2 sqrt(M) tr(fz rho) dt + dW. Units: hbar = 1, B in units of
// gamma, M and K in units of 1/tau.

#include <string_view>

#include "dpmag/spin.hpp"

namespace dpmag {

inline constexpr double kPositivityTolerance = 1e-6;

struct FilterParams {
  double B = 0.0;
  double gamma = 1.0;
  double M = 0.0;
  double K = 0.0;
  double tau = 1.0;
  double dt = 1e-3;
  int n_steps = 1000;

  /// Validates the rates and rounds tau/dt to an integer step count; dt is
  /// then recomputed as tau / n_steps. Throws std::invalid_argument.
  static FilterParams make(double B, double gamma, double M, double K, double tau, double dt);
  void validate() const;

  FilterParams with_B(double b) const {
    FilterParams p = *this;
    p.B = b;
    return p;
  }
  FilterParams with_K(double k) const {
    FilterParams p = *this;
    p.K = k;
    return p;
  }
};

struct FilterIncrement {
  Matrix drift;      // coefficient of dt
  Matrix diffusion;  // coefficient of dW
};

/// D[X] rho for arbitrary X.
Matrix dissipator(const Matrix& X, const DensityMatrix& rho);
/// M[X] rho for Hermitian X.
Matrix measurement_superop(const Matrix& X, const DensityMatrix& rho);

FilterIncrement filter_increment(const DensityMatrix& rho, const SpinOperators& ops,
                                 const FilterParams& p);

/// Integrator used by the trajectory engine.
///
/// `euler`: rho + drift dt + diffusion dW, Hermitized and trace-renormalized.
/// `kraus`: rho -> V Omega rho Omega V^+ / tr with Omega = exp(sqrt(M) fz dZ
/// - M fz^2 dt) and V = exp(i (gamma B dt + sqrt(K) dZ) fy). Same first-order
/// generator as `euler`, positive by construction and unconditionally stable
/// in the fz-dephasing term.
enum class Scheme { kraus, euler };

std::string_view to_string(Scheme s);
Scheme parse_scheme(std::string_view s);

struct EulerStepResult {
  DensityMatrix state;
  double trace_before_renormalization = 1.0;
  double min_eigenvalue = 0.0;  // NaN when the check was skipped
  bool positivity_ok = true;
};

/// One normalized Euler-Maruyama step driven by the innovation dW. A minimum
/// eigenvalue below -kPositivityTolerance is reported, never repaired.
EulerStepResult euler_step(const DensityMatrix& rho, const SpinOperators& ops,
                           const FilterParams& p, double dW, bool check_positivity = true);

/// One Kraus-form step driven by the record increment dZ.
DensityMatrix kraus_step(const DensityMatrix& rho, const SpinOperators& ops,
                         const FilterParams& p, double dZ);
StateVector kraus_step(const StateVector& state, const SpinOperators& ops,
                       const FilterParams& p, double dZ);

/// 2 sqrt(M) <fz> dt, the predictable part of a record increment.
double record_drift(const FilterParams& p, double fz_mean);

}  // namespace dpmag
