#pragma once

#include <cstddef>
#include <vector>

#include "dpmag/spin.hpp"
#include "dpmag/trajectory.hpp"

namespace dpmag {

/// Finite-difference symmetric logarithmic derivative L = (rho+ - rho-)/dB,
/// i.e. 2 d(rho)/dB by central differences.
struct SldMatrix {
  Matrix L;
  double dB = 0.0;
};

SldMatrix sld_finite_difference(const DensityMatrix& rho_plus, const DensityMatrix& rho_minus,
                                double dB);

/// tr(L^2 rho). Values below -1e-8 throw NumericalError; tiny negative
/// rounding is clamped to zero.
double conditional_qfi(const SldMatrix& L, const DensityMatrix& rho);

/// Same quantity for pure states, in O(dim):
/// L psi = (psi+ <psi+|psi> - psi- <psi-|psi>) / dB and tr(L^2 rho) = |L psi|^2.
double conditional_qfi(const StateVector& psi, const StateVector& psi_plus,
                       const StateVector& psi_minus, double dB);

struct QfiSample {
  std::size_t stream_index = 0;
  double qfi = 0.0;
  double purity = 1.0;
  bool valid = true;
  bool low_purity = false;  // purity < kLowPurityThreshold
};

inline constexpr double kLowPurityThreshold = 0.999;

/// Conditional QFI at tau for one coupled triple. Uses the state-vector
/// formula when all three final states are vectors.
QfiSample triple_qfi(const TripleOutput& triple, std::size_t stream_index = 0);

/// Conditional QFI at every snapshot of a triple run with snapshot_stride > 0.
std::vector<double> triple_qfi_series(const TripleOutput& triple);

struct QfiEstimate {
  std::vector<double> samples;
  double mean = 0.0;
  double std_dev = 0.0;  // sample standard deviation
  double sem = 0.0;      // std_dev / sqrt(n_valid)
  std::size_t n_valid = 0;
  std::size_t n_excluded = 0;
  double deltaB = 0.0;          // 1 / sqrt(mean)
  double deltaB_err = 0.0;      // mean^(-3/2) * sem / 2
  double deltaB_err_raw = 0.0;  // mean^(-3/2) * std_dev / 2

  double exclusion_rate() const {
    const std::size_t total = n_valid + n_excluded;
    return total == 0 ? 0.0 : static_cast<double>(n_excluded) / static_cast<double>(total);
  }
};

/// Aggregates conditional QFI samples. Requires at least two samples.
QfiEstimate ensemble_qfi(std::vector<double> samples, std::size_t n_excluded = 0);

/// 4 gamma^2 t^2 Var(fy) for a pure initial state under Larmor precession
/// about y. Throws std::invalid_argument if rho0 is not pure within 1e-8.
double analytic_unitary_qfi(const DensityMatrix& rho0, const SpinOperators& ops, double gamma,
                            double t);

struct ReferenceBounds {
  double shotnoise = 0.0;   // 1 / (gamma tau sqrt(2F))
  double heisenberg = 0.0;  // 1 / (gamma tau 2F)
  double twobody = 0.0;     // 1 / (gamma tau F^(3/2))
};

ReferenceBounds reference_bounds(double F, double gamma, double tau);

}  // namespace dpmag
