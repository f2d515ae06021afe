#include "dpmag/fisher.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "dpmag/error.hpp"

namespace dpmag {

namespace {

constexpr double kNegativeQfiTolerance = 1e-8;

double checked_qfi(double value) {
  if (!std::isfinite(value)) throw NumericalError("conditional QFI is not finite");
  if (value < -kNegativeQfiTolerance) {
    throw NumericalError("conditional QFI is negative (" + std::to_string(value) +
                         "); positivity is broken upstream");
  }
  return std::max(value, 0.0);
}

}  // namespace

SldMatrix sld_finite_difference(const DensityMatrix& rho_plus, const DensityMatrix& rho_minus,
                                double dB) {
  if (rho_plus.dim() != rho_minus.dim()) {
    throw std::invalid_argument("sld_finite_difference: dimension mismatch");
  }
  if (!(dB > 0.0)) throw std::invalid_argument("sld_finite_difference: dB must be positive");
  Matrix L = (rho_plus.rho - rho_minus.rho) / dB;
  L = 0.5 * (L + L.adjoint()).eval();
  return SldMatrix{std::move(L), dB};
}

double conditional_qfi(const SldMatrix& L, const DensityMatrix& rho) {
  if (L.L.rows() != rho.dim() || L.L.cols() != rho.dim()) {
    throw std::invalid_argument("conditional_qfi: dimension mismatch");
  }
  const Matrix Lrho = L.L * rho.rho;
  // tr(L (L rho)) = sum_ij L_ij (L rho)_ji
  const Complex tr = (L.L.transpose().cwiseProduct(Lrho)).sum();
  return checked_qfi(tr.real());
}

double conditional_qfi(const StateVector& psi, const StateVector& psi_plus,
                       const StateVector& psi_minus, double dB) {
  if (psi.dim() != psi_plus.dim() || psi.dim() != psi_minus.dim()) {
    throw std::invalid_argument("conditional_qfi: dimension mismatch");
  }
  if (!(dB > 0.0)) throw std::invalid_argument("conditional_qfi: dB must be positive");
  const Vector Lpsi = psi_plus.psi * psi_plus.psi.dot(psi.psi) -
                      psi_minus.psi * psi_minus.psi.dot(psi.psi);
  return checked_qfi(Lpsi.squaredNorm() / (dB * dB));
}

QfiSample triple_qfi(const TripleOutput& triple, std::size_t stream_index) {
  QfiSample s;
  s.stream_index = stream_index;
  if (!triple.valid()) {
    s.valid = false;
    s.qfi = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  const StateVector* ref = triple.reference.final_vector();
  const StateVector* plus = triple.plus.final_vector();
  const StateVector* minus = triple.minus.final_vector();
  if (ref && plus && minus) {
    s.qfi = conditional_qfi(*ref, *plus, *minus, triple.dB);
    s.purity = 1.0;
  } else {
    const DensityMatrix rho = triple.reference.final_density();
    const SldMatrix L =
        sld_finite_difference(triple.plus.final_density(), triple.minus.final_density(), triple.dB);
    s.qfi = conditional_qfi(L, rho);
    s.purity = purity(rho);
  }
  s.low_purity = s.purity < kLowPurityThreshold;
  return s;
}

std::vector<double> triple_qfi_series(const TripleOutput& triple) {
  const auto& r = triple.reference.snapshots;
  const auto& p = triple.plus.snapshots;
  const auto& m = triple.minus.snapshots;
  if (r.size() != p.size() || r.size() != m.size()) {
    throw std::invalid_argument("triple_qfi_series: snapshot counts differ");
  }
  std::vector<double> out;
  out.reserve(r.size());
  for (std::size_t k = 0; k < r.size(); ++k) {
    const auto* rv = std::get_if<StateVector>(&r[k]);
    const auto* pv = std::get_if<StateVector>(&p[k]);
    const auto* mv = std::get_if<StateVector>(&m[k]);
    if (rv && pv && mv) {
      out.push_back(conditional_qfi(*rv, *pv, *mv, triple.dB));
    } else {
      out.push_back(conditional_qfi(
          sld_finite_difference(to_density(p[k]), to_density(m[k]), triple.dB), to_density(r[k])));
    }
  }
  return out;
}

QfiEstimate ensemble_qfi(std::vector<double> samples, std::size_t n_excluded) {
  if (samples.size() < 2) {
    throw std::invalid_argument("ensemble_qfi: need at least two valid samples, got " +
                                std::to_string(samples.size()));
  }
  QfiEstimate est;
  est.n_valid = samples.size();
  est.n_excluded = n_excluded;
  const double n = static_cast<double>(samples.size());
  est.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : samples) ss += (x - est.mean) * (x - est.mean);
  est.std_dev = std::sqrt(ss / (n - 1.0));
  est.sem = est.std_dev / std::sqrt(n);
  if (est.mean > 0.0) {
    const double inv_sqrt = 1.0 / std::sqrt(est.mean);
    const double inv_three_halves = inv_sqrt / est.mean;
    est.deltaB = inv_sqrt;
    est.deltaB_err = 0.5 * inv_three_halves * est.sem;
    est.deltaB_err_raw = 0.5 * inv_three_halves * est.std_dev;
  } else {
    est.deltaB = std::numeric_limits<double>::infinity();
    est.deltaB_err = std::numeric_limits<double>::infinity();
    est.deltaB_err_raw = std::numeric_limits<double>::infinity();
  }
  est.samples = std::move(samples);
  return est;
}

double analytic_unitary_qfi(const DensityMatrix& rho0, const SpinOperators& ops, double gamma,
                            double t) {
  if (std::abs(purity(rho0) - 1.0) > 1e-8) {
    throw std::invalid_argument("analytic_unitary_qfi: initial state is not pure");
  }
  return 4.0 * gamma * gamma * t * t * variance(ops.fy, rho0);
}

ReferenceBounds reference_bounds(double F, double gamma, double tau) {
  if (!(F > 0.0)) throw std::invalid_argument("reference_bounds: F must be positive");
  const double gt = gamma * tau;
  return ReferenceBounds{1.0 / (gt * std::sqrt(2.0 * F)), 1.0 / (gt * 2.0 * F),
                         1.0 / (gt * std::pow(F, 1.5))};
}

}  // namespace dpmag
