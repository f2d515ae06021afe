#pragma once

// Ensemble studies: single QFI points, F sweeps (fixed rates or the
// M = K = c / (tau F^alpha) schedule), K optimization and power-law fits.

#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "dpmag/fisher.hpp"
#include "dpmag/trajectory.hpp"

namespace dpmag {

struct EnsembleConfig {
  double B = 0.1;
  double gamma = 1.0;
  double tau = 1.0;
  double dt = 1e-3;
  double dB = 1e-6;
  int n_trajectories = 100;
  std::uint64_t seed = 1;
  NoiseSharing sharing = NoiseSharing::shared_innovations;
  EngineOptions engine{Scheme::kraus, Representation::automatic, 0, 0, 1, 0};
  int threads = 0;
  int max_dim = kDefaultMaxDimension;
  double max_exclusion_rate = 0.01;

  void validate() const;
  FilterParams filter_params(double M, double K) const;
};

struct QfiPoint {
  double F = 0.0;
  double M = 0.0;
  double K = 0.0;
  std::vector<QfiSample> samples;  // in stream_index order, including excluded ones
  QfiEstimate estimate;
  std::size_t n_low_purity = 0;
  bool valid = true;  // false when the exclusion rate exceeds the limit
};

/// Runs n_trajectories coupled triples from the x-polarized coherent state.
/// Trajectory j uses NoiseSource{seed, j}.
QfiPoint run_qfi_point(double F, double M, double K, const EnsembleConfig& cfg);

/// M = K = c / (tau F^alpha).
std::pair<double, double> scaling_params(double F, double c, double alpha, double tau);

enum class SweepMode { fixed_mk, scaling_law };

std::string_view to_string(SweepMode m);
SweepMode parse_sweep_mode(std::string_view s);

struct SweepConfig {
  std::vector<double> F_values;
  EnsembleConfig ensemble;
  SweepMode mode = SweepMode::fixed_mk;
  double M = 1.0;
  double K = 1e-4;
  double c = 0.589;
  double alpha = 0.77;
  double spin_per_atom = 0.5;  // f, only used to report N = F / f

  void validate() const;
};

struct SweepRow {
  double F = 0.0;
  double N = 0.0;
  double M = 0.0;
  double K = 0.0;
  QfiEstimate estimate;
  ReferenceBounds refs;
  bool valid = true;
};

std::vector<SweepRow> run_sweep(const SweepConfig& cfg);

/// Log-spaced F grid (rounded to half-integers, strictly increasing).
std::vector<double> log_spaced_F(double F_min, double F_max, int count);

struct KSearch {
  double log10_K_min = -6.0;
  double log10_K_max = 0.0;
  int grid_points = 13;
  double log10_tolerance = 0.01;
};

struct KOptimum {
  double K_star = 0.0;
  double qfi = 0.0;
  double qfi_sem = 0.0;
  bool non_unimodal = false;
  std::vector<std::pair<double, QfiEstimate>> grid;     // (K, estimate) on the coarse grid
  std::vector<std::pair<double, double>> evaluations;  // every (K, mean QFI) evaluated
};

/// Maximizes the unconditional QFI at tau over K: coarse log grid, then
/// golden-section refinement in log10 K around the best grid point.
KOptimum optimize_K(double F, double M, const EnsembleConfig& cfg, const KSearch& search = {});

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
  double slope_stderr = 0.0;
  std::vector<std::pair<double, double>> points;  // (F, deltaB)
};

/// Least squares of log10(deltaB) on log10(F).
ScalingFit powerlaw_fit(const std::vector<std::pair<double, double>>& points);

struct Saturation {
  bool detected = false;
  double F_star = 0.0;
  std::size_t index = 0;
};

/// F_star is the F of the smallest deltaB; saturation is detected when at
/// least two rows follow it (none of which improve on it by definition).
Saturation detect_saturation(const std::vector<SweepRow>& rows);

}  // namespace dpmag
