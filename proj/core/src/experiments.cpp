#include "dpmag/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dpmag/error.hpp"
#include "dpmag/parallel.hpp"

namespace dpmag {

namespace {

constexpr double kInvPhi = 0.6180339887498949;

}  // namespace

void EnsembleConfig::validate() const {
  if (n_trajectories < 2) throw std::invalid_argument("n_trajectories must be >= 2");
  if (!(dB > 0.0)) throw std::invalid_argument("dB must be positive");
  if (!(max_exclusion_rate >= 0.0)) throw std::invalid_argument("max_exclusion_rate must be >= 0");
  filter_params(0.0, 0.0);
}

FilterParams EnsembleConfig::filter_params(double M, double K) const {
  return FilterParams::make(B, gamma, M, K, tau, dt);
}

QfiPoint run_qfi_point(double F, double M, double K, const EnsembleConfig& cfg) {
  cfg.validate();
  const SpinOperators ops = build_spin_operators(SpinQuantum(F, cfg.max_dim));
  const InitialState rho0(coherent_state_vector_x(ops));
  const FilterParams p = cfg.filter_params(M, K);

  QfiPoint point;
  point.F = F;
  point.M = M;
  point.K = K;
  point.samples.resize(static_cast<std::size_t>(cfg.n_trajectories));

  parallel_for(point.samples.size(), cfg.threads, [&](std::size_t j) {
    const TripleOutput triple =
        coupled_triple(rho0, ops, p, cfg.dB, NoiseSource{cfg.seed, j}, cfg.sharing, cfg.engine);
    point.samples[j] = triple_qfi(triple, j);
  });

  std::vector<double> values;
  values.reserve(point.samples.size());
  std::size_t excluded = 0;
  for (const QfiSample& s : point.samples) {
    if (s.valid) {
      values.push_back(s.qfi);
      if (s.low_purity) ++point.n_low_purity;
    } else {
      ++excluded;
    }
  }
  if (values.size() < 2) {
    throw NumericalError("F = " + std::to_string(F) + ": fewer than two valid trajectories");
  }
  point.estimate = ensemble_qfi(std::move(values), excluded);
  point.valid = point.estimate.exclusion_rate() <= cfg.max_exclusion_rate;
  return point;
}

std::pair<double, double> scaling_params(double F, double c, double alpha, double tau) {
  if (!(F > 0.0) || !(c > 0.0) || !(tau > 0.0)) {
    throw std::invalid_argument("scaling_params: F, c and tau must be positive");
  }
  const double rate = c / (tau * std::pow(F, alpha));
  return {rate, rate};
}

std::string_view to_string(SweepMode m) {
  return m == SweepMode::fixed_mk ? "fixed-MK" : "scaling-law";
}

SweepMode parse_sweep_mode(std::string_view s) {
  if (s == "fixed-MK" || s == "fixed-mk") return SweepMode::fixed_mk;
  if (s == "scaling-law") return SweepMode::scaling_law;
  throw std::invalid_argument("unknown sweep mode '" + std::string(s) +
                              "' (expected fixed-MK|scaling-law)");
}

void SweepConfig::validate() const {
  ensemble.validate();
  if (F_values.empty()) throw std::invalid_argument("F_values is empty");
  for (std::size_t i = 0; i < F_values.size(); ++i) {
    SpinQuantum(F_values[i], ensemble.max_dim);
    if (i > 0 && !(F_values[i] > F_values[i - 1])) {
      throw std::invalid_argument("F_values must be strictly increasing");
    }
  }
  if (mode == SweepMode::fixed_mk && (M < 0.0 || K < 0.0)) {
    throw std::invalid_argument("M and K must be >= 0");
  }
  if (mode == SweepMode::scaling_law && !(c > 0.0)) throw std::invalid_argument("c must be positive");
  if (!(spin_per_atom > 0.0)) throw std::invalid_argument("spin_per_atom must be positive");
}

std::vector<SweepRow> run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  std::vector<SweepRow> rows;
  rows.reserve(cfg.F_values.size());
  for (double F : cfg.F_values) {
    double M = cfg.M;
    double K = cfg.K;
    if (cfg.mode == SweepMode::scaling_law) {
      std::tie(M, K) = scaling_params(F, cfg.c, cfg.alpha, cfg.ensemble.tau);
    }
    QfiPoint point = run_qfi_point(F, M, K, cfg.ensemble);
    SweepRow row;
    row.F = F;
    row.N = F / cfg.spin_per_atom;
    row.M = M;
    row.K = K;
    row.estimate = std::move(point.estimate);
    row.refs = reference_bounds(F, cfg.ensemble.gamma, cfg.ensemble.tau);
    row.valid = point.valid;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<double> log_spaced_F(double F_min, double F_max, int count) {
  if (count < 1 || !(F_min > 0.0) || !(F_max >= F_min)) {
    throw std::invalid_argument("log_spaced_F: bad range");
  }
  std::vector<double> out;
  for (int i = 0; i < count; ++i) {
    const double x = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    const double F = std::round(2.0 * F_min * std::pow(F_max / F_min, x)) / 2.0;
    if (out.empty() || F > out.back()) out.push_back(F);
  }
  return out;
}

KOptimum optimize_K(double F, double M, const EnsembleConfig& cfg, const KSearch& search) {
  if (search.grid_points < 1) throw std::invalid_argument("optimize_K: need at least one grid point");
  if (search.grid_points > 1 && !(search.log10_K_max > search.log10_K_min)) {
    throw std::invalid_argument("optimize_K: empty K range");
  }

  KOptimum out;
  auto evaluate = [&](double log10_K) {
    const double K = std::pow(10.0, log10_K);
    QfiEstimate est = run_qfi_point(F, M, K, cfg).estimate;
    out.evaluations.emplace_back(K, est.mean);
    return std::make_pair(K, std::move(est));
  };

  const int n = search.grid_points;
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    xs[i] = n == 1 ? search.log10_K_min
                   : search.log10_K_min + (search.log10_K_max - search.log10_K_min) * i / (n - 1);
    out.grid.push_back(evaluate(xs[i]));
  }

  // Strict comparison keeps the smaller K on ties.
  std::size_t best = 0;
  for (std::size_t i = 1; i < out.grid.size(); ++i) {
    if (out.grid[i].second.mean > out.grid[best].second.mean) best = i;
  }

  auto significantly_above = [&](std::size_t i, std::size_t j) {
    const auto& a = out.grid[i].second;
    const auto& b = out.grid[j].second;
    return a.mean - b.mean > 2.0 * std::hypot(a.sem, b.sem);
  };
  int peaks = 0;
  for (std::size_t i = 0; i < out.grid.size(); ++i) {
    const bool left = i == 0 || significantly_above(i, i - 1);
    const bool right = i + 1 == out.grid.size() || significantly_above(i, i + 1);
    if (left && right && out.grid.size() > 1) ++peaks;
  }
  out.non_unimodal = peaks > 1;

  out.K_star = out.grid[best].first;
  out.qfi = out.grid[best].second.mean;
  out.qfi_sem = out.grid[best].second.sem;
  if (n == 1 || out.non_unimodal) return out;

  double a = xs[best == 0 ? 0 : best - 1];
  double b = xs[std::min<std::size_t>(best + 1, xs.size() - 1)];
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  auto fc = evaluate(c);
  auto fd = evaluate(d);
  auto consider = [&](const std::pair<double, QfiEstimate>& e) {
    if (e.second.mean > out.qfi || (e.second.mean == out.qfi && e.first < out.K_star)) {
      out.K_star = e.first;
      out.qfi = e.second.mean;
      out.qfi_sem = e.second.sem;
    }
  };
  consider(fc);
  consider(fd);
  while (b - a > search.log10_tolerance) {
    if (fc.second.mean >= fd.second.mean) {
      b = d;
      d = c;
      fd = std::move(fc);
      c = b - kInvPhi * (b - a);
      fc = evaluate(c);
      consider(fc);
    } else {
      a = c;
      c = d;
      fc = std::move(fd);
      d = a + kInvPhi * (b - a);
      fd = evaluate(d);
      consider(fd);
    }
  }
  return out;
}

ScalingFit powerlaw_fit(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) {
    throw std::invalid_argument("powerlaw_fit: need at least 3 points, got " +
                                std::to_string(points.size()));
  }
  const double n = static_cast<double>(points.size());
  double sx = 0.0, sy = 0.0;
  std::vector<double> x, y;
  for (const auto& [F, dB] : points) {
    if (!(F > 0.0) || !(dB > 0.0) || !std::isfinite(dB)) {
      throw std::invalid_argument("powerlaw_fit: F and deltaB must be positive and finite");
    }
    x.push_back(std::log10(F));
    y.push_back(std::log10(dB));
    sx += x.back();
    sy += y.back();
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("powerlaw_fit: all F values are equal");

  ScalingFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / n);
  fit.slope_stderr = std::sqrt(ss / (n - 2.0) / sxx);
  fit.points = points;
  return fit;
}

Saturation detect_saturation(const std::vector<SweepRow>& rows) {
  Saturation s;
  if (rows.empty()) return s;
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].estimate.deltaB < rows[best].estimate.deltaB) best = i;
  }
  s.index = best;
  s.F_star = rows[best].F;
  s.detected = rows.size() - best - 1 >= 2;
  return s;
}

}  // namespace dpmag
