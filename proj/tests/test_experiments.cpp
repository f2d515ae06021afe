#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "dpmag/error.hpp"
#include "dpmag/experiments.hpp"

using namespace dpmag;

namespace {

EnsembleConfig small_ensemble(int n = 8) {
  EnsembleConfig cfg;
  cfg.n_trajectories = n;
  cfg.threads = 1;
  return cfg;
}

SweepRow row(double F, double deltaB) {
  SweepRow r;
  r.F = F;
  r.estimate.deltaB = deltaB;
  return r;
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("scaling law parameters") {
  const auto [M1, K1] = scaling_params(1.0, 0.589, 0.77, 1.0);
  CHECK(M1 == doctest::Approx(0.589).epsilon(1e-15));
  CHECK(K1 == M1);
  const auto [M0, K0] = scaling_params(57.0, 0.589, 0.0, 2.0);
  CHECK(M0 == doctest::Approx(0.589 / 2.0).epsilon(1e-15));
  const auto [M100, K100] = scaling_params(100.0, 0.589, 0.77, 1.0);
  CHECK(M100 == doctest::Approx(0.589 * std::pow(100.0, -0.77)).epsilon(1e-15));
  CHECK_THROWS_AS(scaling_params(0.0, 0.589, 0.77, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(scaling_params(10.0, -1.0, 0.77, 1.0), std::invalid_argument);
}

TEST_CASE("sweep modes") {
  CHECK(parse_sweep_mode("fixed-MK") == SweepMode::fixed_mk);
  CHECK(parse_sweep_mode("scaling-law") == SweepMode::scaling_law);
  CHECK(to_string(SweepMode::scaling_law) == "scaling-law");
  CHECK_THROWS_AS(parse_sweep_mode("adaptive"), std::invalid_argument);
}

TEST_CASE("log spaced F grid") {
  const std::vector<double> F = log_spaced_F(10.0, 120.0, 8);
  REQUIRE(F.size() == 8);
  CHECK(F.front() == 10.0);
  CHECK(F.back() == 120.0);
  for (std::size_t i = 1; i < F.size(); ++i) {
    CHECK(F[i] > F[i - 1]);
    CHECK(std::fmod(2.0 * F[i], 1.0) == 0.0);
  }
  CHECK_THROWS_AS(log_spaced_F(10.0, 5.0, 3), std::invalid_argument);
}

TEST_CASE("power-law fit") {
  std::vector<std::pair<double, double>> exact, shot;
  for (double F : {10.0, 20.0, 40.0, 80.0, 160.0}) {
    exact.emplace_back(F, 7.0 / F);
    shot.emplace_back(F, reference_bounds(F, 1.0, 1.0).shotnoise);
  }
  const ScalingFit a = powerlaw_fit(exact);
  CHECK(a.slope == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(a.intercept == doctest::Approx(std::log10(7.0)).epsilon(1e-12));
  CHECK(a.residual_rms < 1e-12);
  CHECK(powerlaw_fit(shot).slope == doctest::Approx(-0.5).epsilon(1e-12));

  std::vector<std::pair<double, double>> noisy = {{10, 0.2}, {20, 0.13}, {40, 0.05}, {80, 0.031}};
  const ScalingFit b = powerlaw_fit(noisy);
  for (auto& [F, d] : noisy) d *= 3.7;
  const ScalingFit c = powerlaw_fit(noisy);
  CHECK(c.slope == doctest::Approx(b.slope).epsilon(1e-12));
  CHECK(c.intercept == doctest::Approx(b.intercept + std::log10(3.7)).epsilon(1e-12));
  CHECK(c.residual_rms == doctest::Approx(b.residual_rms).epsilon(1e-9));
  CHECK(b.slope_stderr > 0.0);

  CHECK_THROWS_AS(powerlaw_fit({{10, 1}, {20, 0.5}}), std::invalid_argument);
  CHECK_THROWS_AS(powerlaw_fit({{10, 1}, {20, 0.0}, {30, 0.1}}), std::invalid_argument);
  CHECK_THROWS_AS(powerlaw_fit({{10, 1}, {10, 0.5}, {10, 0.1}}), std::invalid_argument);
}

TEST_CASE("saturation detection") {
  const Saturation s = detect_saturation(
      {row(20, 0.03), row(40, 0.01), row(60, 0.005), row(80, 0.006), row(100, 0.008)});
  CHECK(s.detected);
  CHECK(s.F_star == 60.0);
  CHECK(s.index == 2);
  const Saturation t = detect_saturation({row(20, 0.03), row(40, 0.01), row(60, 0.005), row(80, 0.006)});
  CHECK_FALSE(t.detected);
  const Saturation u = detect_saturation({row(20, 0.03), row(40, 0.01), row(60, 0.005)});
  CHECK_FALSE(u.detected);
  CHECK(u.F_star == 60.0);
  CHECK_FALSE(detect_saturation({}).detected);
}

TEST_CASE("unitary qfi point matches the shotnoise bound") {
  const QfiPoint p = run_qfi_point(25.0, 0.0, 0.0, small_ensemble(4));
  CHECK(p.valid);
  CHECK(p.samples.size() == 4);
  CHECK(p.estimate.deltaB == doctest::Approx(1.0 / std::sqrt(50.0)).epsilon(5e-3));
  CHECK(p.estimate.n_excluded == 0);
}

TEST_CASE("qfi point is independent of the thread count") {
  EnsembleConfig one = small_ensemble(6);
  EnsembleConfig three = one;
  three.threads = 3;
  const QfiPoint a = run_qfi_point(10.0, 1.0, 1e-3, one);
  const QfiPoint b = run_qfi_point(10.0, 1.0, 1e-3, three);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t j = 0; j < a.samples.size(); ++j) {
    CHECK(a.samples[j].stream_index == j);
    CHECK(a.samples[j].qfi == b.samples[j].qfi);
  }
  CHECK(a.estimate.mean == b.estimate.mean);
}

TEST_CASE("ensemble preconditions") {
  EnsembleConfig cfg = small_ensemble(1);
  CHECK_THROWS_AS(run_qfi_point(5.0, 1.0, 0.0, cfg), std::invalid_argument);
  cfg = small_ensemble(4);
  cfg.dB = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_ensemble(4);
  cfg.dt = 0.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("positivity failures are excluded and reported") {
  EnsembleConfig cfg = small_ensemble(4);
  cfg.engine.scheme = Scheme::euler;
  CHECK_THROWS_AS(run_qfi_point(20.0, 1.0, 1e-4, cfg), NumericalError);
}

TEST_CASE("fixed-MK unitary sweep reproduces shotnoise and is reproducible") {
  SweepConfig cfg;
  cfg.F_values = {1.0, 2.5, 6.0};
  cfg.ensemble = small_ensemble(3);
  cfg.M = 0.0;
  cfg.K = 0.0;
  const std::vector<SweepRow> rows = run_sweep(cfg);
  REQUIRE(rows.size() == 3);
  for (const SweepRow& r : rows) {
    CHECK(r.estimate.deltaB == doctest::Approx(r.refs.shotnoise).epsilon(1e-2));
    CHECK(r.N == 2.0 * r.F);
  }
  const std::vector<SweepRow> again = run_sweep(cfg);
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].estimate.mean == again[i].estimate.mean);

  cfg.F_values = {2.0, 1.0};
  CHECK_THROWS_AS(run_sweep(cfg), std::invalid_argument);
  cfg.F_values = {};
  CHECK_THROWS_AS(run_sweep(cfg), std::invalid_argument);
}

TEST_CASE("scaling-law sweep sets M and K per F") {
  SweepConfig cfg;
  cfg.F_values = {2.0, 4.0, 8.0};
  cfg.ensemble = small_ensemble(2);
  cfg.mode = SweepMode::scaling_law;
  const std::vector<SweepRow> rows = run_sweep(cfg);
  for (const SweepRow& r : rows) {
    CHECK(r.M == doctest::Approx(0.589 * std::pow(r.F, -0.77)).epsilon(1e-15));
    CHECK(r.K == r.M);
  }
}

TEST_CASE("optimize K on a single-point grid returns that point") {
  const KOptimum opt = optimize_K(3.0, 1.0, small_ensemble(4), KSearch{-3.0, -3.0, 1, 0.01});
  CHECK(opt.K_star == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(opt.grid.size() == 1);
  CHECK(opt.evaluations.size() == 1);
  CHECK(opt.qfi == opt.grid[0].second.mean);
  CHECK_THROWS_AS(optimize_K(3.0, 1.0, small_ensemble(4), KSearch{-3.0, -3.0, 3, 0.01}),
                  std::invalid_argument);
}

TEST_CASE("optimize K never returns less than a grid point or K = 0") {
  const EnsembleConfig cfg = small_ensemble(16);
  const KOptimum opt = optimize_K(4.0, 0.0, cfg, KSearch{-4.0, 0.0, 5, 0.1});
  for (const auto& [K, est] : opt.grid) CHECK(opt.qfi >= est.mean);
  CHECK(opt.evaluations.size() > opt.grid.size());
  const QfiPoint zero = run_qfi_point(4.0, 0.0, 0.0, cfg);
  CHECK(opt.qfi >= zero.estimate.mean - 2.0 * (opt.qfi_sem + zero.estimate.sem));
}

}  // TEST_SUITE
