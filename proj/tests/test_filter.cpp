#include <cmath>
#include <stdexcept>
#include <random>
#include <vector>

#include "doctest.h"
#include "dpmag/filter.hpp"
#include "dpmag/noise.hpp"
#include "dpmag/trajectory.hpp"
#include "test_support.hpp"

using namespace dpmag;
using dpmag::test::max_abs;

namespace {

const Complex I(0.0, 1.0);

// Independent dense evaluation of the generator, straight from the operator
// definitions.
Matrix comm(const Matrix& A, const Matrix& B) { return A * B - B * A; }
Matrix anti(const Matrix& A, const Matrix& B) { return A * B + B * A; }
Matrix lindblad(const Matrix& X, const Matrix& r) {
  const Matrix XdX = X.adjoint() * X;
  return X * r * X.adjoint() - 0.5 * (XdX * r + r * XdX);
}

FilterIncrement oracle(const DensityMatrix& state, const SpinOperators& ops, const FilterParams& p) {
  const Matrix& r = state.rho;
  const Complex fz = (ops.fz * r).trace();
  FilterIncrement inc;
  inc.drift = I * p.gamma * p.B * comm(ops.fy, r) +
              I * std::sqrt(p.K * p.M) * comm(ops.fy, anti(ops.fz, r)) + p.M * lindblad(ops.fz, r) +
              p.K * lindblad(ops.fy, r);
  inc.diffusion = std::sqrt(p.M) * (anti(ops.fz, r) - 2.0 * fz * r) +
                  I * std::sqrt(p.K) * comm(ops.fy, r);
  return inc;
}

FilterParams params(double B, double M, double K, double dt = 1e-3, double tau = 1.0) {
  return FilterParams::make(B, 1.0, M, K, tau, dt);
}

}  // namespace

TEST_SUITE("filter") {

TEST_CASE("filter params") {
  const FilterParams p = params(0.1, 1.0, 1e-4, 0.0010000001);
  CHECK(p.n_steps == 1000);
  CHECK(p.dt * p.n_steps == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(params(0.1, -1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(params(0.1, 1.0, -1e-4), std::invalid_argument);
  CHECK_THROWS_AS(params(0.1, 1.0, 0.0, 0.05), std::invalid_argument);
  CHECK(parse_scheme("kraus") == Scheme::kraus);
  CHECK(parse_scheme("euler") == Scheme::euler);
  CHECK(to_string(Scheme::euler) == "euler");
  CHECK_THROWS_AS(parse_scheme("milstein"), std::invalid_argument);
}

TEST_CASE("dissipator examples") {
  const SpinOperators ops = build_spin_operators(SpinQuantum(2.0));
  CHECK(max_abs(dissipator(ops.fz, z_eigenstate(ops, 2.0))) < 1e-14);
  const Matrix id = Matrix::Identity(ops.dim(), ops.dim());
  CHECK(max_abs(dissipator(id, test::random_density(ops.dim(), 3))) < 1e-14);

  // elementwise triple-product oracle for X = fz on the F = 2 coherent state
  const DensityMatrix rho = coherent_state_x(ops);
  const Matrix D = dissipator(ops.fz, rho);
  for (int i = 0; i < ops.dim(); ++i) {
    for (int j = 0; j < ops.dim(); ++j) {
      Complex v = 0.0;
      for (int k = 0; k < ops.dim(); ++k) {
        for (int l = 0; l < ops.dim(); ++l) {
          v += ops.fz(i, k) * rho.rho(k, l) * std::conj(ops.fz(j, l));
          Complex xdx = 0.0;
          for (int a = 0; a < ops.dim(); ++a) xdx += std::conj(ops.fz(a, i)) * ops.fz(a, k);
          if (l == j) v -= 0.5 * xdx * rho.rho(k, j);
          Complex xdx2 = 0.0;
          for (int a = 0; a < ops.dim(); ++a) xdx2 += std::conj(ops.fz(a, l)) * ops.fz(a, j);
          if (k == i) v -= 0.5 * rho.rho(i, l) * xdx2;
        }
      }
      CHECK(std::abs(D(i, j) - v) < 1e-13);
    }
  }
  // non-Hermitian jump operator
  const Matrix c = ops.fz + I * ops.fy;
  const DensityMatrix r = test::random_density(ops.dim(), 11);
  CHECK(max_abs(dissipator(c, r) - lindblad(c, r.rho)) < 1e-12);
}

TEST_CASE("measurement superoperator examples") {
  const SpinOperators ops = build_spin_operators(SpinQuantum(1.5));
  for (double m : {1.5, 0.5, -0.5, -1.5}) {
    CHECK(max_abs(measurement_superop(ops.fz, z_eigenstate(ops, m))) < 1e-14);
  }
  const Matrix id = Matrix::Identity(ops.dim(), ops.dim());
  CHECK(max_abs(measurement_superop(id, test::random_density(ops.dim(), 5))) < 1e-14);

  const SpinOperators one = build_spin_operators(SpinQuantum(1.0));
  const DensityMatrix rho = coherent_state_x(one);
  CHECK(max_abs(measurement_superop(one.fz, rho) - anti(one.fz, rho.rho)) < 1e-12);
}

TEST_CASE("filter increment matches the dense oracle") {
  for (double F : {0.5, 1.0, 2.5, 6.0}) {
    const SpinOperators ops = build_spin_operators(SpinQuantum(F));
    for (unsigned s = 0; s < 3; ++s) {
      CAPTURE(F);
      CAPTURE(s);
      const DensityMatrix rho = test::random_density(ops.dim(), 50 + s);
      const FilterParams p = params(0.37, 0.8, 0.05);
      const FilterIncrement got = filter_increment(rho, ops, p);
      const FilterIncrement want = oracle(rho, ops, p);
      CHECK(max_abs(got.drift - want.drift) < 1e-12 * (1 + F * F));
      CHECK(max_abs(got.diffusion - want.diffusion) < 1e-12 * (1 + F));
    }
  }
}

TEST_CASE("filter increment special cases") {
  const SpinOperators ops = build_spin_operators(SpinQuantum(3.0));
  const DensityMatrix rho = coherent_state_x(ops);

  const FilterIncrement larmor = filter_increment(rho, ops, params(0.1, 0.0, 0.0));
  CHECK(max_abs(larmor.drift - I * 0.1 * comm(ops.fy, rho.rho)) < 1e-14);
  CHECK(max_abs(larmor.diffusion) == 0.0);

  const FilterIncrement single = filter_increment(rho, ops, params(0.0, 0.7, 0.0));
  CHECK(max_abs(single.drift - 0.7 * dissipator(ops.fz, rho)) < 1e-12);
  CHECK(max_abs(single.diffusion - std::sqrt(0.7) * measurement_superop(ops.fz, rho)) < 1e-12);
}

TEST_CASE("hand-expanded 2x2 drift at F = 1/2") {
  const SpinOperators ops = build_spin_operators(SpinQuantum(0.5));
  const DensityMatrix rho = coherent_state_x(ops);
  const FilterIncrement inc = filter_increment(rho, ops, params(0.1, 1.0, 1e-4));
  // Larmor: diag(0.05, -0.05). Cross term: -sqrt(KM) fx. M D[fz]: -1/4 off
  // the diagonal. K D[fy] = -K/2 fx.
  Matrix drift(2, 2);
  drift << 0.05, -0.255025, -0.255025, -0.05;
  CHECK(max_abs(inc.drift - drift) < 1e-15);
  Matrix diffusion(2, 2);
  diffusion << 0.505, 0.0, 0.0, -0.505;
  CHECK(max_abs(inc.diffusion - diffusion) < 1e-15);
}

TEST_CASE("euler step is normalized and Hermitian") {
  const SpinOperators ops = build_spin_operators(SpinQuantum(2.0));
  std::mt19937_64 gen(9);
  const FilterParams p = params(0.1, 1.0, 0.01);
  std::normal_distribution<double> n(0.0, std::sqrt(p.dt));
  for (unsigned s = 0; s < 50; ++s) {
    const DensityMatrix rho = test::random_density(ops.dim(), 1000 + s, 1 + s % ops.dim());
    const EulerStepResult r = euler_step(rho, ops, p, n(gen));
    CHECK(std::abs(r.state.rho.trace() - 1.0) < 1e-15);
    CHECK(hermiticity_defect(r.state.rho) == 0.0);
    // trace drift before renormalization is O(dt^2)
    CHECK(std::abs(r.trace_before_renormalization - 1.0) <= 10 * p.dt * p.dt);
    CHECK(r.state.time == doctest::Approx(p.dt));
  }
  const EulerStepResult unchecked = euler_step(coherent_state_x(ops), ops, p, 0.0, false);
  CHECK(std::isnan(unchecked.min_eigenvalue));
  CHECK(unchecked.positivity_ok);
}

TEST_CASE("euler step reports negative eigenvalues without repairing them") {
  const SpinOperators ops = build_spin_operators(SpinQuantum(0.5));
  const FilterParams p = params(0.0, 1.0, 0.0, 1e-2);
  const DensityMatrix top = z_eigenstate(ops, 0.5);
  // A huge innovation pushes the Euler update out of the state space.
  const EulerStepResult r = euler_step(top, ops, p, -5.0);
  const EulerStepResult ok = euler_step(coherent_state_x(ops), ops, p, 0.01);
  CHECK(ok.positivity_ok);
  CHECK(ok.min_eigenvalue > -kPositivityTolerance);
  CHECK(r.trace_before_renormalization == doctest::Approx(1.0));
  const EulerStepResult bad = euler_step(coherent_state_x(ops), ops, p, -8.0);
  CHECK_FALSE(bad.positivity_ok);
  CHECK(bad.min_eigenvalue < -kPositivityTolerance);
  CHECK(bad.min_eigenvalue == doctest::Approx(min_eigenvalue(bad.state)));
}

TEST_CASE("Larmor precession with M = K = 0") {
  const double F = 10.0, B = 0.1;
  const SpinOperators ops = build_spin_operators(SpinQuantum(F));
  const FilterParams p = params(B, 0.0, 0.0, 1e-4);
  DensityMatrix rho = coherent_state_x(ops);
  for (int k = 0; k < p.n_steps; ++k) {
    EulerStepResult r = euler_step(rho, ops, p, 0.0, k % 1000 == 0);
    rho = std::move(r.state);
  }
  CHECK(expectation(ops.fz, rho).real() == doctest::Approx(F * std::sin(B)).epsilon(1e-3));

  StateVector s = coherent_state_vector_x(ops);
  DensityMatrix r = coherent_state_x(ops);
  double worst = 0.0;
  for (int k = 0; k < p.n_steps; ++k) {
    s = kraus_step(s, ops, p, 0.0);
    if (k % 10 == 0) {
      r = kraus_step(r, ops, params(B, 0.0, 0.0, 1e-3), 0.0);
      worst = std::max(worst, std::abs(purity(r) - 1.0));
    }
  }
  CHECK(expectation(ops.fz, s).real() == doctest::Approx(F * std::sin(B)).epsilon(1e-12));
  CHECK(worst < 1e-6);
}

TEST_CASE("euler purity drift over 1e4 unitary steps") {
  // Each Euler step adds dt^2 gamma^2 B^2 * 2 Var(fy) to the purity, so the
  // drift after tau is tau dt gamma^2 B^2 F for a coherent state.
  for (double F : {0.5, 10.0}) {
    CAPTURE(F);
    const SpinOperators ops = build_spin_operators(SpinQuantum(F));
    const FilterParams p = params(0.1, 0.0, 0.0, 1e-4);
    DensityMatrix rho = coherent_state_x(ops);
    double worst = 0.0;
    for (int k = 0; k < p.n_steps; ++k) {
      rho = euler_step(rho, ops, p, 0.0, false).state;
      worst = std::max(worst, std::abs(purity(rho) - 1.0));
    }
    const double predicted = 1.0 * p.dt * 0.01 * F;
    CHECK(worst == doctest::Approx(predicted).epsilon(0.05));
    if (F == 0.5) CHECK(worst < 1e-6);
  }
}

TEST_CASE("kraus step: vector and density forms agree") {
  const SpinOperators ops = build_spin_operators(SpinQuantum(4.5));
  const FilterParams p = params(0.2, 1.0, 0.03);
  StateVector psi = coherent_state_vector_x(ops);
  DensityMatrix rho = psi.to_density();
  const NoiseSource noise{3, 0};
  for (int k = 0; k < 300; ++k) {
    const double dz = 2 * std::sqrt(p.M) * expectation(ops.fz, psi).real() * p.dt +
                      std::sqrt(p.dt) * noise.normal(0, k);
    psi = kraus_step(psi, ops, p, dz);
    rho = kraus_step(rho, ops, p, dz);
  }
  CHECK(max_abs(psi.to_density().rho - rho.rho) < 1e-10);
  CHECK(std::abs(purity(rho) - 1.0) < 1e-10);
  CHECK(min_eigenvalue(rho) > -1e-12);
}

TEST_CASE("kraus step: first-order agreement with the filter generator") {
  const SpinOperators ops = build_spin_operators(SpinQuantum(1.5));
  const DensityMatrix rho = test::random_density(ops.dim(), 77);
  const FilterParams p = params(0.3, 0.9, 0.2, 1e-6, 1.0);
  const double fz = expectation(ops.fz, rho).real();
  // deterministic part: dZ equal to its mean, dW = 0
  const double dz = record_drift(p, fz);
  CHECK(dz == doctest::Approx(2 * std::sqrt(p.M) * fz * p.dt));
  const Matrix step = kraus_step(rho, ops, p, dz).rho - rho.rho;
  const FilterIncrement inc = filter_increment(rho, ops, p);
  // the Ito correction of the dW^2 terms contributes to the drift; with
  // dW = 0 the Kraus map reproduces drift * dt minus that correction, which
  // is what the generator with dW^2 -> 0 would give at O(dt). Compare the
  // dW-linear part instead by a symmetric difference in the noise.
  const double h = 1e-5;
  const Matrix plus = kraus_step(rho, ops, p, dz + h).rho;
  const Matrix minus = kraus_step(rho, ops, p, dz - h).rho;
  CHECK(max_abs((plus - minus) / (2 * h) - inc.diffusion) < 1e-4);
  // E over dW of the step reproduces drift dt to first order
  const double sdt = std::sqrt(p.dt);
  const Matrix mean_step = 0.5 * (kraus_step(rho, ops, p, dz + sdt).rho +
                                  kraus_step(rho, ops, p, dz - sdt).rho) -
                           rho.rho;
  CHECK(max_abs(mean_step / p.dt - inc.drift) < 1e-2);
  CHECK(max_abs(step) < 1e-4);
}

TEST_CASE("squeezing along the mean path is monotone") {
  // dW = 0 every step. The Kraus map carries the dW^2 = dt correction and
  // squeezes; literal Euler drops it and leaves Var(fz) unchanged.
  const FilterParams p = params(0.0, 1.0, 0.0, 1e-3);
  const std::vector<double> zeros(p.n_steps, 0.0);
  {
    const SpinOperators ops = build_spin_operators(SpinQuantum(10.0));
    const TrajectoryOutput out = filter_with_innovations(coherent_state_x(ops), ops, p, zeros);
    REQUIRE(out.valid);
    REQUIRE(out.var_fz.size() == static_cast<std::size_t>(p.n_steps + 1));
    for (std::size_t k = 1; k < out.var_fz.size(); ++k) CHECK(out.var_fz[k] < out.var_fz[k - 1]);
    // Gaussian limit: V(t) = V0 / (1 + 4 M V0 t)
    CHECK(out.var_fz.back() == doctest::Approx(5.0 / 21.0).epsilon(0.05));
  }
  {
    const SpinOperators ops = build_spin_operators(SpinQuantum(2.0));
    EngineOptions opt;
    opt.scheme = Scheme::euler;
    const TrajectoryOutput out =
        filter_with_innovations(coherent_state_x(ops), ops, p, zeros, opt);
    REQUIRE(out.valid);
    for (std::size_t k = 1; k < out.var_fz.size(); ++k) {
      CHECK(out.var_fz[k] <= out.var_fz[k - 1] + 1e-12);
    }
  }
}

TEST_CASE("euler strong convergence on refined Wiener paths") {
  const SpinOperators ops = build_spin_operators(SpinQuantum(2.0));
  const DensityMatrix rho0 = coherent_state_x(ops);
  const int base = 32;
  auto fz_at_tau = [&](const std::vector<double>& dW) {
    const FilterParams p =
        FilterParams::make(0.5, 1.0, 1.0, 0.05, 1.0, 1.0 / static_cast<double>(dW.size()));
    EngineOptions opt;
    opt.scheme = Scheme::euler;
    opt.series_stride = 0;
    opt.positivity_stride = 0;
    return filter_with_innovations(rho0, ops, p, dW, opt).fz.back();
  };
  double coarse = 0.0, fine = 0.0;
  const int paths = 100;
  for (int j = 0; j < paths; ++j) {
    const NoiseSource noise{2024, static_cast<std::uint64_t>(j)};
    const double ref = fz_at_tau(wiener_increments(noise, 1.0, base << 7, base));
    coarse += std::abs(fz_at_tau(wiener_increments(noise, 1.0, base << 2, base)) - ref);
    fine += std::abs(fz_at_tau(wiener_increments(noise, 1.0, base << 3, base)) - ref);
  }
  const double ratio = coarse / fine;
  MESSAGE("strong error ratio for dt -> dt/2: " << ratio);
  CHECK(ratio > std::sqrt(2.0) * 0.7);
  CHECK(ratio < std::sqrt(2.0) * 1.3);
}

}  // TEST_SUITE
