#include "dpmag/trajectory.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dpmag {

namespace {

constexpr double kPureTolerance = 1e-10;

// Source of the per-step record increment.
struct InnovationDrive {
  const std::vector<double>& dW;
  double dz(int k, double predicted) const { return predicted + dW[k]; }
};

struct RecordDrive {
  const std::vector<double>& record;
  double dz(int k, double) const { return record[k]; }
};

double fz_mean(const StateVector& s, const SpinOperators& ops) {
  return (ops.m.array() * s.psi.array().abs2()).sum();
}

double fz_mean(const DensityMatrix& rho, const SpinOperators& ops) {
  return (ops.m.array() * rho.rho.diagonal().real().array()).sum();
}

bool stride_hit(int stride, int step, int n_steps) {
  return step == n_steps || (stride > 0 && step % stride == 0);
}

void push_moments(TrajectoryOutput& out, double t, const Moments& mo) {
  out.t.push_back(t);
  out.fx.push_back(mo.fx);
  out.fy.push_back(mo.fy);
  out.fz.push_back(mo.fz);
  out.var_fz.push_back(mo.var_fz);
  out.purity.push_back(mo.purity);
}

template <typename Drive>
TrajectoryOutput run_vector(StateVector state, const SpinOperators& ops, const FilterParams& p,
                            const Drive& drive, const EngineOptions& opt) {
  TrajectoryOutput out;
  out.innovations.reserve(p.n_steps);
  out.dz.reserve(p.n_steps);

  const double t0 = state.time;
  Moments mo = moments(state, ops);
  push_moments(out, state.time, mo);
  for (int k = 0; k < p.n_steps; ++k) {
    const double predicted = record_drift(p, mo.fz);
    const double dz = drive.dz(k, predicted);
    out.dz.push_back(dz);
    out.innovations.push_back(dz - predicted);
    state = kraus_step(state, ops, p, dz);

    const int step = k + 1;
    state.time = t0 + step * p.dt;
    if (!state.psi.allFinite()) {
      out.valid = false;
      out.first_invalid_step = step;
      out.min_eigenvalue = std::numeric_limits<double>::quiet_NaN();
      break;
    }
    const bool want_series = stride_hit(opt.series_stride, step, p.n_steps);
    // <fz> is needed every step for the next record drift.
    if (want_series) {
      mo = moments(state, ops);
      push_moments(out, state.time, mo);
    } else {
      mo.fz = fz_mean(state, ops);
    }
    if (opt.snapshot_stride > 0 && step % opt.snapshot_stride == 0) out.snapshots.emplace_back(state);
  }
  out.final_state = std::move(state);
  return out;
}

template <typename Drive>
TrajectoryOutput run_density(DensityMatrix state, const SpinOperators& ops, const FilterParams& p,
                             const Drive& drive, const EngineOptions& opt) {
  TrajectoryOutput out;
  out.innovations.reserve(p.n_steps);
  out.dz.reserve(p.n_steps);
  out.min_eigenvalue = std::numeric_limits<double>::infinity();

  auto flag = [&](double lambda, int step) {
    out.min_eigenvalue = std::min(out.min_eigenvalue, lambda);
    if (lambda < -kPositivityTolerance && out.valid) {
      out.valid = false;
      out.first_invalid_step = step;
    }
  };

  const double t0 = state.time;
  Moments mo = moments(state, ops);
  push_moments(out, state.time, mo);
  for (int k = 0; k < p.n_steps; ++k) {
    const double predicted = record_drift(p, mo.fz);
    const double dz = drive.dz(k, predicted);
    const double dW = dz - predicted;
    out.dz.push_back(dz);
    out.innovations.push_back(dW);

    const int step = k + 1;
    const bool check = stride_hit(opt.positivity_stride, step, p.n_steps);
    if (opt.scheme == Scheme::euler) {
      EulerStepResult r = euler_step(state, ops, p, dW, check);
      state = std::move(r.state);
      if (check) flag(r.min_eigenvalue, step);
    } else {
      state = kraus_step(state, ops, p, dz);
      if (check) flag(min_eigenvalue(state), step);
    }
    state.time = t0 + step * p.dt;
    if (!state.rho.allFinite()) {
      out.valid = false;
      if (out.first_invalid_step < 0) out.first_invalid_step = step;
      break;
    }

    if (stride_hit(opt.series_stride, step, p.n_steps)) {
      mo = moments(state, ops);
      push_moments(out, state.time, mo);
    } else {
      mo.fz = fz_mean(state, ops);
    }
    if (opt.snapshot_stride > 0 && step % opt.snapshot_stride == 0) out.snapshots.emplace_back(state);
  }
  out.final_state = std::move(state);
  return out;
}

template <typename Drive>
TrajectoryOutput run(const InitialState& rho0, const SpinOperators& ops, const FilterParams& p,
                     const Drive& drive, const EngineOptions& opt) {
  if (rho0.dim() != ops.dim()) throw std::invalid_argument("initial state dimension mismatch");
  p.validate();
  const bool vector_path = opt.scheme == Scheme::kraus &&
                           opt.representation == Representation::automatic &&
                           rho0.vector().has_value();
  if (vector_path) return run_vector(*rho0.vector(), ops, p, drive, opt);
  return run_density(rho0.density(), ops, p, drive, opt);
}

}  // namespace

std::string_view to_string(NoiseSharing s) {
  return s == NoiseSharing::shared_innovations ? "innovations" : "record";
}

NoiseSharing parse_noise_sharing(std::string_view s) {
  if (s == "innovations") return NoiseSharing::shared_innovations;
  if (s == "record") return NoiseSharing::shared_record;
  throw std::invalid_argument("unknown noise sharing '" + std::string(s) +
                              "' (expected innovations|record)");
}

InitialState::InitialState(const DensityMatrix& rho) : rho_(rho) {
  if (rho_.dim() > 0 && std::abs(purity(rho_) - 1.0) <= kPureTolerance) {
    psi_ = dominant_state(rho_);
  }
}

InitialState::InitialState(const StateVector& psi) : rho_(psi.to_density()), psi_(psi) {
  psi_->psi.normalize();
}

Moments moments(const StateVector& s, const SpinOperators& ops) {
  const RealVector prob = s.psi.array().abs2();
  Moments mo;
  mo.fz = fz_mean(s, ops);
  mo.var_fz = (ops.m.array().square() * prob.array()).sum() - mo.fz * mo.fz;
  const Eigen::Index d = s.psi.size();
  if (d > 1) {
    // rho_{k,k+1} = psi_k conj(psi_{k+1})
    const Vector adj =
        (s.psi.head(d - 1).array() * s.psi.tail(d - 1).conjugate().array()).matrix();
    mo.fx = (ops.ladder.array() * adj.real().array()).sum();
    mo.fy = -(ops.ladder.array() * adj.imag().array()).sum();
  }
  mo.purity = 1.0;
  return mo;
}

Moments moments(const DensityMatrix& rho, const SpinOperators& ops) {
  const RealVector prob = rho.rho.diagonal().real();
  Moments mo;
  mo.fz = fz_mean(rho, ops);
  mo.var_fz = (ops.m.array().square() * prob.array()).sum() - mo.fz * mo.fz;
  const Eigen::Index d = rho.rho.rows();
  if (d > 1) {
    const Vector adj = rho.rho.diagonal(1);  // rho_{k,k+1}
    mo.fx = (ops.ladder.array() * adj.real().array()).sum();
    mo.fy = -(ops.ladder.array() * adj.imag().array()).sum();
  }
  mo.purity = purity(rho);
  return mo;
}

DensityMatrix to_density(const std::variant<StateVector, DensityMatrix>& s) {
  if (const auto* v = std::get_if<StateVector>(&s)) return v->to_density();
  return std::get<DensityMatrix>(s);
}

DensityMatrix TrajectoryOutput::final_density() const { return to_density(final_state); }

std::pair<MeasurementRecord, TrajectoryOutput> generate_record(const InitialState& rho0,
                                                               const SpinOperators& ops,
                                                               const FilterParams& p,
                                                               const NoiseSource& noise,
                                                               const EngineOptions& opt) {
  const std::vector<double> dW = wiener_increments(noise, p.tau, p.n_steps, opt.noise_base_steps);
  TrajectoryOutput out = run(rho0, ops, p, InnovationDrive{dW}, opt);
  MeasurementRecord record{out.dz, p.dt, p, noise};
  if (!out.valid) {
    // Pad so the record keeps its n_steps contract; the output is flagged.
    record.dz.resize(p.n_steps, 0.0);
  }
  return {std::move(record), std::move(out)};
}

TrajectoryOutput filter_along_record(const InitialState& rho0, const SpinOperators& ops,
                                     const FilterParams& p, const MeasurementRecord& record,
                                     const EngineOptions& opt) {
  if (static_cast<int>(record.dz.size()) != p.n_steps) {
    throw std::invalid_argument("filter_along_record: record length " +
                                std::to_string(record.dz.size()) + " != n_steps " +
                                std::to_string(p.n_steps));
  }
  if (std::abs(record.dt - p.dt) > 1e-15 * std::max(1.0, p.dt)) {
    throw std::invalid_argument("filter_along_record: record dt differs from filter dt");
  }
  return run(rho0, ops, p, RecordDrive{record.dz}, opt);
}

TrajectoryOutput filter_with_innovations(const InitialState& rho0, const SpinOperators& ops,
                                         const FilterParams& p, const std::vector<double>& dW,
                                         const EngineOptions& opt) {
  if (static_cast<int>(dW.size()) != p.n_steps) {
    throw std::invalid_argument("filter_with_innovations: length mismatch");
  }
  return run(rho0, ops, p, InnovationDrive{dW}, opt);
}

TripleOutput coupled_triple(const InitialState& rho0, const SpinOperators& ops,
                            const FilterParams& p, double dB, const NoiseSource& noise,
                            NoiseSharing sharing, const EngineOptions& opt) {
  if (!(dB > 0.0)) throw std::invalid_argument("coupled_triple: dB must be positive");
  TripleOutput out;
  out.dB = dB;
  out.sharing = sharing;
  const FilterParams p_plus = p.with_B(p.B + dB);
  const FilterParams p_minus = p.with_B(p.B - dB);

  if (sharing == NoiseSharing::shared_innovations) {
    const std::vector<double> dW = wiener_increments(noise, p.tau, p.n_steps, opt.noise_base_steps);
    out.reference = run(rho0, ops, p, InnovationDrive{dW}, opt);
    out.plus = run(rho0, ops, p_plus, InnovationDrive{dW}, opt);
    out.minus = run(rho0, ops, p_minus, InnovationDrive{dW}, opt);
    out.record = MeasurementRecord{out.reference.dz, p.dt, p, noise};
    out.record.dz.resize(p.n_steps, 0.0);
  } else {
    auto [record, reference] = generate_record(rho0, ops, p, noise, opt);
    out.record = std::move(record);
    out.reference = std::move(reference);
    out.plus = filter_along_record(rho0, ops, p_plus, out.record, opt);
    out.minus = filter_along_record(rho0, ops, p_minus, out.record, opt);
  }
  return out;
}

}  // namespace dpmag
