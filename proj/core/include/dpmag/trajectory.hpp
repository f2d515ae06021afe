#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "dpmag/filter.hpp"
#include "dpmag/noise.hpp"
#include "dpmag/spin.hpp"

namespace dpmag {

/// How the B +/- dB filters of a coupled triple see the noise.
///
/// shared_innovations: all three are driven by the same Wiener increments
/// dW; each builds its own record dZ = 2 sqrt(M) <fz> dt + dW.
/// shared_record: the B filter generates dZ and the other two filter that
/// record, computing their own innovations.
enum class NoiseSharing { shared_innovations, shared_record };

std::string_view to_string(NoiseSharing s);
NoiseSharing parse_noise_sharing(std::string_view s);

enum class Representation {
  automatic,  // propagate a state vector when the initial state is pure
  density,    // always propagate the full density matrix
};

struct EngineOptions {
  Scheme scheme = Scheme::kraus;
  Representation representation = Representation::automatic;
  int series_stride = 1;      // 0 keeps only t = 0 and t = tau
  int snapshot_stride = 0;    // 0 disables intermediate snapshots
  int positivity_stride = 1;  // density path: eigenvalue check cadence; 0 = final only
  int noise_base_steps = 0;   // coarse Wiener grid; 0 = p.n_steps
};

/// Initial condition, with the pure-state vector cached when available.
class InitialState {
 public:
  InitialState(const DensityMatrix& rho);  // NOLINT(google-explicit-constructor)
  InitialState(const StateVector& psi);    // NOLINT(google-explicit-constructor)

  const DensityMatrix& density() const { return rho_; }
  const std::optional<StateVector>& vector() const { return psi_; }
  int dim() const { return rho_.dim(); }

 private:
  DensityMatrix rho_;
  std::optional<StateVector> psi_;
};

struct MeasurementRecord {
  std::vector<double> dz;
  double dt = 0.0;
  FilterParams params_used;
  NoiseSource noise;
};

struct Moments {
  double fx = 0.0;
  double fy = 0.0;
  double fz = 0.0;
  double var_fz = 0.0;
  double purity = 1.0;
};

Moments moments(const StateVector& s, const SpinOperators& ops);
Moments moments(const DensityMatrix& rho, const SpinOperators& ops);

struct TrajectoryOutput {
  std::vector<double> t;
  std::vector<double> fx;
  std::vector<double> fy;
  std::vector<double> fz;
  std::vector<double> var_fz;
  std::vector<double> purity;

  /// Innovations dW the filter computed at each step.
  std::vector<double> innovations;
  /// Record increments dZ consumed (or produced) at each step.
  std::vector<double> dz;

  std::vector<std::variant<StateVector, DensityMatrix>> snapshots;
  std::variant<StateVector, DensityMatrix> final_state;

  bool valid = true;
  int first_invalid_step = -1;
  double min_eigenvalue = 0.0;  // lowest value seen by the positivity checks

  DensityMatrix final_density() const;
  const StateVector* final_vector() const { return std::get_if<StateVector>(&final_state); }
};

DensityMatrix to_density(const std::variant<StateVector, DensityMatrix>& s);

/// Runs the filter at the true parameters, drawing dW from `noise`, and
/// returns the record dZ = 2 sqrt(M) <fz> dt + dW with the trajectory.
std::pair<MeasurementRecord, TrajectoryOutput> generate_record(const InitialState& rho0,
                                                               const SpinOperators& ops,
                                                               const FilterParams& p,
                                                               const NoiseSource& noise,
                                                               const EngineOptions& opt = {});

/// Filters a given record; p.B may differ from record.params_used.B.
TrajectoryOutput filter_along_record(const InitialState& rho0, const SpinOperators& ops,
                                     const FilterParams& p, const MeasurementRecord& record,
                                     const EngineOptions& opt = {});

/// Drives the filter directly with innovations dW.
TrajectoryOutput filter_with_innovations(const InitialState& rho0, const SpinOperators& ops,
                                         const FilterParams& p, const std::vector<double>& dW,
                                         const EngineOptions& opt = {});

struct TripleOutput {
  MeasurementRecord record;
  TrajectoryOutput reference;  // at B
  TrajectoryOutput plus;       // at B + dB
  TrajectoryOutput minus;      // at B - dB
  double dB = 0.0;
  NoiseSharing sharing = NoiseSharing::shared_innovations;

  bool valid() const { return reference.valid && plus.valid && minus.valid; }
};

TripleOutput coupled_triple(const InitialState& rho0, const SpinOperators& ops,
                            const FilterParams& p, double dB, const NoiseSource& noise,
                            NoiseSharing sharing = NoiseSharing::shared_innovations,
                            const EngineOptions& opt = {});

}  // namespace dpmag
