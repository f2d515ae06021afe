#pragma once

// Run configuration shared by all CLI subcommands, and the run manifest
// written next to every CSV.
//
// Config files are flat `key = value` lines (`#` starts a comment); lists
// use `[a, b, c]`. Command-line `--key value` overrides win.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dpmag/experiments.hpp"

namespace dpmag {

inline constexpr const char* kOutputDirEnv = "DPMAG_OUTPUT_DIR";

struct RunConfig {
  // physics
  double F = 100.0;
  double B = 0.1;
  double gamma = 1.0;
  double M = 1.0;
  double K = 1e-4;
  double tau = 1.0;
  double dt = 1e-3;

  // estimation
  double dB = 1e-6;
  std::uint64_t seed = 1;
  std::uint64_t stream_index = 0;
  int n_trajectories = 100;
  std::string sharing = "innovations";
  std::string scheme = "kraus";
  int positivity_stride = 1;
  int noise_base_steps = 0;
  int max_dim = kDefaultMaxDimension;
  double max_exclusion_rate = 0.01;
  int threads = 0;  // not part of the reproducibility contract

  // sweeps
  std::vector<double> F_values;
  std::string sweep_mode = "fixed-MK";
  double c = 0.589;
  double alpha = 0.77;
  double spin_per_atom = 0.5;

  // K optimization
  double log10_K_min = -6.0;
  double log10_K_max = 0.0;
  int K_grid_points = 13;
  double log10_K_tolerance = 0.01;

  // io
  std::string input;
  std::string output_dir;

  /// Every reproducibility-relevant key with its value rendered so that
  /// parsing it back yields the identical number.
  std::vector<std::pair<std::string, std::string>> to_key_values() const;

  EngineOptions engine_options() const;
  EnsembleConfig ensemble() const;
  SweepConfig sweep() const;
  KSearch k_search() const;
  FilterParams filter_params() const;

  /// output_dir, else $DPMAG_OUTPUT_DIR, else the current directory.
  std::filesystem::path resolved_output_dir() const;
};

struct Manifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> config;
  std::uint64_t seed = 0;
  std::string timestamp;
  std::string tool_version;
  std::vector<std::string> outputs;
  std::map<std::string, long long> exclusions;  // keyed by F
};

std::string tool_version();
std::string utc_timestamp();

void write_manifest(const std::filesystem::path& path, const Manifest& m);
Manifest read_manifest(const std::filesystem::path& path);

}  // namespace dpmag
