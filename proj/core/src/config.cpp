#include "dpmag/config.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include "dpmag/csv.hpp"
#include "dpmag/error.hpp"
#include "json.hpp"

#ifndef DPMAG_VERSION
#define DPMAG_VERSION "0.0.0"
#endif

namespace dpmag {

namespace {

std::string num(double x) { return csv::format_double(x); }

std::string list(const std::vector<double>& xs) {
  std::string out = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += num(xs[i]);
  }
  return out + "]";
}

}  // namespace

std::vector<std::pair<std::string, std::string>> RunConfig::to_key_values() const {
  return {
      {"F", num(F)},
      {"B", num(B)},
      {"gamma", num(gamma)},
      {"M", num(M)},
      {"K", num(K)},
      {"tau", num(tau)},
      {"dt", num(dt)},
      {"dB", num(dB)},
      {"seed", std::to_string(seed)},
      {"stream_index", std::to_string(stream_index)},
      {"n_trajectories", std::to_string(n_trajectories)},
      {"sharing", sharing},
      {"scheme", scheme},
      {"positivity_stride", std::to_string(positivity_stride)},
      {"noise_base_steps", std::to_string(noise_base_steps)},
      {"max_dim", std::to_string(max_dim)},
      {"max_exclusion_rate", num(max_exclusion_rate)},
      {"F_values", list(F_values)},
      {"sweep_mode", sweep_mode},
      {"c", num(c)},
      {"alpha", num(alpha)},
      {"spin_per_atom", num(spin_per_atom)},
      {"log10_K_min", num(log10_K_min)},
      {"log10_K_max", num(log10_K_max)},
      {"K_grid_points", std::to_string(K_grid_points)},
      {"log10_K_tolerance", num(log10_K_tolerance)},
      {"input", input},
  };
}

EngineOptions RunConfig::engine_options() const {
  EngineOptions opt;
  opt.scheme = parse_scheme(scheme);
  opt.positivity_stride = positivity_stride;
  opt.noise_base_steps = noise_base_steps;
  if (positivity_stride < 0 || noise_base_steps < 0) {
    throw ConfigError("strides and noise_base_steps must be >= 0");
  }
  return opt;
}

EnsembleConfig RunConfig::ensemble() const {
  EnsembleConfig cfg;
  cfg.B = B;
  cfg.gamma = gamma;
  cfg.tau = tau;
  cfg.dt = dt;
  cfg.dB = dB;
  cfg.n_trajectories = n_trajectories;
  cfg.seed = seed;
  cfg.sharing = parse_noise_sharing(sharing);
  cfg.engine = engine_options();
  cfg.engine.series_stride = 0;
  cfg.threads = threads;
  cfg.max_dim = max_dim;
  cfg.max_exclusion_rate = max_exclusion_rate;
  cfg.validate();
  return cfg;
}

SweepConfig RunConfig::sweep() const {
  SweepConfig cfg;
  cfg.F_values = F_values;
  cfg.ensemble = ensemble();
  cfg.mode = parse_sweep_mode(sweep_mode);
  cfg.M = M;
  cfg.K = K;
  cfg.c = c;
  cfg.alpha = alpha;
  cfg.spin_per_atom = spin_per_atom;
  cfg.validate();
  return cfg;
}

KSearch RunConfig::k_search() const {
  return KSearch{log10_K_min, log10_K_max, K_grid_points, log10_K_tolerance};
}

FilterParams RunConfig::filter_params() const { return FilterParams::make(B, gamma, M, K, tau, dt); }

std::filesystem::path RunConfig::resolved_output_dir() const {
  if (!output_dir.empty()) return output_dir;
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') return env;
  return std::filesystem::current_path();
}

std::string tool_version() { return DPMAG_VERSION; }

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["tool_version"] = m.tool_version;
  j["timestamp"] = m.timestamp;
  j["seed"] = m.seed;
  j["units"] = {{"hbar", "1"},
                {"B", "units of gamma"},
                {"M", "1/tau"},
                {"K", "1/tau"},
                {"t", "tau"},
                {"dt", "tau"}};
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m.config) cfg[k] = v;
  j["config"] = cfg;
  j["outputs"] = m.outputs;
  nlohmann::ordered_json excl = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m.exclusions) excl[k] = v;
  j["exclusions"] = excl;

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open manifest " + path.string());
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid manifest " + path.string() + ": " + e.what());
  }
  Manifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.tool_version = j.value("tool_version", "");
    m.timestamp = j.value("timestamp", "");
    m.seed = j.value("seed", std::uint64_t{0});
    for (const auto& [k, v] : j.at("config").items()) m.config.emplace_back(k, v.get<std::string>());
    if (j.contains("outputs")) m.outputs = j["outputs"].get<std::vector<std::string>>();
    if (j.contains("exclusions")) {
      for (const auto& [k, v] : j["exclusions"].items()) m.exclusions[k] = v.get<long long>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed manifest " + path.string() + ": " + e.what());
  }
  return m;
}

}  // namespace dpmag
