#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "dpmag/cli.hpp"
#include "dpmag/csv.hpp"
#include "dpmag/error.hpp"
#include "json.hpp"

namespace dpmag {

namespace {

namespace fs = std::filesystem;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(std::string_view key, std::string_view text) {
  const std::string s = trim(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
    throw ConfigError(std::string(key) + ": expected a number, got '" + s + "'");
  }
  return v;
}

long long parse_integer(std::string_view key, std::string_view text) {
  const std::string s = trim(text);
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
    throw ConfigError(std::string(key) + ": expected an integer, got '" + s + "'");
  }
  return v;
}

int parse_int(std::string_view key, std::string_view text) {
  const long long v = parse_integer(key, text);
  if (v < -2147483647LL || v > 2147483647LL) throw ConfigError(std::string(key) + ": out of range");
  return static_cast<int>(v);
}

std::uint64_t parse_u64(std::string_view key, std::string_view text) {
  const std::string s = trim(text);
  if (!s.empty() && s[0] == '-') throw ConfigError(std::string(key) + ": must be nonnegative");
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
    throw ConfigError(std::string(key) + ": expected an unsigned integer, got '" + s + "'");
  }
  return v;
}

std::vector<double> parse_list(std::string_view key, std::string_view text) {
  std::string s = trim(text);
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']') throw ConfigError(std::string(key) + ": unterminated list");
    s = s.substr(1, s.size() - 2);
  }
  std::vector<double> out;
  if (trim(s).empty()) return out;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, ',')) out.push_back(parse_double(key, item));
  return out;
}

using Setter = std::function<void(RunConfig&, std::string_view)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = [] {
    std::vector<std::pair<std::string, Setter>> t;
    auto real = [&](const char* k, double RunConfig::*f) {
      t.emplace_back(k, [k, f](RunConfig& c, std::string_view v) { c.*f = parse_double(k, v); });
    };
    auto integer = [&](const char* k, int RunConfig::*f) {
      t.emplace_back(k, [k, f](RunConfig& c, std::string_view v) { c.*f = parse_int(k, v); });
    };
    auto u64 = [&](const char* k, std::uint64_t RunConfig::*f) {
      t.emplace_back(k, [k, f](RunConfig& c, std::string_view v) { c.*f = parse_u64(k, v); });
    };
    auto text = [&](const char* k, std::string RunConfig::*f) {
      t.emplace_back(k, [f](RunConfig& c, std::string_view v) { c.*f = trim(v); });
    };
    real("F", &RunConfig::F);
    real("B", &RunConfig::B);
    real("gamma", &RunConfig::gamma);
    real("M", &RunConfig::M);
    real("K", &RunConfig::K);
    real("tau", &RunConfig::tau);
    real("dt", &RunConfig::dt);
    real("dB", &RunConfig::dB);
    u64("seed", &RunConfig::seed);
    u64("stream_index", &RunConfig::stream_index);
    integer("n_trajectories", &RunConfig::n_trajectories);
    text("sharing", &RunConfig::sharing);
    text("scheme", &RunConfig::scheme);
    integer("positivity_stride", &RunConfig::positivity_stride);
    integer("noise_base_steps", &RunConfig::noise_base_steps);
    integer("max_dim", &RunConfig::max_dim);
    real("max_exclusion_rate", &RunConfig::max_exclusion_rate);
    integer("threads", &RunConfig::threads);
    t.emplace_back("F_values",
                   [](RunConfig& c, std::string_view v) { c.F_values = parse_list("F_values", v); });
    text("sweep_mode", &RunConfig::sweep_mode);
    real("c", &RunConfig::c);
    real("alpha", &RunConfig::alpha);
    real("spin_per_atom", &RunConfig::spin_per_atom);
    real("log10_K_min", &RunConfig::log10_K_min);
    real("log10_K_max", &RunConfig::log10_K_max);
    integer("K_grid_points", &RunConfig::K_grid_points);
    real("log10_K_tolerance", &RunConfig::log10_K_tolerance);
    text("input", &RunConfig::input);
    text("output_dir", &RunConfig::output_dir);
    return t;
  }();
  return table;
}

struct Outputs {
  fs::path dir;
  std::vector<std::string> files;

  fs::path add(const std::string& name) {
    files.push_back(name);
    return dir / name;
  }
};

Outputs prepare_outputs(const RunConfig& cfg) {
  Outputs o;
  o.dir = cfg.resolved_output_dir();
  std::error_code ec;
  fs::create_directories(o.dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + o.dir.string());
  return o;
}

void finish(const std::string& command, const RunConfig& cfg, Outputs& o,
            std::map<std::string, long long> exclusions, std::ostream& out) {
  Manifest m;
  m.command = command;
  m.config = cfg.to_key_values();
  m.seed = cfg.seed;
  m.timestamp = utc_timestamp();
  m.tool_version = tool_version();
  m.outputs = o.files;
  m.exclusions = std::move(exclusions);
  const fs::path path = o.dir / (command + ".manifest.json");
  write_manifest(path, m);
  for (const auto& f : o.files) out << (o.dir / f).string() << '\n';
  out << path.string() << '\n';
}

int cmd_trajectory(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const SpinOperators ops = build_spin_operators(SpinQuantum(cfg.F, cfg.max_dim));
  const InitialState rho0(coherent_state_vector_x(ops));
  const FilterParams p_double = cfg.filter_params();
  const FilterParams p_single = p_double.with_K(0.0);
  EngineOptions opt = cfg.engine_options();
  opt.series_stride = 1;
  const NoiseSource noise{cfg.seed, cfg.stream_index};

  const auto [rec_d, dbl] = generate_record(rho0, ops, p_double, noise, opt);
  const auto [rec_s, sgl] = generate_record(rho0, ops, p_single, noise, opt);

  Outputs o = prepare_outputs(cfg);
  csv::Table table({"t", "fz_double", "var_fz_double", "fz_single", "var_fz_single", "purity_double",
                    "purity_single"});
  for (std::size_t i = 0; i < dbl.t.size(); ++i) {
    table.add_row({dbl.t[i], dbl.fz[i], dbl.var_fz[i], sgl.fz[i], sgl.var_fz[i], dbl.purity[i],
                   sgl.purity[i]});
  }
  table.write(o.add("trajectory.csv"));
  const long long bad = (dbl.valid ? 0 : 1) + (sgl.valid ? 0 : 1);
  finish("trajectory", cfg, o, {{csv::format_double(cfg.F), bad}}, out);

  if (bad > 0) {
    err << "error: positivity check failed (min eigenvalue "
        << std::min(dbl.min_eigenvalue, sgl.min_eigenvalue) << ")\n";
    return kExitNumerical;
  }
  return kExitOk;
}

int cmd_qfi(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const QfiPoint point = run_qfi_point(cfg.F, cfg.M, cfg.K, cfg.ensemble());
  Outputs o = prepare_outputs(cfg);

  csv::Table samples({"stream_index", "conditional_qfi", "purity", "valid"});
  for (const QfiSample& s : point.samples) {
    samples.add_row({static_cast<long long>(s.stream_index), s.qfi, s.purity,
                     static_cast<long long>(s.valid ? 1 : 0)});
  }
  samples.write(o.add("qfi_samples.csv"));

  const QfiEstimate& e = point.estimate;
  csv::Table summary({"mean", "sem", "deltaB", "deltaB_err_sem", "deltaB_err_raw"});
  summary.add_row({e.mean, e.sem, e.deltaB, e.deltaB_err, e.deltaB_err_raw});
  summary.write(o.add("qfi_summary.csv"));
  finish("qfi", cfg, o, {{csv::format_double(cfg.F), static_cast<long long>(e.n_excluded)}}, out);

  if (!point.valid) {
    err << "error: exclusion rate " << e.exclusion_rate() << " exceeds " << cfg.max_exclusion_rate
        << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const std::vector<SweepRow> rows = run_sweep(cfg.sweep());
  Outputs o = prepare_outputs(cfg);

  csv::Table table({"F", "N", "M", "K", "qfi_mean", "qfi_sem", "deltaB", "deltaB_err",
                    "shotnoise_ref", "heisenberg_ref", "twobody_ref", "excluded"});
  std::map<std::string, long long> exclusions;
  bool ok = true;
  for (const SweepRow& r : rows) {
    const auto excluded = static_cast<long long>(r.estimate.n_excluded);
    table.add_row({r.F, r.N, r.M, r.K, r.estimate.mean, r.estimate.sem, r.estimate.deltaB,
                   r.estimate.deltaB_err, r.refs.shotnoise, r.refs.heisenberg, r.refs.twobody,
                   excluded});
    exclusions[csv::format_double(r.F)] = excluded;
    if (!r.valid) {
      err << "error: F = " << r.F << ": exclusion rate " << r.estimate.exclusion_rate()
          << " exceeds " << cfg.max_exclusion_rate << '\n';
      ok = false;
    }
  }
  table.write(o.add("sweep.csv"));
  finish("sweep", cfg, o, std::move(exclusions), out);
  return ok ? kExitOk : kExitNumerical;
}

int cmd_optimize_k(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const KOptimum opt = optimize_K(cfg.F, cfg.M, cfg.ensemble(), cfg.k_search());
  Outputs o = prepare_outputs(cfg);

  csv::Table profile({"K", "qfi_mean", "qfi_sem", "deltaB", "deltaB_err", "excluded"});
  long long excluded = 0;
  for (const auto& [K, e] : opt.grid) {
    profile.add_row({K, e.mean, e.sem, e.deltaB, e.deltaB_err, static_cast<long long>(e.n_excluded)});
    excluded += static_cast<long long>(e.n_excluded);
  }
  profile.write(o.add("k_profile.csv"));

  nlohmann::ordered_json j;
  j["F"] = cfg.F;
  j["M"] = cfg.M;
  j["K_star"] = opt.K_star;
  j["qfi"] = opt.qfi;
  j["qfi_sem"] = opt.qfi_sem;
  j["deltaB"] = 1.0 / std::sqrt(opt.qfi);
  j["non_unimodal"] = opt.non_unimodal;
  nlohmann::ordered_json evals = nlohmann::ordered_json::array();
  for (const auto& [K, q] : opt.evaluations) evals.push_back({{"K", K}, {"qfi_mean", q}});
  j["evaluations"] = evals;
  std::ofstream(o.add("optimize_k.json"), std::ios::binary | std::ios::trunc) << j.dump(2) << '\n';

  finish("optimize-k", cfg, o, {{csv::format_double(cfg.F), excluded}}, out);
  return kExitOk;
}

int cmd_fit(RunConfig cfg, std::ostream& out, std::ostream&) {
  Outputs o = prepare_outputs(cfg);
  // recorded resolved, so a replay reads the same sweep
  if (cfg.input.empty()) cfg.input = fs::absolute(o.dir / "sweep.csv").string();
  const fs::path input = cfg.input;
  if (!fs::exists(input)) throw ConfigError("fit: input " + input.string() + " does not exist");
  const csv::NumericTable table = csv::NumericTable::read(input);
  const std::vector<double> F = table.column("F");
  const std::vector<double> dB = table.column("deltaB");
  if (F.size() < 3) {
    throw ConfigError("fit: need at least 3 sweep points, got " + std::to_string(F.size()));
  }
  std::vector<std::pair<double, double>> points;
  for (std::size_t i = 0; i < F.size(); ++i) points.emplace_back(F[i], dB[i]);
  const ScalingFit fit = powerlaw_fit(points);

  nlohmann::ordered_json j;
  j["slope"] = fit.slope;
  j["intercept"] = fit.intercept;
  j["residual_rms"] = fit.residual_rms;
  j["slope_stderr"] = fit.slope_stderr;
  j["n_points"] = points.size();
  j["input"] = input.string();
  std::ofstream(o.add("fit.json"), std::ios::binary | std::ios::trunc) << j.dump(2) << '\n';
  finish("fit", cfg, o, {}, out);
  return kExitOk;
}

int dispatch(const std::string& command, const RunConfig& cfg, std::ostream& out,
             std::ostream& err) {
  if (command == "trajectory") return cmd_trajectory(cfg, out, err);
  if (command == "qfi") return cmd_qfi(cfg, out, err);
  if (command == "sweep") return cmd_sweep(cfg, out, err);
  if (command == "optimize-k") return cmd_optimize_k(cfg, out, err);
  if (command == "fit") return cmd_fit(cfg, out, err);
  throw ConfigError("unknown command '" + command + "'");
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : setters()) keys.push_back(k);
  return keys;
}

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
  for (const auto& [k, set] : setters()) {
    if (k == key) {
      set(cfg, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    try {
      apply_setting(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Double-pass magnetometer filter and Fisher information simulator", "dpmag"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "flat key = value config file")->check(CLI::ExistingFile);

  std::map<std::string, std::string> overrides;
  std::vector<std::pair<std::string, CLI::Option*>> override_opts;
  for (const auto& key : config_keys()) {
    override_opts.emplace_back(key, app.add_option("--" + key, overrides[key])->group("Overrides"));
  }

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"trajectory", "paired double-pass and single-pass trajectories -> trajectory.csv"},
      {"qfi", "conditional QFI ensemble at one (F, M, K) -> qfi_samples.csv, qfi_summary.csv"},
      {"sweep", "QFI over F_values -> sweep.csv"},
      {"optimize-k", "maximize QFI over K -> k_profile.csv, optimize_k.json"},
      {"fit", "power-law fit of deltaB against F from sweep.csv -> fit.json"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  std::string manifest_path;
  CLI::App* replay = app.add_subcommand("replay", "re-run the command recorded in a manifest");
  replay->fallthrough();
  replay->add_option("manifest", manifest_path, "manifest JSON file")
      ->required()
      ->check(CLI::ExistingFile);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    RunConfig cfg;
    std::string command = app.get_subcommands().front()->get_name();
    if (command == "replay") {
      const Manifest m = read_manifest(manifest_path);
      for (const auto& [k, v] : m.config) apply_setting(cfg, k, v);
      command = m.command;
    }
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    for (const auto& [key, opt] : override_opts) {
      if (opt->count() > 0) apply_setting(cfg, key, overrides[key]);
    }
    return dispatch(command, cfg, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
}

}  // namespace dpmag
