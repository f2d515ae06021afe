#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "dpmag/config.hpp"

namespace dpmag {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

/// Names of every key accepted in config files and as `--key` overrides.
std::vector<std::string> config_keys();

/// Sets one key. Throws ConfigError on an unknown key or a malformed value.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

/// Applies a flat `key = value` file on top of cfg.
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dpmag
