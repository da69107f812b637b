#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "mixdyn/experiments.hpp"
#include "mixdyn/keyvalue.hpp"

namespace mixdyn::cli {

struct RunConfig {
  ExperimentSpec spec;
  /// More than one value runs a sweep with one output directory per value.
  std::vector<double> r_values;
  std::filesystem::path out_dir = "mixdyn_out";
  int jobs = 1;
  int verbosity = 0;
};

/// Applies one dotted `key = value` setting. Throws ConfigError naming the key
/// when it is unknown or its value does not parse.
void apply_config_key(RunConfig& cfg, const std::string& key, const std::string& value);

/// Defaults overlaid with every entry of `kv`.
RunConfig config_from_map(const KeyValueMap& kv);

RunConfig parse_config(const std::filesystem::path& path);

/// Entry point of the command-line tool. Returns 0 on success, 1 on invalid
/// input and 2 when an integration aborts.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mixdyn::cli
