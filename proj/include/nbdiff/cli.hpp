#pragma once

#include <string>
#include <vector>

#include "nbdiff/io.hpp"

namespace nbdiff {

/// Flat run configuration shared by every subcommand. Defaults < config file
/// < command-line flags; every key is also a --key flag. Unknown keys are
/// configuration errors, and each run persists its fully-resolved config.
struct RunConfig {
  std::uint64_t seed = 0;
  int threads = 1;

  int image_h = 32, image_w = 32, image_c = 3;
  int classes = 5;
  int objects_min = 1, objects_max = 5;
  double edge_tau = 0.25;

  std::uint32_t bank_n = 1000;
  std::uint64_t bank_seed = 1;

  int t_steps = 100;
  double beta_start = 1e-4;
  double beta_end = 0.2;

  int base_channels = 16, levels = 3, time_channels = 8;
  std::string optimizer = "adam";
  double learning_rate = 1e-3;
  int batch_size = 4;
  std::int64_t max_steps = 20000;
  int check_interval = 1000;
  double target_score = 0.25;
  int validation_size = 16;
  int dataset_count = 256;

  double channel_p = 0.0;
  std::uint64_t channel_seed = 1001;
  int strong_rep = 5, weak_rep = 1;
  std::string cond_coding = "auto";  // auto | raw | rle

  std::uint64_t rx_seed = 2002;
  std::string rx_init = "dropped";  // dropped | oracle

  int fd_stride = 10;
  int fd_images = 16;
};

struct ConfigKeyDef {
  std::string name;
  std::string help;
  std::string (*get)(const RunConfig&);
  void (*set)(RunConfig&, const std::string&);
};

const std::vector<ConfigKeyDef>& config_keys();

/// Sets one key; throws ConfigError for unknown keys or unparsable values.
void apply_config_key(RunConfig& cfg, const std::string& key, const std::string& value);

/// All keys with their current values, in registry order.
io::KvPairs dump_config(const RunConfig& cfg);

int run_cli(int argc, const char* const* argv);

}  // namespace nbdiff
