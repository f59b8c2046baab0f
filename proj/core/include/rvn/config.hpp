#pragma once

#include <map>
#include <string>

#include "rvn/data.hpp"
#include "rvn/model.hpp"
#include "rvn/optimizer.hpp"

namespace rvn {

/// Complete run configuration: model and training hyperparameters, data
/// simulation settings, and paths. All defaults are deterministic (fixed
/// seeds, no wall-clock seeding).
struct AppConfig {
  ModelConfig model;
  TrainConfig train;
  DataConfig data;
  std::uint64_t seed = 1;          // master seed for model init
  std::string out_dir = "out";
  std::string dataset_manifest;    // train/evaluate input
  std::string checkpoint;          // reconstruct/evaluate input
  std::string input_volume;        // reconstruct input
  bool emit_png = false;

  void validate() const;
};

/// Thrown for unknown keys or malformed values; the message lists every
/// valid key.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Apply one dotted-key override, e.g. "model.time_steps" = "8".
void apply_config_value(AppConfig& cfg, const std::string& key,
                        const std::string& value);

/// Parse a "key = value" config file ('#' starts a comment).
AppConfig parse_config_file(const std::string& path);

/// Render the fully resolved configuration as dotted key = value lines.
std::string render_config(const AppConfig& cfg);

/// All recognized keys (used in error messages and tests).
const std::vector<std::string>& config_keys();

}  // namespace rvn
