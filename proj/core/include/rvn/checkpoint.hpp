#pragma once

#include <string>
#include <vector>

#include "rvn/model.hpp"
#include "rvn/optimizer.hpp"

namespace rvn {

/// Versioned binary archive: named little-endian float32 arrays keyed by
/// module path, plus the iteration counter, optimizer step count, best
/// validation SSIM and a config snapshot. Round-trips bit-exactly.
struct CheckpointData {
  std::uint32_t version = 1;
  std::int64_t iteration = 0;
  std::int64_t adam_step = 0;
  double best_validation_ssim = -1.0;  // -1 = no validation yet
  std::string config_text;
  std::vector<std::pair<std::string, Tensor<float>>> arrays;

  const Tensor<float>* find(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const CheckpointData& data);
CheckpointData load_checkpoint(const std::string& path);

/// Snapshot of model parameters (and optimizer moments under
/// "<name>.adam_m/.adam_v" when an optimizer is given).
CheckpointData make_checkpoint(const RecurrentVarNet<float>& model,
                               const Adam<float>* optimizer,
                               std::int64_t iteration,
                               double best_validation_ssim,
                               std::string config_text);

/// Load parameters by name into the model; every model parameter must be
/// present with a matching shape.
void restore_model(const CheckpointData& data, RecurrentVarNet<float>& model);

/// Restore optimizer moments saved alongside the parameters.
void restore_optimizer(const CheckpointData& data,
                       const RecurrentVarNet<float>& model,
                       Adam<float>& optimizer);

}  // namespace rvn
