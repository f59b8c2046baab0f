#pragma once

#include <functional>
#include <string>

#include "rvn/checkpoint.hpp"
#include "rvn/data.hpp"
#include "rvn/loss.hpp"
#include "rvn/metrics.hpp"

namespace rvn {

/// All slices of one split held in memory (desk-scale datasets).
class SliceDataset {
 public:
  SliceDataset() = default;
  SliceDataset(const Manifest& manifest, Split split);

  std::int64_t size() const {
    return static_cast<std::int64_t>(slices_.size());
  }
  const CTensor<float>& kspace(std::int64_t i) const {
    return slices_[static_cast<std::size_t>(i)].kspace;
  }
  const Tensor<float>& reference(std::int64_t i) const {
    return slices_[static_cast<std::size_t>(i)].reference;
  }
  const std::string& id(std::int64_t i) const {
    return slices_[static_cast<std::size_t>(i)].id;
  }

 private:
  struct Entry {
    CTensor<float> kspace;    // fully sampled
    Tensor<float> reference;  // RSS reconstruction
    std::string id;           // volume:slice
  };
  std::vector<Entry> slices_;
};

/// Mask generation dispatch per TrainConfig.mask_kind.
SamplingMask make_training_mask(const TrainConfig& cfg, std::int64_t ny,
                                std::int64_t nx, double R,
                                std::uint64_t seed);

struct TrainBatchSample {
  CTensor<float> masked_kspace;
  SamplingMask mask;
  Tensor<float> reference;
  std::string id;
};

/// One optimizer update over a batch. Returns the mean loss. Throws with
/// the offending sample id if a loss turns non-finite.
double train_step(RecurrentVarNet<float>& model, Adam<float>& optimizer,
                  const std::vector<TrainBatchSample>& batch,
                  const TrainConfig& cfg, std::int64_t iteration);

struct ValidationResult {
  double pooled_ssim = 0.0;                 // mean over slices and R values
  std::vector<std::pair<double, double>> per_r;  // (R, mean ssim)
};

/// Deterministic validation: per-(slice, R) masks derived from cfg.seed.
ValidationResult validate(RecurrentVarNet<float>& model,
                          const SliceDataset& val, const TrainConfig& cfg);

struct TrainResult {
  std::int64_t iterations = 0;
  double best_validation_ssim = -1.0;
  std::string latest_path;
  std::string best_path;
  std::string metrics_log_path;
};

/// Full training loop with validation-driven best checkpointing, periodic
/// latest checkpoints, a plain-text metrics log, and resume support.
/// config_text is embedded in every checkpoint.
TrainResult train_loop(RecurrentVarNet<float>& model, const Manifest& manifest,
                       const TrainConfig& cfg, const std::string& out_dir,
                       bool resume, std::string config_text = {},
                       const std::function<void(std::int64_t, double)>&
                           progress = {});

}  // namespace rvn
