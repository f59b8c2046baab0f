#pragma once

#include <functional>
#include <optional>
#include <string>

#include "rvn/data.hpp"
#include "rvn/metrics.hpp"
#include "rvn/optimizer.hpp"

namespace rvn {

/// Maps sub-sampled k-space to a real image.
using Reconstructor =
    std::function<Tensor<float>(const CTensor<float>&, const SamplingMask&)>;

struct SliceReport {
  std::int64_t slice = 0;
  double ssim = 0, psnr = 0, nmse = 0;
};

struct VolumeReport {
  std::string path;
  std::string error;  // nonempty if this volume failed to evaluate
  std::vector<SliceReport> slices;
  double mean_ssim = 0, mean_psnr = 0, mean_nmse = 0;
};

struct MethodReport {
  std::string method;
  double acceleration = 0;
  std::vector<VolumeReport> volumes;
  double mean_ssim = 0, mean_psnr = 0, mean_nmse = 0;  // slice-equal pooling
  std::int64_t n_slices = 0;
};

struct EvalOptions {
  std::vector<double> accelerations{5, 10};
  std::string mask_kind = "variable_density";
  double acs_fraction = 0.08;
  double center_radius = 0.12;
  std::uint64_t seed = 1;
};

/// Per-slice metrics against the fully-sampled RSS reference for every
/// requested acceleration, slice-equal averaging. A volume that fails to
/// load yields an error entry and evaluation continues.
std::vector<MethodReport> evaluate_dataset(const Manifest& manifest,
                                           Split split,
                                           const Reconstructor& reconstruct,
                                           const std::string& method_name,
                                           const EvalOptions& options);

/// Machine- and human-readable outputs.
void write_report_json(const std::string& path,
                       const std::vector<MethodReport>& reports);
std::string render_report_table(const std::vector<MethodReport>& reports);

/// Reference | zero-filled | reconstruction panels (with zoom crops) for
/// the first slice of each test volume.
void emit_comparison_panels(const Manifest& manifest, Split split,
                            const Reconstructor& reconstruct, double R,
                            const EvalOptions& options,
                            const std::string& out_dir);

}  // namespace rvn
