#pragma once

#include <string>

#include "rvn/tensor.hpp"

namespace rvn {

/// 8-bit grayscale PNG; values mapped linearly from [lo, hi] and clipped.
void write_grayscale_png(const std::string& path, const Tensor<float>& image,
                         float lo, float hi);

/// Side-by-side panel of images (one column each) with a zoomed center
/// crop underneath, all normalized to the first image's peak.
void write_panel_png(const std::string& path,
                     const std::vector<Tensor<float>>& images);

}  // namespace rvn
