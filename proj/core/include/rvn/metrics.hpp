#pragma once

#include "rvn/operators.hpp"

namespace rvn {

/// Mean structural similarity over valid (fully interior) sliding windows
/// with a 7x7 Gaussian weighting, sigma 1.5, K1 = 0.01, K2 = 0.03.
/// Identical images give exactly 1.0. Throws if data_range <= 0 or the
/// images are smaller than the window.
double ssim(const Tensor<float>& ref, const Tensor<float>& pred,
            double data_range);

/// 10 log10(max(ref)^2 / MSE); +infinity when the images are identical.
double psnr(const Tensor<float>& ref, const Tensor<float>& pred);

/// ||pred - ref||^2 / ||ref||^2.
double nmse(const Tensor<float>& ref, const Tensor<float>& pred);

/// RSS of the inverse transform of (sub-sampled) k-space: the zero-filled
/// baseline reconstruction.
template <typename T>
Tensor<T> zero_filled_recon(const Tensor<std::complex<T>>& masked_ksp);

}  // namespace rvn
