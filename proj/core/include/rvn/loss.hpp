#pragma once

#include "rvn/autodiff.hpp"

namespace rvn {

/// Differentiable mean SSIM over valid 7x7 Gaussian windows (sigma 1.5,
/// K1 = 0.01, K2 = 0.03), matching the plain metric. pred and ref are
/// [H, W]; ref is typically a constant.
template <typename T>
ag::Var<T> ssim_op(const ag::Var<T>& pred, const ag::Var<T>& ref,
                   double data_range);

/// w1 * mean|ref - pred| + w2 * (1 - ssim(ref, pred)), with the SSIM
/// data range taken as max(ref).
template <typename T>
ag::Var<T> training_loss(const ag::Var<T>& pred_image,
                         const Tensor<T>& reference, double w1, double w2);

}  // namespace rvn
