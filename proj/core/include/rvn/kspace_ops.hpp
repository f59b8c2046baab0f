#pragma once

#include "rvn/autodiff.hpp"
#include "rvn/sampling.hpp"

namespace rvn::ag {

// Differentiable k-space ops on the 2-channel real encoding of complex
// arrays: shape [2, ..., H, W], channel 0 = Re plane, channel 1 = Im plane.

/// Centered orthonormal 2D FFT over the trailing dims. The backward pass
/// applies the opposite transform (the adjoint, since fft2c is unitary).
template <typename T>
Var<T> fft2c_ch(const Var<T>& x);
template <typename T>
Var<T> ifft2c_ch(const Var<T>& x);

/// Per-coil modulation: out[:,k] = maps[:,k] * img (complex product).
/// img: [2, H, W], maps: [2, n_c, H, W].
template <typename T>
Var<T> expand_ch(const Var<T>& img, const Var<T>& maps);

/// Coil combination sum_k conj(maps[:,k]) * coils[:,k] -> [2, H, W].
template <typename T>
Var<T> reduce_ch(const Var<T>& coils, const Var<T>& maps);

/// Root-sum-of-squares magnitude over coils and the complex channel:
/// [2, n_c, H, W] -> [H, W].
template <typename T>
Var<T> rss_ch(const Var<T>& x);

/// Zero out unsampled positions; mask [H, W] broadcasts over all leading
/// dims.
template <typename T>
Var<T> apply_mask_ch(const Var<T>& x, const MaskArray& mask);

/// Divide every pixel of x [2, n_c, H, W] by r [H, W] (broadcast).
template <typename T>
Var<T> div_bcast_hw(const Var<T>& x, const Var<T>& r);

/// Stack per-coil [2, H, W] tensors along a new coil axis -> [2, n, H, W].
template <typename T>
Var<T> stack_coils(const std::vector<Var<T>>& coils);

/// Slice one coil: [2, n_c, H, W] -> [2, H, W].
template <typename T>
Var<T> take_coil(const Var<T>& x, std::int64_t k);

}  // namespace rvn::ag
