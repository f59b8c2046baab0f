#pragma once

#include "rvn/fft.hpp"
#include "rvn/sampling.hpp"
#include "rvn/tensor.hpp"

namespace rvn {

// Shape conventions:
//   multi-coil k-space / coil image stacks / sensitivity maps: [n_c, ny, nx]
//   single image: [ny, nx]
// All operators are pure, linear and safe to call concurrently.

/// Elementwise product with the binary mask, identical for every coil.
template <typename T>
Tensor<std::complex<T>> apply_mask(const Tensor<std::complex<T>>& ksp,
                                   const SamplingMask& mask);

/// Per-coil modulation: out[k] = maps[k] .* img
template <typename T>
Tensor<std::complex<T>> expand(const Tensor<std::complex<T>>& img,
                               const Tensor<std::complex<T>>& maps);

/// Coil combination: sum_k conj(maps[k]) .* coil_imgs[k]
template <typename T>
Tensor<std::complex<T>> reduce(const Tensor<std::complex<T>>& coil_imgs,
                               const Tensor<std::complex<T>>& maps);

/// Forward acquisition operator: mask o fft2c o expand.
template <typename T>
Tensor<std::complex<T>> forward_op(const Tensor<std::complex<T>>& img,
                                   const Tensor<std::complex<T>>& maps,
                                   const SamplingMask& mask);

/// Adjoint of forward_op: reduce o ifft2c o mask.
template <typename T>
Tensor<std::complex<T>> adjoint_op(const Tensor<std::complex<T>>& ksp,
                                   const Tensor<std::complex<T>>& maps,
                                   const SamplingMask& mask);

/// Root-sum-of-squares coil combination; real output [ny, nx].
template <typename T>
Tensor<T> rss(const Tensor<std::complex<T>>& coil_imgs);

/// reduce o ifft2c: sensitivity-weighted reconstruction from k-space.
template <typename T>
Tensor<std::complex<T>> sense_reconstruct(const Tensor<std::complex<T>>& ksp,
                                          const Tensor<std::complex<T>>& maps);

/// Plain unrolled gradient descent on the data term,
///   z_{t+1} = z_t - step * adjoint_op(forward_op(z_t) - ksp),
/// started from the adjoint image. The classical baseline the learned
/// refinement replaces.
template <typename T>
Tensor<std::complex<T>> gradient_descent_reconstruct(
    const Tensor<std::complex<T>>& ksp, const Tensor<std::complex<T>>& maps,
    const SamplingMask& mask, int steps, T step_size);

/// Complex [ ... ] -> real [2, ...] with channel 0 = Re, channel 1 = Im.
template <typename T>
Tensor<T> complex_to_channels(const Tensor<std::complex<T>>& x);

/// Exact inverse of complex_to_channels.
template <typename T>
Tensor<std::complex<T>> channels_to_complex(const Tensor<T>& x);

/// Real inner product Re<a, b> accumulated in double.
template <typename T>
double real_dot(const Tensor<std::complex<T>>& a,
                const Tensor<std::complex<T>>& b);

}  // namespace rvn
