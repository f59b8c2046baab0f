#pragma once

#include <complex>

#include "rvn/tensor.hpp"

namespace rvn {

/// Centered orthonormal 2D Fourier transform over the last two dims,
/// broadcasting over any leading dims. DC lands at index (ny/2, nx/2)
/// (floor division). Scaling is 1/sqrt(ny*nx) in both directions, so
/// fft2c is unitary and ifft2c is both its inverse and its adjoint.
/// Throws std::invalid_argument on non-finite input or rank < 2.
template <typename T>
Tensor<std::complex<T>> fft2c(const Tensor<std::complex<T>>& x);

template <typename T>
Tensor<std::complex<T>> ifft2c(const Tensor<std::complex<T>>& x);

namespace detail {

/// In-place centered transform of `batch` contiguous ny*nx planes.
/// No finiteness check; used by the graph ops which validate upstream.
template <typename T>
void fft2_centered(std::complex<T>* data, std::int64_t batch, std::int64_t ny,
                   std::int64_t nx, bool inverse);

}  // namespace detail

}  // namespace rvn
