#pragma once

#include <complex>

#include "rvn/rng.hpp"
#include "rvn/tensor.hpp"

namespace rvn::test {

template <typename T = double>
Tensor<std::complex<T>> random_complex(const Shape& shape, Rng& rng) {
  Tensor<std::complex<T>> t(shape);
  for (std::int64_t i = 0; i < t.numel(); ++i)
    t[i] = std::complex<T>(static_cast<T>(rng.normal()),
                           static_cast<T>(rng.normal()));
  return t;
}

template <typename T = double>
Tensor<T> random_real(const Shape& shape, Rng& rng) {
  Tensor<T> t(shape);
  for (std::int64_t i = 0; i < t.numel(); ++i)
    t[i] = static_cast<T>(rng.normal());
  return t;
}

/// Random coil maps normalized so sum_k conj(S^k) S^k = 1 at every pixel.
template <typename T = double>
Tensor<std::complex<T>> random_normalized_maps(std::int64_t n_c,
                                               std::int64_t ny,
                                               std::int64_t nx, Rng& rng) {
  auto maps = random_complex<T>({n_c, ny, nx}, rng);
  const std::int64_t n = ny * nx;
  for (std::int64_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::int64_t k = 0; k < n_c; ++k) s += std::norm(maps[k * n + i]);
    const T inv = static_cast<T>(1.0 / std::sqrt(std::max(s, 1e-30)));
    for (std::int64_t k = 0; k < n_c; ++k) maps[k * n + i] *= inv;
  }
  return maps;
}

/// Brute-force centered orthonormal 2D DFT,
///   X[v,u] = n^{-1/2} sum_{y,x} x[y,x] exp(-2*pi*i*((v-cy)(y-cy)/ny
///                                              + (u-cx)(x-cx)/nx)).
inline Tensor<std::complex<double>> dft2c_reference(
    const Tensor<std::complex<double>>& x, bool inverse = false) {
  const std::int64_t ny = x.dim(-2), nx = x.dim(-1);
  const std::int64_t cy = ny / 2, cx = nx / 2;
  const double sgn = inverse ? 1.0 : -1.0;
  const double scale = 1.0 / std::sqrt(static_cast<double>(ny * nx));
  Tensor<std::complex<double>> out(x.shape());
  const std::int64_t planes = x.numel() / (ny * nx);
  for (std::int64_t p = 0; p < planes; ++p)
    for (std::int64_t v = 0; v < ny; ++v)
      for (std::int64_t u = 0; u < nx; ++u) {
        std::complex<double> acc{};
        for (std::int64_t y = 0; y < ny; ++y)
          for (std::int64_t xx = 0; xx < nx; ++xx) {
            const double phase =
                2.0 * std::numbers::pi *
                (static_cast<double>((v - cy) * (y - cy)) / ny +
                 static_cast<double>((u - cx) * (xx - cx)) / nx);
            acc += x[(p * ny + y) * nx + xx] *
                   std::polar(1.0, sgn * phase);
          }
        out[(p * ny + v) * nx + u] = acc * scale;
      }
  return out;
}

}  // namespace rvn::test
