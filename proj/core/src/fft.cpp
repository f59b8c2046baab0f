#include "rvn/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace rvn {
namespace {

// FFTW planning is not thread-safe; execution of a cached plan on fresh
// buffers is. Plans are created once per (ny, nx, sign) and reused.
template <typename T>
struct FftwApi;

template <>
struct FftwApi<double> {
  using plan_t = fftw_plan;
  using cpx_t = fftw_complex;
  static plan_t plan(int ny, int nx, cpx_t* buf, int sign) {
    return fftw_plan_dft_2d(ny, nx, buf, buf, sign,
                            FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  static void execute(plan_t p, cpx_t* in, cpx_t* out) {
    fftw_execute_dft(p, in, out);
  }
};

template <>
struct FftwApi<float> {
  using plan_t = fftwf_plan;
  using cpx_t = fftwf_complex;
  static plan_t plan(int ny, int nx, cpx_t* buf, int sign) {
    return fftwf_plan_dft_2d(ny, nx, buf, buf, sign,
                             FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  static void execute(plan_t p, cpx_t* in, cpx_t* out) {
    fftwf_execute_dft(p, in, out);
  }
};

template <typename T>
typename FftwApi<T>::plan_t get_plan(std::int64_t ny, std::int64_t nx,
                                     int sign) {
  static std::mutex mu;
  static std::map<std::tuple<std::int64_t, std::int64_t, int>,
                  typename FftwApi<T>::plan_t>
      cache;
  std::lock_guard<std::mutex> lock(mu);
  const auto key = std::make_tuple(ny, nx, sign);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::vector<std::complex<T>> scratch(static_cast<std::size_t>(ny * nx));
  auto* buf = reinterpret_cast<typename FftwApi<T>::cpx_t*>(scratch.data());
  auto plan = FftwApi<T>::plan(static_cast<int>(ny), static_cast<int>(nx),
                               buf, sign);
  if (!plan) throw std::runtime_error("fft2c: FFTW planning failed");
  cache.emplace(key, plan);
  return plan;
}

}  // namespace

namespace detail {

template <typename T>
void fft2_centered(std::complex<T>* data, std::int64_t batch, std::int64_t ny,
                   std::int64_t nx, bool inverse) {
  const std::int64_t n = ny * nx;
  if (n == 0) return;
  const int sign = inverse ? FFTW_BACKWARD : FFTW_FORWARD;
  auto plan = get_plan<T>(ny, nx, sign);

  // ifftshift before the transform, fftshift after; DC at (ny/2, nx/2).
  const std::int64_t sy = ny / 2, sx = nx / 2;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<std::complex<T>> scratch(static_cast<std::size_t>(n));

  for (std::int64_t b = 0; b < batch; ++b) {
    std::complex<T>* plane = data + b * n;
    // scratch = ifftshift(plane): scratch[i][j] = plane[(i+sy)%ny][(j+sx)%nx]
    for (std::int64_t i = 0; i < ny; ++i) {
      const std::int64_t si = (i + sy) % ny;
      for (std::int64_t j = 0; j < nx; ++j)
        scratch[i * nx + j] = plane[si * nx + (j + sx) % nx];
    }
    auto* buf = reinterpret_cast<typename FftwApi<T>::cpx_t*>(scratch.data());
    FftwApi<T>::execute(plan, buf, buf);
    // plane = fftshift(scratch) * scale
    for (std::int64_t i = 0; i < ny; ++i) {
      const std::int64_t di = (i + sy) % ny;
      for (std::int64_t j = 0; j < nx; ++j)
        plane[di * nx + (j + sx) % nx] = scratch[i * nx + j] * scale;
    }
  }
}

template void fft2_centered<float>(std::complex<float>*, std::int64_t,
                                   std::int64_t, std::int64_t, bool);
template void fft2_centered<double>(std::complex<double>*, std::int64_t,
                                    std::int64_t, std::int64_t, bool);

}  // namespace detail

namespace {

template <typename T>
Tensor<std::complex<T>> transform(const Tensor<std::complex<T>>& x,
                                  bool inverse, const char* who) {
  if (x.rank() < 2)
    throw std::invalid_argument(std::string(who) + ": rank must be >= 2");
  if (!all_finite(x))
    throw std::invalid_argument(std::string(who) + ": non-finite input");
  const std::int64_t ny = x.dim(-2), nx = x.dim(-1);
  if (ny < 1 || nx < 1)
    throw std::invalid_argument(std::string(who) + ": empty spatial dims");
  Tensor<std::complex<T>> out = x;
  detail::fft2_centered(out.data(), out.numel() / (ny * nx), ny, nx, inverse);
  return out;
}

}  // namespace

template <typename T>
Tensor<std::complex<T>> fft2c(const Tensor<std::complex<T>>& x) {
  return transform(x, /*inverse=*/false, "fft2c");
}

template <typename T>
Tensor<std::complex<T>> ifft2c(const Tensor<std::complex<T>>& x) {
  return transform(x, /*inverse=*/true, "ifft2c");
}

template Tensor<std::complex<float>> fft2c(const Tensor<std::complex<float>>&);
template Tensor<std::complex<double>> fft2c(
    const Tensor<std::complex<double>>&);
template Tensor<std::complex<float>> ifft2c(
    const Tensor<std::complex<float>>&);
template Tensor<std::complex<double>> ifft2c(
    const Tensor<std::complex<double>>&);

}  // namespace rvn
