#include "rvn/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace rvn {
namespace {

constexpr int kWindow = 7;
constexpr double kSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

std::vector<double> gaussian_taps() {
  std::vector<double> g(kWindow);
  const double c = (kWindow - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    g[i] = std::exp(-(i - c) * (i - c) / (2.0 * kSigma * kSigma));
    sum += g[i];
  }
  for (auto& v : g) v /= sum;
  return g;
}

/// Separable valid-mode Gaussian filter; output (h-6) x (w-6).
Tensor<double> blur_valid(const Tensor<double>& x) {
  static const std::vector<double> g = gaussian_taps();
  const std::int64_t h = x.dim(0), w = x.dim(1);
  const std::int64_t wo = w - kWindow + 1, ho = h - kWindow + 1;
  Tensor<double> rows({h, wo});
  for (std::int64_t i = 0; i < h; ++i)
    for (std::int64_t j = 0; j < wo; ++j) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += g[k] * x(i, j + k);
      rows(i, j) = acc;
    }
  Tensor<double> out({ho, wo});
  for (std::int64_t i = 0; i < ho; ++i)
    for (std::int64_t j = 0; j < wo; ++j) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += g[k] * rows(i + k, j);
      out(i, j) = acc;
    }
  return out;
}

void check_pair(const Tensor<float>& a, const Tensor<float>& b,
                const char* who) {
  if (a.rank() != 2 || !a.same_shape(b))
    throw std::invalid_argument(std::string(who) +
                                ": images must share a 2D shape");
}

Tensor<double> widen(const Tensor<float>& x) {
  Tensor<double> out(x.shape());
  for (std::int64_t i = 0; i < x.numel(); ++i)
    out[i] = static_cast<double>(x[i]);
  return out;
}

}  // namespace

double ssim(const Tensor<float>& ref, const Tensor<float>& pred,
            double data_range) {
  check_pair(ref, pred, "ssim");
  if (data_range <= 0) throw std::invalid_argument("ssim: data_range <= 0");
  if (ref.dim(0) < kWindow || ref.dim(1) < kWindow)
    throw std::invalid_argument("ssim: image smaller than the 7x7 window");

  const auto x = widen(ref);
  const auto y = widen(pred);
  Tensor<double> xx(x.shape()), yy(x.shape()), xy(x.shape());
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mu_x = blur_valid(x), mu_y = blur_valid(y);
  const auto exx = blur_valid(xx), eyy = blur_valid(yy), exy = blur_valid(xy);

  const double c1 = (kK1 * data_range) * (kK1 * data_range);
  const double c2 = (kK2 * data_range) * (kK2 * data_range);
  double acc = 0.0;
  for (std::int64_t i = 0; i < mu_x.numel(); ++i) {
    const double sx = exx[i] - mu_x[i] * mu_x[i];
    const double sy = eyy[i] - mu_y[i] * mu_y[i];
    const double sxy = exy[i] - mu_x[i] * mu_y[i];
    const double num = (2.0 * mu_x[i] * mu_y[i] + c1) * (2.0 * sxy + c2);
    const double den = (mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + c1) *
                       (sx + sy + c2);
    acc += num / den;
  }
  return acc / static_cast<double>(mu_x.numel());
}

double psnr(const Tensor<float>& ref, const Tensor<float>& pred) {
  check_pair(ref, pred, "psnr");
  double mse = 0.0;
  for (std::int64_t i = 0; i < ref.numel(); ++i) {
    const double d = static_cast<double>(ref[i]) - pred[i];
    mse += d * d;
  }
  mse /= static_cast<double>(ref.numel());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  const double peak = max_abs(ref);
  return 10.0 * std::log10(peak * peak / mse);
}

double nmse(const Tensor<float>& ref, const Tensor<float>& pred) {
  check_pair(ref, pred, "nmse");
  double num = 0.0, den = 0.0;
  for (std::int64_t i = 0; i < ref.numel(); ++i) {
    const double d = static_cast<double>(pred[i]) - ref[i];
    num += d * d;
    den += static_cast<double>(ref[i]) * ref[i];
  }
  if (den == 0.0)
    throw std::invalid_argument("nmse: reference image is all zero");
  return num / den;
}

template <typename T>
Tensor<T> zero_filled_recon(const Tensor<std::complex<T>>& masked_ksp) {
  return rss(ifft2c(masked_ksp));
}

template Tensor<float> zero_filled_recon(const Tensor<std::complex<float>>&);
template Tensor<double> zero_filled_recon(const Tensor<std::complex<double>>&);

}  // namespace rvn
