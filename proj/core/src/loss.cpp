#include "rvn/loss.hpp"

#include <cmath>
#include <stdexcept>

#include "rvn/nn.hpp"

namespace rvn {
namespace {

constexpr int kWindow = 7;
constexpr double kSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

template <typename T>
Tensor<T> gaussian_kernel() {
  Tensor<T> k({1, 1, kWindow, kWindow});
  const double c = (kWindow - 1) / 2.0;
  double sum = 0.0;
  std::vector<double> taps(kWindow);
  for (int i = 0; i < kWindow; ++i) {
    taps[i] = std::exp(-(i - c) * (i - c) / (2.0 * kSigma * kSigma));
    sum += taps[i];
  }
  for (int i = 0; i < kWindow; ++i)
    for (int j = 0; j < kWindow; ++j)
      k(0, 0, i, j) = static_cast<T>(taps[i] * taps[j] / (sum * sum));
  return k;
}

}  // namespace

template <typename T>
ag::Var<T> ssim_op(const ag::Var<T>& pred, const ag::Var<T>& ref,
                   double data_range) {
  if (pred.value().rank() != 2 || !pred.value().same_shape(ref.value()))
    throw std::invalid_argument("ssim_op: images must share a 2D shape");
  if (data_range <= 0) throw std::invalid_argument("ssim_op: data_range <= 0");
  const std::int64_t h = pred.value().dim(0), w = pred.value().dim(1);
  if (h < kWindow || w < kWindow)
    throw std::invalid_argument("ssim_op: image smaller than the 7x7 window");

  auto kernel = ag::Var<T>::constant(gaussian_kernel<T>());
  auto blur = [&](const ag::Var<T>& v) {
    return nn::conv2d(v, kernel, ag::Var<T>(), /*pad=*/0);
  };

  auto x = ag::reshape(pred, {1, h, w});
  auto y = ag::reshape(ref, {1, h, w});
  auto mu_x = blur(x);
  auto mu_y = blur(y);
  auto exx = blur(ag::mul(x, x));
  auto eyy = blur(ag::mul(y, y));
  auto exy = blur(ag::mul(x, y));

  auto sx = ag::sub(exx, ag::mul(mu_x, mu_x));
  auto sy = ag::sub(eyy, ag::mul(mu_y, mu_y));
  auto sxy = ag::sub(exy, ag::mul(mu_x, mu_y));

  const double c1 = (kK1 * data_range) * (kK1 * data_range);
  const double c2 = (kK2 * data_range) * (kK2 * data_range);
  auto num = ag::mul(ag::add_scalar(ag::scale(ag::mul(mu_x, mu_y), 2.0), c1),
                     ag::add_scalar(ag::scale(sxy, 2.0), c2));
  auto den = ag::mul(
      ag::add_scalar(ag::add(ag::mul(mu_x, mu_x), ag::mul(mu_y, mu_y)), c1),
      ag::add_scalar(ag::add(sx, sy), c2));
  return ag::mean_op(ag::div(num, den));
}

template <typename T>
ag::Var<T> training_loss(const ag::Var<T>& pred_image,
                         const Tensor<T>& reference, double w1, double w2) {
  if (!pred_image.value().same_shape(reference))
    throw std::invalid_argument("training_loss: shape mismatch");
  const double range = max_abs(reference);
  if (range <= 0)
    throw std::invalid_argument("training_loss: reference has no signal");

  auto ref = ag::Var<T>::constant(reference);
  auto l1 = ag::mean_op(ag::abs_op(ag::sub(ref, pred_image)));
  auto similarity = ssim_op(pred_image, ref, range);
  auto dissim = ag::add_scalar(ag::scale(similarity, -1.0), 1.0);
  return ag::add(ag::scale(l1, w1), ag::scale(dissim, w2));
}

template ag::Var<float> ssim_op(const ag::Var<float>&, const ag::Var<float>&,
                                double);
template ag::Var<double> ssim_op(const ag::Var<double>&,
                                 const ag::Var<double>&, double);
template ag::Var<float> training_loss(const ag::Var<float>&,
                                      const Tensor<float>&, double, double);
template ag::Var<double> training_loss(const ag::Var<double>&,
                                       const Tensor<double>&, double, double);

}  // namespace rvn
