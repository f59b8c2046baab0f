#include "rvn/operators.hpp"

#include <cmath>
#include <stdexcept>

namespace rvn {
namespace {

template <typename T>
void check_coil_stack(const Tensor<std::complex<T>>& x, const char* who) {
  if (x.rank() != 3)
    throw std::invalid_argument(std::string(who) +
                                ": expected [n_c, ny, nx], got rank " +
                                std::to_string(x.rank()));
  if (x.dim(0) < 1)
    throw std::invalid_argument(std::string(who) + ": need at least one coil");
}

template <typename T>
void check_same_coils(const Tensor<std::complex<T>>& a,
                      const Tensor<std::complex<T>>& b, const char* who) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(who) + ": coil/shape mismatch " +
                                shape_to_string(a.shape()) + " vs " +
                                shape_to_string(b.shape()));
}

}  // namespace

template <typename T>
Tensor<std::complex<T>> apply_mask(const Tensor<std::complex<T>>& ksp,
                                   const SamplingMask& mask) {
  check_coil_stack(ksp, "apply_mask");
  if (ksp.dim(1) != mask.ny() || ksp.dim(2) != mask.nx())
    throw std::invalid_argument("apply_mask: spatial shape mismatch");
  Tensor<std::complex<T>> out = ksp;
  const std::int64_t n = mask.ny() * mask.nx();
  for (std::int64_t k = 0; k < ksp.dim(0); ++k)
    for (std::int64_t i = 0; i < n; ++i)
      if (!mask.mask[i]) out[k * n + i] = std::complex<T>{};
  return out;
}

template <typename T>
Tensor<std::complex<T>> expand(const Tensor<std::complex<T>>& img,
                               const Tensor<std::complex<T>>& maps) {
  check_coil_stack(maps, "expand");
  if (img.rank() != 2 || img.dim(0) != maps.dim(1) || img.dim(1) != maps.dim(2))
    throw std::invalid_argument("expand: image/maps shape mismatch");
  Tensor<std::complex<T>> out(maps.shape());
  const std::int64_t n = img.numel();
  for (std::int64_t k = 0; k < maps.dim(0); ++k)
    for (std::int64_t i = 0; i < n; ++i)
      out[k * n + i] = maps[k * n + i] * img[i];
  return out;
}

template <typename T>
Tensor<std::complex<T>> reduce(const Tensor<std::complex<T>>& coil_imgs,
                               const Tensor<std::complex<T>>& maps) {
  check_coil_stack(coil_imgs, "reduce");
  check_same_coils(coil_imgs, maps, "reduce");
  Tensor<std::complex<T>> out({coil_imgs.dim(1), coil_imgs.dim(2)});
  const std::int64_t n = out.numel();
  for (std::int64_t k = 0; k < coil_imgs.dim(0); ++k)
    for (std::int64_t i = 0; i < n; ++i)
      out[i] += std::conj(maps[k * n + i]) * coil_imgs[k * n + i];
  return out;
}

template <typename T>
Tensor<std::complex<T>> forward_op(const Tensor<std::complex<T>>& img,
                                   const Tensor<std::complex<T>>& maps,
                                   const SamplingMask& mask) {
  return apply_mask(fft2c(expand(img, maps)), mask);
}

template <typename T>
Tensor<std::complex<T>> adjoint_op(const Tensor<std::complex<T>>& ksp,
                                   const Tensor<std::complex<T>>& maps,
                                   const SamplingMask& mask) {
  return reduce(ifft2c(apply_mask(ksp, mask)), maps);
}

template <typename T>
Tensor<T> rss(const Tensor<std::complex<T>>& coil_imgs) {
  check_coil_stack(coil_imgs, "rss");
  Tensor<T> out({coil_imgs.dim(1), coil_imgs.dim(2)});
  const std::int64_t n = out.numel();
  for (std::int64_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::int64_t k = 0; k < coil_imgs.dim(0); ++k)
      s += static_cast<double>(std::norm(coil_imgs[k * n + i]));
    out[i] = static_cast<T>(std::sqrt(s));
  }
  return out;
}

template <typename T>
Tensor<std::complex<T>> sense_reconstruct(const Tensor<std::complex<T>>& ksp,
                                          const Tensor<std::complex<T>>& maps) {
  return reduce(ifft2c(ksp), maps);
}

template <typename T>
Tensor<std::complex<T>> gradient_descent_reconstruct(
    const Tensor<std::complex<T>>& ksp, const Tensor<std::complex<T>>& maps,
    const SamplingMask& mask, int steps, T step_size) {
  Tensor<std::complex<T>> z = adjoint_op(ksp, maps, mask);
  for (int t = 0; t < steps; ++t) {
    Tensor<std::complex<T>> residual = forward_op(z, maps, mask);
    for (std::int64_t i = 0; i < residual.numel(); ++i) residual[i] -= ksp[i];
    const Tensor<std::complex<T>> grad = adjoint_op(residual, maps, mask);
    for (std::int64_t i = 0; i < z.numel(); ++i) z[i] -= step_size * grad[i];
  }
  return z;
}

template <typename T>
Tensor<T> complex_to_channels(const Tensor<std::complex<T>>& x) {
  Shape s = x.shape();
  s.insert(s.begin(), 2);
  Tensor<T> out(s);
  const std::int64_t n = x.numel();
  for (std::int64_t i = 0; i < n; ++i) {
    out[i] = x[i].real();
    out[n + i] = x[i].imag();
  }
  return out;
}

template <typename T>
Tensor<std::complex<T>> channels_to_complex(const Tensor<T>& x) {
  if (x.rank() < 1 || x.dim(0) != 2)
    throw std::invalid_argument(
        "channels_to_complex: leading dim must be 2 (Re, Im)");
  Shape s(x.shape().begin() + 1, x.shape().end());
  Tensor<std::complex<T>> out(s);
  const std::int64_t n = out.numel();
  for (std::int64_t i = 0; i < n; ++i)
    out[i] = std::complex<T>(x[i], x[n + i]);
  return out;
}

template <typename T>
double real_dot(const Tensor<std::complex<T>>& a,
                const Tensor<std::complex<T>>& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("real_dot: shape mismatch");
  double s = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i)
    s += static_cast<double>(a[i].real()) * b[i].real() +
         static_cast<double>(a[i].imag()) * b[i].imag();
  return s;
}

#define RVN_INSTANTIATE_OPS(T)                                                \
  template Tensor<std::complex<T>> apply_mask(const Tensor<std::complex<T>>&, \
                                              const SamplingMask&);           \
  template Tensor<std::complex<T>> expand(const Tensor<std::complex<T>>&,     \
                                          const Tensor<std::complex<T>>&);    \
  template Tensor<std::complex<T>> reduce(const Tensor<std::complex<T>>&,     \
                                          const Tensor<std::complex<T>>&);    \
  template Tensor<std::complex<T>> forward_op(const Tensor<std::complex<T>>&, \
                                              const Tensor<std::complex<T>>&, \
                                              const SamplingMask&);           \
  template Tensor<std::complex<T>> adjoint_op(const Tensor<std::complex<T>>&, \
                                              const Tensor<std::complex<T>>&, \
                                              const SamplingMask&);           \
  template Tensor<T> rss(const Tensor<std::complex<T>>&);                     \
  template Tensor<std::complex<T>> sense_reconstruct(                         \
      const Tensor<std::complex<T>>&, const Tensor<std::complex<T>>&);        \
  template Tensor<std::complex<T>> gradient_descent_reconstruct(              \
      const Tensor<std::complex<T>>&, const Tensor<std::complex<T>>&,         \
      const SamplingMask&, int, T);                                           \
  template Tensor<T> complex_to_channels(const Tensor<std::complex<T>>&);     \
  template Tensor<std::complex<T>> channels_to_complex(const Tensor<T>&);     \
  template double real_dot(const Tensor<std::complex<T>>&,                    \
                           const Tensor<std::complex<T>>&);

RVN_INSTANTIATE_OPS(float)
RVN_INSTANTIATE_OPS(double)

#undef RVN_INSTANTIATE_OPS

}  // namespace rvn
