#include "rvn/sensitivity.hpp"

#include <cmath>
#include <stdexcept>

namespace rvn {

template <typename T>
Tensor<std::complex<T>> estimate_initial_maps(
    const Tensor<std::complex<T>>& ksp, const SamplingMask& mask,
    double eps_rel) {
  if (ksp.rank() != 3)
    throw std::invalid_argument("estimate_initial_maps: expected [n_c,ny,nx]");
  bool has_acs = false;
  for (std::int64_t i = 0; i < mask.acs.numel() && !has_acs; ++i)
    has_acs = mask.acs[i] != 0;
  if (!has_acs)
    throw std::invalid_argument("estimate_initial_maps: empty ACS region");

  const auto acs_imgs = ifft2c(acs_extract(ksp, mask));
  const auto r = rss(acs_imgs);
  const double peak = max_abs(r);
  Tensor<std::complex<T>> maps(ksp.shape());
  if (peak == 0.0) return maps;  // degenerate all-zero input

  const T eps = static_cast<T>(eps_rel * peak);
  const std::int64_t nc = ksp.dim(0), n = r.numel();
  for (std::int64_t k = 0; k < nc; ++k)
    for (std::int64_t i = 0; i < n; ++i)
      maps[k * n + i] = r[i] < eps
                            ? std::complex<T>{}
                            : acs_imgs[k * n + i] / (r[i] + eps);
  return maps;
}

template <typename T>
MaskArray sensitivity_support(const Tensor<std::complex<T>>& ksp,
                              const SamplingMask& mask, double rel_threshold) {
  const auto r = rss(ifft2c(acs_extract(ksp, mask)));
  const double peak = max_abs(r);
  MaskArray support(r.shape());
  for (std::int64_t i = 0; i < r.numel(); ++i)
    support[i] = (peak > 0 && r[i] > rel_threshold * peak) ? 1 : 0;
  return support;
}

template Tensor<std::complex<float>> estimate_initial_maps(
    const Tensor<std::complex<float>>&, const SamplingMask&, double);
template Tensor<std::complex<double>> estimate_initial_maps(
    const Tensor<std::complex<double>>&, const SamplingMask&, double);
template MaskArray sensitivity_support(const Tensor<std::complex<float>>&,
                                       const SamplingMask&, double);
template MaskArray sensitivity_support(const Tensor<std::complex<double>>&,
                                       const SamplingMask&, double);

namespace nnmod {

template <typename T>
Var<T> ConvBlock<T>::operator()(Var<T> x) const {
  x = ag::leaky_relu(nn::instance_norm(conv1(x), gamma1, beta1), slope);
  x = ag::leaky_relu(nn::instance_norm(conv2(x), gamma2, beta2), slope);
  return x;
}

template <typename T>
ConvBlock<T> make_conv_block(nn::ParamRegistry<T>& reg,
                             const std::string& name, std::int64_t cin,
                             std::int64_t cout, double slope, Rng& rng) {
  // bias-free convolutions: instance norm cancels a per-channel bias
  ConvBlock<T> b;
  b.conv1 = nn::make_conv2d(reg, name + ".conv1", cin, cout, 3, 1, 1, rng,
                            /*bias=*/false);
  b.gamma1 = reg.add(name + ".norm1.gamma", Tensor<T>::full({cout}, T(1)));
  b.beta1 = reg.add(name + ".norm1.beta", Tensor<T>({cout}));
  b.conv2 = nn::make_conv2d(reg, name + ".conv2", cout, cout, 3, 1, 1, rng,
                            /*bias=*/false);
  b.gamma2 = reg.add(name + ".norm2.gamma", Tensor<T>::full({cout}, T(1)));
  b.beta2 = reg.add(name + ".norm2.beta", Tensor<T>({cout}));
  b.slope = slope;
  return b;
}

namespace {

std::int64_t pad_to_multiple(std::int64_t v, std::int64_t m) {
  return (v + m - 1) / m * m;
}

}  // namespace

template <typename T>
Var<T> MapUnet<T>::operator()(const Var<T>& x) const {
  const std::int64_t h = x.value().dim(1), w = x.value().dim(2);
  const std::int64_t hp = pad_to_multiple(h, 16), wp = pad_to_multiple(w, 16);

  // replication-pad to the working size; content stays at the top-left
  Var<T> cur = x;
  if (hp != h || wp != w) {
    const int p = static_cast<int>(std::max(hp - h, wp - w));
    cur = nn::crop2d(nn::pad_replicate(x, p), p, p, hp, wp);
  }

  std::vector<Var<T>> skips;
  for (const auto& enc : encoders) {
    cur = enc(cur);
    skips.push_back(cur);
    cur = nn::max_pool2(cur);
  }
  cur = bottom(cur);
  for (std::size_t i = decoders.size(); i-- > 0;) {
    cur = nn::upsample_nearest2(cur);
    cur = ag::leaky_relu(
        nn::instance_norm(up_convs[i](cur), up_gammas[i], up_betas[i]), slope);
    cur = decoders[i](nn::concat_ch(skips[i], cur));
  }
  cur = out_conv(cur);
  if (hp != h || wp != w) cur = nn::crop2d(cur, 0, 0, h, w);
  return cur;
}

template <typename T>
MapUnet<T> make_map_unet(nn::ParamRegistry<T>& reg, const std::string& name,
                         const std::vector<int>& filters, double slope,
                         Rng& rng) {
  if (filters.size() < 2)
    throw std::invalid_argument("make_map_unet: need at least two scales");
  MapUnet<T> u;
  u.slope = slope;
  std::int64_t cin = 2;
  for (std::size_t i = 0; i + 1 < filters.size(); ++i) {
    u.encoders.push_back(make_conv_block(reg, name + ".enc" + std::to_string(i),
                                         cin, filters[i], slope, rng));
    cin = filters[i];
  }
  u.bottom = make_conv_block(reg, name + ".bottom", cin, filters.back(), slope,
                             rng);
  for (std::size_t i = 0; i + 1 < filters.size(); ++i) {
    const std::int64_t above = filters[i];
    const std::int64_t below = filters[i + 1];
    u.up_convs.push_back(nn::make_conv2d(
        reg, name + ".up" + std::to_string(i) + ".conv", below, above, 3, 1, 1,
        rng, /*bias=*/false));
    u.up_gammas.push_back(reg.add(name + ".up" + std::to_string(i) + ".gamma",
                                  Tensor<T>::full({above}, T(1))));
    u.up_betas.push_back(reg.add(name + ".up" + std::to_string(i) + ".beta",
                                 Tensor<T>({above})));
    u.decoders.push_back(make_conv_block(reg,
                                         name + ".dec" + std::to_string(i),
                                         2 * above, above, slope, rng));
  }
  u.out_conv = nn::make_conv2d(reg, name + ".out", filters[0], 2, 1, 0, 1, rng);
  return u;
}

#define RVN_INSTANTIATE_NNMOD(T)                                              \
  template struct ConvBlock<T>;                                               \
  template ConvBlock<T> make_conv_block(nn::ParamRegistry<T>&,                \
                                        const std::string&, std::int64_t,     \
                                        std::int64_t, double, Rng&);          \
  template struct MapUnet<T>;                                                 \
  template MapUnet<T> make_map_unet(nn::ParamRegistry<T>&,                    \
                                    const std::string&,                       \
                                    const std::vector<int>&, double, Rng&);

RVN_INSTANTIATE_NNMOD(float)
RVN_INSTANTIATE_NNMOD(double)

#undef RVN_INSTANTIATE_NNMOD

}  // namespace nnmod

template <typename T>
SensitivityRefiner<T>::SensitivityRefiner(nn::ParamRegistry<T>& reg,
                                          const std::string& prefix,
                                          const std::vector<int>& filters,
                                          double leaky_slope, Rng& rng)
    : unet_(nnmod::make_map_unet(reg, prefix, filters, leaky_slope, rng)) {}

template <typename T>
ag::Var<T> SensitivityRefiner<T>::forward(const ag::Var<T>& init_maps) const {
  const Shape& s = init_maps.value().shape();
  if (s.size() != 4 || s[0] != 2)
    throw std::invalid_argument("SensitivityRefiner: expected [2,n_c,H,W]");
  const std::int64_t nc = s[1];

  std::vector<ag::Var<T>> refined;
  refined.reserve(static_cast<std::size_t>(nc));
  for (std::int64_t k = 0; k < nc; ++k)
    refined.push_back(unet_(ag::take_coil(init_maps, k)));
  auto stacked = ag::stack_coils(refined);
  if (!all_finite(stacked.value()))
    throw std::runtime_error("SensitivityRefiner: non-finite activations");

  // renormalize so sum_k |S^k|^2 = 1 wherever the magnitude is nonzero
  auto norm = ag::clamp_min(ag::rss_ch(stacked), 1e-12);
  return ag::div_bcast_hw(stacked, norm);
}

template class SensitivityRefiner<float>;
template class SensitivityRefiner<double>;

}  // namespace rvn
