#pragma once

#include "rvn/kspace_ops.hpp"
#include "rvn/nn.hpp"
#include "rvn/operators.hpp"

namespace rvn {

/// Initial coil sensitivity estimate from the auto-calibration region:
/// per-coil inverse transform of the ACS samples, divided by their RSS.
/// eps_rel scales the division guard relative to the peak RSS value;
/// pixels below the guard are set to zero. Throws if the ACS region is
/// empty. All-zero input yields all-zero maps.
template <typename T>
Tensor<std::complex<T>> estimate_initial_maps(
    const Tensor<std::complex<T>>& ksp, const SamplingMask& mask,
    double eps_rel = 1e-9);

/// Pixels where the ACS RSS is above `rel_threshold` times its peak;
/// the region where map estimates are meaningful.
template <typename T>
MaskArray sensitivity_support(const Tensor<std::complex<T>>& ksp,
                              const SamplingMask& mask,
                              double rel_threshold = 1e-3);

namespace nnmod {

using ag::Var;

/// conv3x3 + instance norm + leaky ReLU, twice.
template <typename T>
struct ConvBlock {
  nn::Conv2d<T> conv1, conv2;
  Var<T> gamma1, beta1, gamma2, beta2;
  double slope = 0.2;

  Var<T> operator()(Var<T> x) const;
};

template <typename T>
ConvBlock<T> make_conv_block(nn::ParamRegistry<T>& reg,
                             const std::string& name, std::int64_t cin,
                             std::int64_t cout, double slope, Rng& rng);

/// U-Net over a 2-channel map: encoder scales with max-pool downsampling,
/// nearest-neighbour upsampling plus convolution on the way back, skip
/// concatenations, 1x1 output projection. Input is replication-padded to
/// a multiple of 16 and cropped back.
template <typename T>
struct MapUnet {
  std::vector<ConvBlock<T>> encoders;  // one per scale above the bottom
  ConvBlock<T> bottom;
  std::vector<nn::Conv2d<T>> up_convs;  // after each upsample
  std::vector<Var<T>> up_gammas, up_betas;
  std::vector<ConvBlock<T>> decoders;
  nn::Conv2d<T> out_conv;  // 1x1 back to 2 channels
  double slope = 0.2;

  Var<T> operator()(const Var<T>& x) const;  // [2, H, W] -> [2, H, W]
};

template <typename T>
MapUnet<T> make_map_unet(nn::ParamRegistry<T>& reg, const std::string& name,
                         const std::vector<int>& filters, double slope,
                         Rng& rng);

}  // namespace nnmod

/// Learned refinement of the initial sensitivity estimate: a shared-weight
/// U-Net applied per coil (coils folded into the batch axis), followed by
/// pixelwise renormalization so reduce(expand(.)) stays the identity.
template <typename T>
class SensitivityRefiner {
 public:
  SensitivityRefiner(nn::ParamRegistry<T>& reg, const std::string& prefix,
                     const std::vector<int>& filters, double leaky_slope,
                     Rng& rng);

  /// init_maps: [2, n_c, H, W] -> refined, renormalized [2, n_c, H, W].
  ag::Var<T> forward(const ag::Var<T>& init_maps) const;

 private:
  nnmod::MapUnet<T> unet_;
};

}  // namespace rvn
