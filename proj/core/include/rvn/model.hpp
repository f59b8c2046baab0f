#pragma once

#include <optional>

#include "rvn/kspace_ops.hpp"
#include "rvn/nn.hpp"
#include "rvn/sensitivity.hpp"

namespace rvn {

struct ModelConfig {
  int time_steps = 8;       // unrolled iterations T
  int recurrent_layers = 4; // conv/GRU pairs per unit
  int hidden_channels = 128;
  std::vector<int> rsi_dilations{1, 1, 2, 4};
  std::vector<int> rsi_filters{32, 32, 64, 64};
  std::vector<int> ser_filters{8, 16, 32, 64};
  double ser_leaky_slope = 0.2;
  bool use_ser = true;
  bool use_rsi = true;
  bool share_weights = false;
  std::string rsi_input = "sense";  // "sense" | "rss"
  double sens_eps_rel = 1e-9;

  void validate() const;
};

namespace nnmod {

/// Convolutional GRU cell. Input and state both carry `channels` feature
/// maps; every gate is a 3x3 zero-padded stride-1 convolution over the
/// concatenation of its inputs.
template <typename T>
struct ConvGruCell {
  nn::Conv2d<T> update_gate;  // z
  nn::Conv2d<T> reset_gate;   // r
  nn::Conv2d<T> candidate;    // h~

  /// h' = (1 - z) .* h + z .* tanh(candidate(x, r .* h))
  Var<T> step(const Var<T>& x, const Var<T>& h) const;
};

template <typename T>
ConvGruCell<T> make_conv_gru(nn::ParamRegistry<T>& reg,
                             const std::string& name, std::int64_t channels,
                             Rng& rng);

/// Image-domain refinement network: 5x5 input convolution, then
/// alternating 3x3 convolutions and ConvGRU cells, then a 3x3 projection
/// back to the 2-channel image. ReLU after every convolution except the
/// final projection.
template <typename T>
struct RecurrentUnit {
  nn::Conv2d<T> conv_in;               // 5x5, 2 -> C
  std::vector<nn::Conv2d<T>> convs;    // 3x3, C -> C
  std::vector<ConvGruCell<T>> cells;   // one per layer
  nn::Conv2d<T> conv_out;              // 3x3, C -> 2

  struct Output {
    Var<T> refinement;          // [2, H, W]
    std::vector<Var<T>> hidden; // per-layer states [C, H, W]
  };
  Output forward(const Var<T>& image_2ch,
                 const std::vector<Var<T>>& hidden) const;
};

template <typename T>
RecurrentUnit<T> make_recurrent_unit(nn::ParamRegistry<T>& reg,
                                     const std::string& name,
                                     std::int64_t channels, int layers,
                                     Rng& rng);

/// Learns the initial hidden state from a reconstruction of the input:
/// four replication-padded dilated 3x3 convolutions, then one 1x1
/// convolution + ReLU per recurrent layer.
template <typename T>
struct StateInitializer {
  std::vector<nn::Conv2d<T>> features;  // dilated convs, pad via replication
  std::vector<int> pads;                // = dilations
  std::vector<nn::Conv2d<T>> heads;     // 1x1 -> hidden channels

  std::vector<Var<T>> forward(const Var<T>& x) const;
};

template <typename T>
StateInitializer<T> make_state_initializer(nn::ParamRegistry<T>& reg,
                                           const std::string& name,
                                           std::int64_t in_channels,
                                           const std::vector<int>& dilations,
                                           const std::vector<int>& filters,
                                           std::int64_t hidden_channels,
                                           int layers, Rng& rng);

}  // namespace nnmod

/// The unrolled k-space reconstruction network. Per iteration a data
/// consistency step pulls the prediction toward the acquired samples and
/// a recurrent image-domain unit contributes a k-space refinement; the
/// final prediction is combined by RSS into a real image.
template <typename T>
class RecurrentVarNet {
 public:
  RecurrentVarNet(ModelConfig cfg, std::uint64_t seed);

  struct Forward {
    ag::Var<T> kspace;  // [2, n_c, H, W] final prediction
    ag::Var<T> image;   // [H, W] RSS of its inverse transform
    ag::Var<T> maps;    // [2, n_c, H, W] sensitivity maps used
  };

  /// masked_ksp: [n_c, ny, nx] complex sub-sampled measurements.
  Forward forward(const Tensor<std::complex<T>>& masked_ksp,
                  const SamplingMask& mask);

  struct BlockStep {
    ag::Var<T> kspace;
    std::vector<ag::Var<T>> hidden;
  };
  /// One unrolled iteration t (0-based) of the update rule.
  BlockStep block_step(int t, const ag::Var<T>& kspace,
                       const ag::Var<T>& measured, const SamplingMask& mask,
                       const ag::Var<T>& maps,
                       const std::vector<ag::Var<T>>& hidden) const;

  const ModelConfig& config() const { return cfg_; }
  nn::ParamRegistry<T>& params() { return reg_; }
  const nn::ParamRegistry<T>& params() const { return reg_; }
  std::int64_t parameter_count() const { return reg_.total_size(); }

  const nnmod::RecurrentUnit<T>& unit(int t) const {
    return units_[cfg_.share_weights ? 0 : static_cast<std::size_t>(t)];
  }
  ag::Var<T>& step_size(int t) { return alphas_[static_cast<std::size_t>(t)]; }

  /// Zero every parameter (including step sizes); with the step sizes then
  /// set to 1 this gives the refinement-free fixed point.
  void zero_all_parameters();

 private:
  ModelConfig cfg_;
  nn::ParamRegistry<T> reg_;
  std::vector<nnmod::RecurrentUnit<T>> units_;
  std::vector<ag::Var<T>> alphas_;
  std::optional<nnmod::StateInitializer<T>> rsi_;
  std::optional<SensitivityRefiner<T>> ser_;
};

}  // namespace rvn
