#pragma once

#include "rvn/autodiff.hpp"
#include "rvn/rng.hpp"

namespace rvn::nn {

using ag::Var;

/// Named trainable leaves, in registration order. Checkpointing and the
/// optimizer key off the names.
template <typename T>
class ParamRegistry {
 public:
  Var<T> add(const std::string& name, Tensor<T> init) {
    for (const auto& p : params_)
      if (p.name() == name)
        throw std::invalid_argument("ParamRegistry: duplicate name " + name);
    auto v = Var<T>::leaf(std::move(init), true, name);
    params_.push_back(v);
    return v;
  }

  std::vector<Var<T>>& items() { return params_; }
  const std::vector<Var<T>>& items() const { return params_; }

  Var<T>* find(const std::string& name) {
    for (auto& p : params_)
      if (p.name() == name) return &p;
    return nullptr;
  }

  std::int64_t total_size() const {
    std::int64_t n = 0;
    for (const auto& p : params_) n += p.value().numel();
    return n;
  }

  void zero_grads() {
    for (auto& p : params_) p.zero_grad();
  }

 private:
  std::vector<Var<T>> params_;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) init.
template <typename T>
Tensor<T> uniform_fan_in(Shape shape, std::int64_t fan_in, Rng& rng);

/// Copy parameter values by name between registries (e.g. into a
/// double-precision twin for gradient verification). Every destination
/// name must exist in the source with the same shape.
template <typename A, typename B>
void copy_params(const ParamRegistry<A>& src, ParamRegistry<B>& dst) {
  for (auto& d : dst.items()) {
    const Var<A>* s = nullptr;
    for (const auto& c : src.items())
      if (c.name() == d.name()) {
        s = &c;
        break;
      }
    if (!s || !(s->value().shape() == d.value().shape()))
      throw std::invalid_argument("copy_params: missing or mismatched " +
                                  d.name());
    for (std::int64_t i = 0; i < d.value().numel(); ++i)
      d.value()[i] = static_cast<B>(s->value()[i]);
  }
}

/// 2D convolution, stride 1, zero padding `pad` on each side, optional
/// dilation. x: [Cin, H, W], w: [Cout, Cin, kh, kw], b: [Cout] or an
/// undefined Var for no bias.
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int pad,
              int dilation = 1);

/// 2x2 max pooling, stride 2; spatial dims must be even.
template <typename T>
Var<T> max_pool2(const Var<T>& x);

/// 2x nearest-neighbour upsampling.
template <typename T>
Var<T> upsample_nearest2(const Var<T>& x);

/// Replication (edge) padding of `pad` pixels on every side.
template <typename T>
Var<T> pad_replicate(const Var<T>& x, int pad);

/// Spatial crop of a [C, H, W] tensor.
template <typename T>
Var<T> crop2d(const Var<T>& x, std::int64_t y0, std::int64_t x0,
              std::int64_t h, std::int64_t w);

/// Channel concatenation of [Ca, H, W] and [Cb, H, W].
template <typename T>
Var<T> concat_ch(const Var<T>& a, const Var<T>& b);

/// Per-channel normalization over the spatial dims with affine parameters
/// gamma, beta of shape [C].
template <typename T>
Var<T> instance_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                     double eps = 1e-5);

/// Convolution layer bundle.
template <typename T>
struct Conv2d {
  Var<T> weight;  // [Cout, Cin, k, k]
  Var<T> bias;    // [Cout] or undefined
  int pad = 0;
  int dilation = 1;

  Var<T> operator()(const Var<T>& x) const {
    return conv2d(x, weight, bias, pad, dilation);
  }
};

template <typename T>
Conv2d<T> make_conv2d(ParamRegistry<T>& reg, const std::string& name,
                      std::int64_t cin, std::int64_t cout, int kernel, int pad,
                      int dilation, Rng& rng, bool bias = true);

}  // namespace rvn::nn
