#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rvn/autodiff.hpp"

namespace rvn {

struct TrainConfig {
  double lr_peak = 5e-4;
  std::int64_t warmup_iters = 1000;
  std::int64_t decay_every = 20000;
  double decay_factor = 0.2;
  std::int64_t batch_size = 4;
  std::int64_t total_iters = 0;
  double w1 = 1.0;  // L1 weight
  double w2 = 1.0;  // SSIM weight
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  std::uint64_t seed = 1;
  std::vector<double> accelerations{5, 10};
  std::string mask_kind = "variable_density";  // | "random_cartesian"
  double acs_fraction = 0.08;   // cartesian masks
  double center_radius = 0.12;  // variable-density central disc
  std::int64_t checkpoint_every = 500;
  std::int64_t validate_every = 250;
  double grad_clip = 0.0;  // 0 disables clipping

  void validate() const;
};

/// Warmup/step-decay schedule: linear ramp to lr_peak over warmup_iters,
/// then lr_peak * decay_factor^(iter / decay_every) with the decay clock
/// counted from iteration 0.
double lr_at(std::int64_t iter, const TrainConfig& cfg);

template <typename T>
class Adam {
 public:
  Adam(double beta1, double beta2, double eps)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  /// One update over the parameter list; reads .grad(), writes .value().
  void step(std::vector<ag::Var<T>>& params, double lr);

  std::int64_t step_count() const { return t_; }
  std::vector<Tensor<T>>& first_moments() { return m_; }
  std::vector<Tensor<T>>& second_moments() { return v_; }
  void restore(std::int64_t step_count, std::vector<Tensor<T>> m,
               std::vector<Tensor<T>> v) {
    t_ = step_count;
    m_ = std::move(m);
    v_ = std::move(v);
  }

 private:
  double beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::vector<Tensor<T>> m_, v_;
};

/// Global-norm gradient clipping; returns the pre-clip norm.
template <typename T>
double clip_grad_norm(std::vector<ag::Var<T>>& params, double max_norm);

}  // namespace rvn
