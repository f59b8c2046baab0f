#include "rvn/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace rvn {

void TrainConfig::validate() const {
  if (lr_peak <= 0) throw std::invalid_argument("train: lr_peak > 0");
  if (warmup_iters < 0) throw std::invalid_argument("train: warmup_iters >= 0");
  if (decay_every <= 0) throw std::invalid_argument("train: decay_every > 0");
  if (decay_factor <= 0 || decay_factor > 1)
    throw std::invalid_argument("train: decay_factor in (0, 1]");
  if (batch_size < 1) throw std::invalid_argument("train: batch_size >= 1");
  if (total_iters < 0) throw std::invalid_argument("train: total_iters >= 0");
  if (w1 < 0 || w1 > 1 || w2 < 0 || w2 > 1)
    throw std::invalid_argument("train: w1, w2 must lie in [0, 1]");
  if (beta1 <= 0 || beta1 >= 1 || beta2 <= 0 || beta2 >= 1)
    throw std::invalid_argument("train: betas in (0, 1)");
  if (adam_eps <= 0) throw std::invalid_argument("train: adam_eps > 0");
  if (accelerations.empty())
    throw std::invalid_argument("train: accelerations nonempty");
  for (double r : accelerations)
    if (r < 1) throw std::invalid_argument("train: accelerations >= 1");
  if (mask_kind != "variable_density" && mask_kind != "random_cartesian")
    throw std::invalid_argument(
        "train: mask_kind must be variable_density or random_cartesian");
  if (acs_fraction <= 0 || acs_fraction > 1)
    throw std::invalid_argument("train: acs_fraction in (0, 1]");
  if (center_radius <= 0 || center_radius > 1)
    throw std::invalid_argument("train: center_radius in (0, 1]");
  if (checkpoint_every < 1)
    throw std::invalid_argument("train: checkpoint_every >= 1");
  if (validate_every < 1)
    throw std::invalid_argument("train: validate_every >= 1");
  if (grad_clip < 0) throw std::invalid_argument("train: grad_clip >= 0");
}

double lr_at(std::int64_t iter, const TrainConfig& cfg) {
  if (iter < 0) throw std::invalid_argument("lr_at: negative iteration");
  if (iter < cfg.warmup_iters)
    return cfg.lr_peak * static_cast<double>(iter + 1) /
           static_cast<double>(cfg.warmup_iters);
  const std::int64_t decays = iter / cfg.decay_every;
  return cfg.lr_peak * std::pow(cfg.decay_factor,
                                static_cast<double>(decays));
}

template <typename T>
void Adam<T>::step(std::vector<ag::Var<T>>& params, double lr) {
  if (m_.empty()) {
    for (auto& p : params) {
      m_.push_back(Tensor<T>(p.value().shape()));
      v_.push_back(Tensor<T>(p.value().shape()));
    }
  }
  if (m_.size() != params.size())
    throw std::invalid_argument("Adam: parameter list changed size");

  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    const Tensor<T>& g = p.grad();
    Tensor<T>& m = m_[i];
    Tensor<T>& v = v_[i];
    for (std::int64_t j = 0; j < g.numel(); ++j) {
      const double gj = static_cast<double>(g[j]);
      const double mj = beta1_ * m[j] + (1.0 - beta1_) * gj;
      const double vj = beta2_ * v[j] + (1.0 - beta2_) * gj * gj;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      p.value()[j] -= static_cast<T>(lr * (mj / bc1) /
                                     (std::sqrt(vj / bc2) + eps_));
    }
  }
}

template <typename T>
double clip_grad_norm(std::vector<ag::Var<T>>& params, double max_norm) {
  double total = 0.0;
  for (auto& p : params) {
    const Tensor<T>& g = p.grad();
    for (std::int64_t j = 0; j < g.numel(); ++j)
      total += static_cast<double>(g[j]) * g[j];
  }
  const double norm = std::sqrt(total);
  if (max_norm > 0 && norm > max_norm) {
    const T s = static_cast<T>(max_norm / norm);
    for (auto& p : params) {
      Tensor<T>& g = p.grad();
      for (std::int64_t j = 0; j < g.numel(); ++j) g[j] *= s;
    }
  }
  return norm;
}

template class Adam<float>;
template class Adam<double>;
template double clip_grad_norm(std::vector<ag::Var<float>>&, double);
template double clip_grad_norm(std::vector<ag::Var<double>>&, double);

}  // namespace rvn
