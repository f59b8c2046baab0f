#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rvn/tensor.hpp"

namespace rvn::ag {

/// One tape entry: a value, its gradient buffer, and the closure that
/// pushes the gradient to the parents. Nodes without requires_grad carry
/// no parents, so inference graphs free intermediates eagerly.
template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // allocated lazily, same shape as value
  bool requires_grad = false;
  std::string name;
  std::vector<std::shared_ptr<Node<T>>> parents;
  std::function<void(Node<T>&)> backward_fn;

  Tensor<T>& ensure_grad() {
    if (grad.numel() == 0) grad = Tensor<T>(value.shape());
    return grad;
  }
  void accumulate(const Tensor<T>& g) {
    Tensor<T>& dst = ensure_grad();
    for (std::int64_t i = 0; i < g.numel(); ++i) dst[i] += g[i];
  }
};

/// Globally disables taping (thread-local); used for validation/inference.
struct GradMode {
  static bool& enabled();
};

struct NoGradGuard {
  NoGradGuard() : prev_(GradMode::enabled()) { GradMode::enabled() = false; }
  ~NoGradGuard() { GradMode::enabled() = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<T>> n) : node_(std::move(n)) {}

  static Var leaf(Tensor<T> value, bool requires_grad = false,
                  std::string name = {}) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    n->name = std::move(name);
    return Var(std::move(n));
  }

  static Var constant(Tensor<T> value) { return leaf(std::move(value)); }

  /// Graph op result. The tape edge is dropped when gradients are globally
  /// disabled or no parent needs them.
  static Var result(Tensor<T> value, std::vector<Var> parents,
                    std::function<void(Node<T>&)> backward_fn) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    bool need = GradMode::enabled();
    if (need) {
      need = false;
      for (const auto& p : parents)
        if (p.defined() && p.requires_grad()) {
          need = true;
          break;
        }
    }
    if (need) {
      n->requires_grad = true;
      n->parents.reserve(parents.size());
      for (auto& p : parents) n->parents.push_back(p.node_);
      n->backward_fn = std::move(backward_fn);
    }
    return Var(std::move(n));
  }

  bool defined() const { return node_ != nullptr; }
  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& value() { return node_->value; }
  Tensor<T>& grad() { return node_->ensure_grad(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  const Shape& shape() const { return node_->value.shape(); }
  const std::string& name() const { return node_->name; }
  std::shared_ptr<Node<T>> node() const { return node_; }

  void zero_grad() {
    if (node_) node_->grad = Tensor<T>();
  }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Reverse-mode sweep from a scalar root; gradients accumulate into every
/// reachable node that requires them.
template <typename T>
void backward(const Var<T>& root);

// ---- elementwise / reduction ops ----------------------------------------

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> div(const Var<T>& a, const Var<T>& b);

template <typename T>
Var<T> scale(const Var<T>& x, double c);
template <typename T>
Var<T> add_scalar(const Var<T>& x, double c);

/// x * alpha with alpha a trainable scalar (shape [1]).
template <typename T>
Var<T> scale_by(const Var<T>& x, const Var<T>& alpha);

template <typename T>
Var<T> relu(const Var<T>& x);
template <typename T>
Var<T> leaky_relu(const Var<T>& x, double negative_slope);
template <typename T>
Var<T> sigmoid(const Var<T>& x);
template <typename T>
Var<T> tanh_op(const Var<T>& x);
template <typename T>
Var<T> abs_op(const Var<T>& x);
template <typename T>
Var<T> sqrt_op(const Var<T>& x);
template <typename T>
Var<T> clamp_min(const Var<T>& x, double floor);

/// Sum / mean over all elements -> shape [1]; accumulated in double.
template <typename T>
Var<T> sum_op(const Var<T>& x);
template <typename T>
Var<T> mean_op(const Var<T>& x);

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape);

}  // namespace rvn::ag
