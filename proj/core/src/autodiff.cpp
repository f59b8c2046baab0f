#include "rvn/autodiff.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace rvn::ag {

bool& GradMode::enabled() {
  thread_local bool flag = true;
  return flag;
}

template <typename T>
void backward(const Var<T>& root) {
  auto r = root.node();
  if (!r) throw std::invalid_argument("backward: undefined root");
  if (r->value.numel() != 1)
    throw std::invalid_argument("backward: root must be a scalar");
  if (!r->requires_grad) return;  // nothing reachable needs gradients

  // reverse post-order DFS = consumers before producers
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  struct Frame {
    Node<T>* n;
    std::size_t next;
  };
  std::vector<Frame> stack{{r.get(), 0}};
  visited.insert(r.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.n->parents.size()) {
      Node<T>* p = f.n->parents[f.next++].get();
      if (p && p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.n);
      stack.pop_back();
    }
  }

  r->ensure_grad()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
}

template void backward(const Var<float>&);
template void backward(const Var<double>&);

namespace {

template <typename T>
void check_same_shape(const Var<T>& a, const Var<T>& b, const char* who) {
  if (!a.value().same_shape(b.value()))
    throw std::invalid_argument(std::string(who) + ": shape mismatch " +
                                shape_to_string(a.shape()) + " vs " +
                                shape_to_string(b.shape()));
}

}  // namespace

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  check_same_shape(a, b, "add");
  Tensor<T> out(a.value().shape());
  for (std::int64_t i = 0; i < out.numel(); ++i)
    out[i] = a.value()[i] + b.value()[i];
  return Var<T>::result(std::move(out), {a, b}, [](Node<T>& self) {
    if (self.parents[0]->requires_grad) self.parents[0]->accumulate(self.grad);
    if (self.parents[1]->requires_grad) self.parents[1]->accumulate(self.grad);
  });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  check_same_shape(a, b, "sub");
  Tensor<T> out(a.value().shape());
  for (std::int64_t i = 0; i < out.numel(); ++i)
    out[i] = a.value()[i] - b.value()[i];
  return Var<T>::result(std::move(out), {a, b}, [](Node<T>& self) {
    if (self.parents[0]->requires_grad) self.parents[0]->accumulate(self.grad);
    if (self.parents[1]->requires_grad) {
      Tensor<T>& dst = self.parents[1]->ensure_grad();
      for (std::int64_t i = 0; i < dst.numel(); ++i) dst[i] -= self.grad[i];
    }
  });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  check_same_shape(a, b, "mul");
  Tensor<T> out(a.value().shape());
  for (std::int64_t i = 0; i < out.numel(); ++i)
    out[i] = a.value()[i] * b.value()[i];
  return Var<T>::result(std::move(out), {a, b}, [](Node<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      Tensor<T>& dst = pa.ensure_grad();
      for (std::int64_t i = 0; i < dst.numel(); ++i)
        dst[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      Tensor<T>& dst = pb.ensure_grad();
      for (std::int64_t i = 0; i < dst.numel(); ++i)
        dst[i] += self.grad[i] * pa.value[i];
    }
  });
}

template <typename T>
Var<T> div(const Var<T>& a, const Var<T>& b) {
  check_same_shape(a, b, "div");
  Tensor<T> out(a.value().shape());
  for (std::int64_t i = 0; i < out.numel(); ++i)
    out[i] = a.value()[i] / b.value()[i];
  return Var<T>::result(std::move(out), {a, b}, [](Node<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      Tensor<T>& dst = pa.ensure_grad();
      for (std::int64_t i = 0; i < dst.numel(); ++i)
        dst[i] += self.grad[i] / pb.value[i];
    }
    if (pb.requires_grad) {
      Tensor<T>& dst = pb.ensure_grad();
      for (std::int64_t i = 0; i < dst.numel(); ++i)
        dst[i] -= self.grad[i] * self.value[i] / pb.value[i];
    }
  });
}

template <typename T>
Var<T> scale(const Var<T>& x, double c) {
  Tensor<T> out(x.value().shape());
  const T tc = static_cast<T>(c);
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = x.value()[i] * tc;
  return Var<T>::result(std::move(out), {x}, [tc](Node<T>& self) {
    Tensor<T>& dst = self.parents[0]->ensure_grad();
    for (std::int64_t i = 0; i < dst.numel(); ++i) dst[i] += self.grad[i] * tc;
  });
}

template <typename T>
Var<T> add_scalar(const Var<T>& x, double c) {
  Tensor<T> out(x.value().shape());
  const T tc = static_cast<T>(c);
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = x.value()[i] + tc;
  return Var<T>::result(std::move(out), {x}, [](Node<T>& self) {
    self.parents[0]->accumulate(self.grad);
  });
}

template <typename T>
Var<T> scale_by(const Var<T>& x, const Var<T>& alpha) {
  if (alpha.value().numel() != 1)
    throw std::invalid_argument("scale_by: alpha must be a scalar");
  const T a = alpha.value()[0];
  Tensor<T> out(x.value().shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = x.value()[i] * a;
  return Var<T>::result(std::move(out), {x, alpha}, [](Node<T>& self) {
    auto& px = *self.parents[0];
    auto& pa = *self.parents[1];
    const T a = pa.value[0];
    if (px.requires_grad) {
      Tensor<T>& dst = px.ensure_grad();
      for (std::int64_t i = 0; i < dst.numel(); ++i)
        dst[i] += self.grad[i] * a;
    }
    if (pa.requires_grad) {
      double s = 0.0;
      for (std::int64_t i = 0; i < self.grad.numel(); ++i)
        s += static_cast<double>(self.grad[i]) * px.value[i];
      pa.ensure_grad()[0] += static_cast<T>(s);
    }
  });
}

namespace {

/// Generic unary elementwise op; dfn(x, y) is the local derivative given
/// input and output values.
template <typename T, typename F, typename DF>
Var<T> unary(const Var<T>& x, F&& fn, DF&& dfn) {
  Tensor<T> out(x.value().shape());
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = fn(x.value()[i]);
  return Var<T>::result(std::move(out), {x}, [dfn](Node<T>& self) {
    auto& p = *self.parents[0];
    Tensor<T>& dst = p.ensure_grad();
    for (std::int64_t i = 0; i < dst.numel(); ++i)
      dst[i] += self.grad[i] * dfn(p.value[i], self.value[i]);
  });
}

}  // namespace

template <typename T>
Var<T> relu(const Var<T>& x) {
  // negative branch multiplies by zero so NaN/Inf propagate instead of
  // being silently replaced by 0
  return unary(
      x, [](T v) { return v > T(0) ? v : T(0) * v; },
      [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Var<T> leaky_relu(const Var<T>& x, double negative_slope) {
  const T s = static_cast<T>(negative_slope);
  return unary(
      x, [s](T v) { return v > T(0) ? v : s * v; },
      [s](T v, T) { return v > T(0) ? T(1) : s; });
}

template <typename T>
Var<T> sigmoid(const Var<T>& x) {
  return unary(
      x, [](T v) { return T(1) / (T(1) + std::exp(-v)); },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Var<T> tanh_op(const Var<T>& x) {
  return unary(
      x, [](T v) { return std::tanh(v); },
      [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Var<T> abs_op(const Var<T>& x) {
  return unary(
      x, [](T v) { return std::abs(v); },
      [](T v, T) { return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0)); });
}

template <typename T>
Var<T> sqrt_op(const Var<T>& x) {
  return unary(
      x, [](T v) { return std::sqrt(v); },
      [](T, T y) { return y > T(0) ? T(1) / (T(2) * y) : T(0); });
}

template <typename T>
Var<T> clamp_min(const Var<T>& x, double floor) {
  const T f = static_cast<T>(floor);
  return unary(
      x, [f](T v) { return v < f ? f : v; },
      [f](T v, T) { return v < f ? T(0) : T(1); });
}

template <typename T>
Var<T> sum_op(const Var<T>& x) {
  double s = 0.0;
  for (std::int64_t i = 0; i < x.value().numel(); ++i)
    s += static_cast<double>(x.value()[i]);
  Tensor<T> out({1});
  out[0] = static_cast<T>(s);
  return Var<T>::result(std::move(out), {x}, [](Node<T>& self) {
    auto& p = *self.parents[0];
    Tensor<T>& dst = p.ensure_grad();
    const T g = self.grad[0];
    for (std::int64_t i = 0; i < dst.numel(); ++i) dst[i] += g;
  });
}

template <typename T>
Var<T> mean_op(const Var<T>& x) {
  const std::int64_t n = x.value().numel();
  if (n == 0) throw std::invalid_argument("mean_op: empty tensor");
  double s = 0.0;
  for (std::int64_t i = 0; i < n; ++i) s += static_cast<double>(x.value()[i]);
  Tensor<T> out({1});
  out[0] = static_cast<T>(s / static_cast<double>(n));
  return Var<T>::result(std::move(out), {x}, [n](Node<T>& self) {
    auto& p = *self.parents[0];
    Tensor<T>& dst = p.ensure_grad();
    const T g = self.grad[0] / static_cast<T>(n);
    for (std::int64_t i = 0; i < dst.numel(); ++i) dst[i] += g;
  });
}

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape) {
  Tensor<T> out = x.value().reshaped(std::move(shape));
  return Var<T>::result(std::move(out), {x}, [](Node<T>& self) {
    auto& p = *self.parents[0];
    Tensor<T>& dst = p.ensure_grad();
    for (std::int64_t i = 0; i < dst.numel(); ++i) dst[i] += self.grad[i];
  });
}

#define RVN_INSTANTIATE_AG(T)                             \
  template Var<T> add(const Var<T>&, const Var<T>&);      \
  template Var<T> sub(const Var<T>&, const Var<T>&);      \
  template Var<T> mul(const Var<T>&, const Var<T>&);      \
  template Var<T> div(const Var<T>&, const Var<T>&);      \
  template Var<T> scale(const Var<T>&, double);           \
  template Var<T> add_scalar(const Var<T>&, double);      \
  template Var<T> scale_by(const Var<T>&, const Var<T>&); \
  template Var<T> relu(const Var<T>&);                    \
  template Var<T> leaky_relu(const Var<T>&, double);      \
  template Var<T> sigmoid(const Var<T>&);                 \
  template Var<T> tanh_op(const Var<T>&);                 \
  template Var<T> abs_op(const Var<T>&);                  \
  template Var<T> sqrt_op(const Var<T>&);                 \
  template Var<T> clamp_min(const Var<T>&, double);       \
  template Var<T> sum_op(const Var<T>&);                  \
  template Var<T> mean_op(const Var<T>&);                 \
  template Var<T> reshape(const Var<T>&, Shape);

RVN_INSTANTIATE_AG(float)
RVN_INSTANTIATE_AG(double)

#undef RVN_INSTANTIATE_AG

}  // namespace rvn::ag
