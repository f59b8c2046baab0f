#pragma once

#include <functional>

#include "rvn/autodiff.hpp"
#include "test_util.hpp"

namespace rvn::test {

/// Central finite differences of a scalar functional at x.
template <typename Fn>
Tensor<double> fd_gradient(Fn&& f, Tensor<double> x, double eps = 1e-6) {
  Tensor<double> g(x.shape());
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    const double orig = x[i];
    x[i] = orig + eps;
    const double fp = f(x);
    x[i] = orig - eps;
    const double fm = f(x);
    x[i] = orig;
    g[i] = (fp - fm) / (2.0 * eps);
  }
  return g;
}

/// Norm-wise relative error ||a - b|| / max(||b||, tiny).
inline double rel_err(const Tensor<double>& a, const Tensor<double>& b) {
  double diff = 0.0, ref = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    ref += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(ref), 1e-30);
}

/// Scalar probe: <out, w> with a fixed weighting, so every output component
/// contributes to the scalar being differentiated.
inline ag::Var<double> probe(const ag::Var<double>& out,
                             const Tensor<double>& w) {
  return ag::sum_op(ag::mul(out, ag::Var<double>::constant(w)));
}

/// FD check of d make_scalar(leaves) / d inputs[which].
/// `make_scalar` must rebuild the graph from the given leaves on each call.
inline double var_grad_error(
    const std::function<ag::Var<double>(std::vector<ag::Var<double>>&)>&
        make_scalar,
    std::vector<Tensor<double>> inputs, std::size_t which, double eps = 1e-6) {
  std::vector<ag::Var<double>> leaves;
  for (auto& t : inputs) leaves.push_back(ag::Var<double>::leaf(t, true));
  auto root = make_scalar(leaves);
  ag::backward(root);
  Tensor<double> analytic = leaves[which].grad();

  auto value_at = [&](const Tensor<double>& x) {
    ag::NoGradGuard ng;
    std::vector<ag::Var<double>> ls;
    for (std::size_t i = 0; i < inputs.size(); ++i)
      ls.push_back(ag::Var<double>::leaf(i == which ? x : inputs[i], false));
    return make_scalar(ls).value()[0];
  };
  Tensor<double> fd = fd_gradient(value_at, inputs[which], eps);
  return rel_err(analytic, fd);
}

}  // namespace rvn::test
