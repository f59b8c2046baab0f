#include <doctest.h>

#include "grad_check.hpp"
#include "rvn/autodiff.hpp"
#include "rvn/rng.hpp"

using namespace rvn;
using namespace rvn::ag;
using test::probe;
using test::random_real;
using test::var_grad_error;
using V = Var<double>;
using VList = std::vector<V>;

namespace {

/// Inputs shifted away from zero so kinked ops (relu, abs) are FD-safe.
Tensor<double> random_away_from_zero(const Shape& s, Rng& rng) {
  auto t = random_real<double>(s, rng);
  for (std::int64_t i = 0; i < t.numel(); ++i)
    t[i] += t[i] >= 0 ? 0.3 : -0.3;
  return t;
}

}  // namespace

TEST_CASE("binary elementwise op gradients match finite differences") {
  Rng rng(1);
  const Shape s{3, 4};
  auto a = random_away_from_zero(s, rng);
  auto b = random_away_from_zero(s, rng);
  auto w = random_real<double>(s, rng);

  auto check = [&](auto opfn) {
    for (std::size_t which : {0u, 1u}) {
      auto err = var_grad_error(
          [&](VList& ls) { return probe(opfn(ls[0], ls[1]), w); }, {a, b},
          which);
      CHECK(err < 1e-8);
    }
  };
  check([](const V& x, const V& y) { return add(x, y); });
  check([](const V& x, const V& y) { return sub(x, y); });
  check([](const V& x, const V& y) { return mul(x, y); });
  check([](const V& x, const V& y) { return div(x, y); });
}

TEST_CASE("unary op gradients match finite differences") {
  Rng rng(2);
  const Shape s{2, 5};
  auto x = random_away_from_zero(s, rng);
  auto w = random_real<double>(s, rng);

  auto check = [&](auto opfn, double tol = 1e-8) {
    auto err = var_grad_error(
        [&](VList& ls) { return probe(opfn(ls[0]), w); }, {x}, 0);
    CHECK(err < tol);
  };
  check([](const V& v) { return relu(v); });
  check([](const V& v) { return leaky_relu(v, 0.2); });
  check([](const V& v) { return sigmoid(v); });
  check([](const V& v) { return tanh_op(v); });
  check([](const V& v) { return abs_op(v); });
  check([](const V& v) { return scale(v, -1.7); });
  check([](const V& v) { return add_scalar(v, 2.5); });
  check([](const V& v) { return clamp_min(v, -5.0); });

  auto wflat = random_real<double>({10}, rng);
  CHECK(var_grad_error(
            [&](VList& ls) { return probe(reshape(ls[0], {10}), wflat); }, {x},
            0) < 1e-8);

  // sqrt needs positive input
  auto pos = x;
  for (std::int64_t i = 0; i < pos.numel(); ++i) pos[i] = std::abs(pos[i]) + 1;
  auto err = var_grad_error(
      [&](VList& ls) { return probe(sqrt_op(ls[0]), w); }, {pos}, 0);
  CHECK(err < 1e-8);
}

TEST_CASE("reduction gradients match finite differences") {
  Rng rng(3);
  auto x = random_real<double>({4, 3}, rng);
  CHECK(var_grad_error([&](VList& ls) { return sum_op(ls[0]); }, {x}, 0) <
        1e-8);
  CHECK(var_grad_error([&](VList& ls) { return mean_op(ls[0]); }, {x}, 0) <
        1e-8);
}

TEST_CASE("scale_by differentiates both the tensor and the scalar") {
  Rng rng(4);
  auto x = random_real<double>({3, 3}, rng);
  Tensor<double> alpha({1});
  alpha[0] = 0.8;
  auto w = random_real<double>({3, 3}, rng);
  auto build = [&](VList& ls) { return probe(scale_by(ls[0], ls[1]), w); };
  CHECK(var_grad_error(build, {x, alpha}, 0) < 1e-8);
  CHECK(var_grad_error(build, {x, alpha}, 1) < 1e-8);
}

TEST_CASE("diamond graphs accumulate gradients from every path") {
  Rng rng(5);
  auto x0 = random_real<double>({6}, rng);
  auto x = V::leaf(x0, true);
  auto y = sum_op(mul(x, x));
  backward(y);
  for (std::int64_t i = 0; i < 6; ++i)
    CHECK(x.grad()[i] == doctest::Approx(2.0 * x0[i]).epsilon(1e-12));
}

TEST_CASE("a parameter shared by two branches gets both contributions") {
  Rng rng(6);
  auto w0 = random_real<double>({4}, rng);
  auto a0 = random_real<double>({4}, rng);
  auto b0 = random_real<double>({4}, rng);
  auto w = V::leaf(w0, true);
  auto loss =
      add(sum_op(mul(w, V::constant(a0))), sum_op(mul(w, V::constant(b0))));
  backward(loss);
  for (std::int64_t i = 0; i < 4; ++i)
    CHECK(w.grad()[i] == doctest::Approx(a0[i] + b0[i]).epsilon(1e-12));
}

TEST_CASE("backward requires a scalar root") {
  auto x = V::leaf(Tensor<double>({2, 2}), true);
  CHECK_THROWS_AS(backward(add(x, x)), std::invalid_argument);
}

TEST_CASE("NoGradGuard prunes the tape") {
  auto x = V::leaf(Tensor<double>::full({3}, 1.0), true);
  {
    NoGradGuard ng;
    auto y = mul(x, x);
    CHECK_FALSE(y.requires_grad());
    CHECK(y.node()->parents.empty());
  }
  auto y = mul(x, x);
  CHECK(y.requires_grad());
}

TEST_CASE("grads accumulate across backward calls until zeroed") {
  auto x = V::leaf(Tensor<double>::full({2}, 3.0), true);
  auto run = [&] { backward(sum_op(mul(x, x))); };
  run();
  CHECK(x.grad()[0] == doctest::Approx(6.0));
  run();
  CHECK(x.grad()[0] == doctest::Approx(12.0));
  x.zero_grad();
  run();
  CHECK(x.grad()[0] == doctest::Approx(6.0));
}

TEST_CASE("constants never require gradients") {
  auto c = V::constant(Tensor<double>::full({2}, 1.0));
  auto x = V::leaf(Tensor<double>::full({2}, 2.0), true);
  auto y = sum_op(mul(c, x));
  backward(y);
  CHECK(c.node()->grad.numel() == 0);
}
