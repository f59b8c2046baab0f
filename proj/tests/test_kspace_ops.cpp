#include <doctest.h>

#include "grad_check.hpp"
#include "rvn/kspace_ops.hpp"
#include "rvn/operators.hpp"
#include "rvn/rng.hpp"

using namespace rvn;
using namespace rvn::ag;
using test::probe;
using test::random_complex;
using test::random_real;
using test::var_grad_error;
using V = Var<double>;
using VList = std::vector<V>;

TEST_CASE("fft2c_ch agrees with the complex-domain operator") {
  Rng rng(1);
  auto x = random_complex({3, 8, 6}, rng);
  auto via_graph =
      channels_to_complex(fft2c_ch(V::constant(complex_to_channels(x))).value());
  CHECK(max_abs_diff(via_graph, fft2c(x)) < 1e-12);

  auto inv_graph = channels_to_complex(
      ifft2c_ch(V::constant(complex_to_channels(x))).value());
  CHECK(max_abs_diff(inv_graph, ifft2c(x)) < 1e-12);
}

TEST_CASE("fft2c_ch gradient (adjoint) matches finite differences") {
  Rng rng(2);
  auto x = random_real<double>({2, 2, 6, 5}, rng);
  auto w = random_real<double>({2, 2, 6, 5}, rng);
  // linear op: no FD truncation error, so a large step suppresses rounding
  CHECK(var_grad_error(
            [&](VList& ls) { return probe(fft2c_ch(ls[0]), w); }, {x}, 0,
            1e-4) < 1e-9);
  CHECK(var_grad_error(
            [&](VList& ls) { return probe(ifft2c_ch(ls[0]), w); }, {x}, 0,
            1e-4) < 1e-9);
}

TEST_CASE("expand_ch equals the complex expand operator") {
  Rng rng(3);
  auto img = random_complex({6, 5}, rng);
  auto maps = random_complex({3, 6, 5}, rng);
  auto out = expand_ch(V::constant(complex_to_channels(img)),
                       V::constant(complex_to_channels(maps)));
  CHECK(max_abs_diff(channels_to_complex(out.value()), expand(img, maps)) <
        1e-14);
}

TEST_CASE("expand_ch gradients for both image and maps") {
  Rng rng(4);
  auto img = random_real<double>({2, 4, 5}, rng);
  auto maps = random_real<double>({2, 3, 4, 5}, rng);
  auto w = random_real<double>({2, 3, 4, 5}, rng);
  auto build = [&](VList& ls) { return probe(expand_ch(ls[0], ls[1]), w); };
  CHECK(var_grad_error(build, {img, maps}, 0) < 1e-9);
  CHECK(var_grad_error(build, {img, maps}, 1) < 1e-9);
}

TEST_CASE("reduce_ch equals the complex reduce operator") {
  Rng rng(5);
  auto coils = random_complex({4, 5, 6}, rng);
  auto maps = random_complex({4, 5, 6}, rng);
  auto out = reduce_ch(V::constant(complex_to_channels(coils)),
                       V::constant(complex_to_channels(maps)));
  CHECK(max_abs_diff(channels_to_complex(out.value()), reduce(coils, maps)) <
        1e-13);
}

TEST_CASE("reduce_ch gradients for both coils and maps") {
  Rng rng(6);
  auto coils = random_real<double>({2, 3, 4, 4}, rng);
  auto maps = random_real<double>({2, 3, 4, 4}, rng);
  auto w = random_real<double>({2, 4, 4}, rng);
  auto build = [&](VList& ls) { return probe(reduce_ch(ls[0], ls[1]), w); };
  CHECK(var_grad_error(build, {coils, maps}, 0) < 1e-9);
  CHECK(var_grad_error(build, {coils, maps}, 1) < 1e-9);
}

TEST_CASE("rss_ch equals the complex rss operator") {
  Rng rng(7);
  auto coils = random_complex({5, 6, 4}, rng);
  auto out = rss_ch(V::constant(complex_to_channels(coils)));
  auto ref = rss(coils);
  CHECK(out.value().shape() == ref.shape());
  CHECK(max_abs_diff(out.value(), ref) < 1e-13);
}

TEST_CASE("rss_ch gradient matches finite differences") {
  Rng rng(8);
  auto coils = random_real<double>({2, 3, 5, 4}, rng);
  auto w = random_real<double>({5, 4}, rng);
  CHECK(var_grad_error([&](VList& ls) { return probe(rss_ch(ls[0]), w); },
                       {coils}, 0) < 1e-8);
}

TEST_CASE("apply_mask_ch masks all coils and channels alike") {
  Rng rng(9);
  auto x = random_real<double>({2, 3, 6, 6}, rng);
  auto m = random_cartesian_mask(6, 6, 2, 0.2, 3);
  auto out = apply_mask_ch(V::constant(x), m.mask);
  for (std::int64_t p = 0; p < 6; ++p)
    for (std::int64_t i = 0; i < 36; ++i)
      CHECK(out.value()[p * 36 + i] == (m.mask[i] ? x[p * 36 + i] : 0.0));
  auto w = random_real<double>({2, 3, 6, 6}, rng);
  CHECK(var_grad_error(
            [&](VList& ls) { return probe(apply_mask_ch(ls[0], m.mask), w); },
            {x}, 0) < 1e-9);
}

TEST_CASE("div_bcast_hw divides per pixel and differentiates both sides") {
  Rng rng(10);
  auto x = random_real<double>({2, 2, 4, 4}, rng);
  auto r = random_real<double>({4, 4}, rng);
  for (std::int64_t i = 0; i < r.numel(); ++i) r[i] = std::abs(r[i]) + 0.5;
  auto w = random_real<double>({2, 2, 4, 4}, rng);
  auto build = [&](VList& ls) { return probe(div_bcast_hw(ls[0], ls[1]), w); };
  CHECK(var_grad_error(build, {x, r}, 0) < 1e-8);
  CHECK(var_grad_error(build, {x, r}, 1) < 1e-8);
}

TEST_CASE("stack_coils/take_coil round-trip and gradients") {
  Rng rng(11);
  auto a = random_real<double>({2, 3, 4}, rng);
  auto b = random_real<double>({2, 3, 4}, rng);
  auto stacked = stack_coils<double>({V::constant(a), V::constant(b)});
  CHECK(stacked.value().shape() == Shape{2, 2, 3, 4});
  CHECK(max_abs_diff(take_coil(stacked, 0).value(), a) == 0.0);
  CHECK(max_abs_diff(take_coil(stacked, 1).value(), b) == 0.0);

  auto w = random_real<double>({2, 2, 3, 4}, rng);
  auto build = [&](VList& ls) {
    return probe(stack_coils<double>({ls[0], ls[1]}), w);
  };
  CHECK(var_grad_error(build, {a, b}, 0) < 1e-9);
  CHECK(var_grad_error(build, {a, b}, 1) < 1e-9);

  auto w1 = random_real<double>({2, 3, 4}, rng);
  auto xs = random_real<double>({2, 2, 3, 4}, rng);
  CHECK(var_grad_error(
            [&](VList& ls) { return probe(take_coil(ls[0], 1), w1); }, {xs},
            0) < 1e-9);
}

TEST_CASE("graph SENSE matches the operator composition") {
  Rng rng(12);
  auto maps = test::random_normalized_maps(3, 8, 8, rng);
  auto img = random_complex({8, 8}, rng);
  auto ksp = fft2c(expand(img, maps));

  auto sense = reduce_ch(ifft2c_ch(V::constant(complex_to_channels(ksp))),
                         V::constant(complex_to_channels(maps)));
  CHECK(max_abs_diff(channels_to_complex(sense.value()),
                     sense_reconstruct(ksp, maps)) < 1e-12);
}
