#include <doctest.h>

#include "grad_check.hpp"
#include "rvn/data.hpp"
#include "rvn/sensitivity.hpp"
#include "test_util.hpp"

using namespace rvn;
using test::random_complex;
using C = std::complex<double>;

namespace {

SamplingMask center_column_mask(std::int64_t ny, std::int64_t nx,
                                std::int64_t acs_cols) {
  SamplingMask m;
  m.mask = MaskArray::full({ny, nx}, 1);
  m.acs = MaskArray({ny, nx});
  const std::int64_t start = (nx - acs_cols) / 2;
  for (std::int64_t i = 0; i < ny; ++i)
    for (std::int64_t j = start; j < start + acs_cols; ++j) m.acs(i, j) = 1;
  m.acceleration = 1.0;
  return m;
}

}  // namespace

TEST_CASE("single coil estimate has unit magnitude where the signal lives") {
  auto phantom = generate_phantom(32, 32, 1);
  auto maps = simulate_coil_maps(32, 32, 1, 2);
  auto ksp = simulate_acquisition(phantom, maps, 0.0, 0);
  auto mask = center_column_mask(32, 32, 16);
  auto est = estimate_initial_maps(ksp, mask);
  auto support = sensitivity_support(ksp, mask, 1e-2);
  std::int64_t checked = 0;
  for (std::int64_t i = 0; i < est.numel(); ++i)
    if (support[i]) {
      CHECK(std::abs(est[i]) == doctest::Approx(1.0).epsilon(1e-4));
      ++checked;
    }
  CHECK(checked > 100);
}

TEST_CASE("estimate recovers simulated maps: mean abs error < 0.05 in support") {
  // real-valued phantom so the image phase does not contaminate the maps
  auto phantom = generate_phantom(64, 64, 5, /*phase_scale=*/0.0);
  auto maps = simulate_coil_maps(64, 64, 4, 6);
  auto ksp = simulate_acquisition(phantom, maps, 0.0, 0);
  auto mask = center_column_mask(64, 64, 32);

  auto est = estimate_initial_maps(ksp, mask);
  // support = pixels carrying at least 5% of the peak ACS signal
  auto support = sensitivity_support(ksp, mask, 5e-2);

  double err = 0.0;
  std::int64_t count = 0;
  const std::int64_t n = 64 * 64;
  for (std::int64_t k = 0; k < 4; ++k)
    for (std::int64_t i = 0; i < n; ++i)
      if (support[i]) {
        err += std::abs(est[k * n + i] - maps[k * n + i]);
        ++count;
      }
  CHECK(count > 1000);
  CHECK(err / static_cast<double>(count) < 0.05);
}

TEST_CASE("all-zero k-space gives all-zero maps") {
  CTensor<double> ksp({3, 16, 16});
  auto mask = center_column_mask(16, 16, 8);
  auto est = estimate_initial_maps(ksp, mask);
  CHECK(max_abs(est) == 0.0);
}

TEST_CASE("empty ACS region is an error") {
  Rng rng(3);
  auto ksp = random_complex({2, 16, 16}, rng);
  SamplingMask m;
  m.mask = MaskArray::full({16, 16}, 1);
  m.acs = MaskArray({16, 16});
  CHECK_THROWS_AS(estimate_initial_maps(ksp, m), std::invalid_argument);
}

TEST_CASE("global input phase rotates the estimated maps by the same phase") {
  Rng rng(4);
  auto phantom = generate_phantom(32, 32, 7);
  auto maps = simulate_coil_maps(32, 32, 3, 8);
  auto ksp = simulate_acquisition(phantom, maps, 0.0, 0);
  auto mask = center_column_mask(32, 32, 12);

  const C rot = std::polar(1.0, 1.1);
  auto rotated = ksp;
  for (std::int64_t i = 0; i < rotated.numel(); ++i) rotated[i] *= rot;

  auto est = estimate_initial_maps(ksp, mask);
  auto est_rot = estimate_initial_maps(rotated, mask);
  for (std::int64_t i = 0; i < est.numel(); ++i)
    CHECK(std::abs(est_rot[i] - rot * est[i]) < 1e-10);
}

TEST_CASE("refine_maps keeps the input shape for any coil count") {
  Rng rng(5);
  for (std::int64_t nc : {1, 3, 5}) {
    nn::ParamRegistry<double> reg;
    Rng init(11);
    SensitivityRefiner<double> ser(reg, "ser", {8, 16, 32, 64}, 0.2, init);
    auto init_maps = test::random_real<double>({2, nc, 20, 18}, rng);
    auto out = ser.forward(ag::Var<double>::constant(init_maps));
    CHECK(out.value().shape() == Shape{2, nc, 20, 18});
  }
}

TEST_CASE("refined maps satisfy the unit-RSS normalization within 1e-5") {
  Rng rng(6);
  nn::ParamRegistry<double> reg;
  Rng init(12);
  SensitivityRefiner<double> ser(reg, "ser", {8, 16, 32, 64}, 0.2, init);
  auto init_maps = test::random_real<double>({2, 4, 24, 24}, rng);
  auto out = ser.forward(ag::Var<double>::constant(init_maps));
  const std::int64_t n = 24 * 24;
  for (std::int64_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::int64_t ck = 0; ck < 8; ++ck) {
      const double v = out.value()[ck * n + i];
      s += v * v;
    }
    CHECK(std::abs(s - 1.0) < 1e-5);
  }
}

TEST_CASE("refinement is deterministic given weights and input") {
  Rng rng(7);
  nn::ParamRegistry<double> reg;
  Rng init(13);
  SensitivityRefiner<double> ser(reg, "ser", {8, 16, 32}, 0.2, init);
  auto init_maps = test::random_real<double>({2, 2, 16, 16}, rng);
  auto a = ser.forward(ag::Var<double>::constant(init_maps));
  auto b = ser.forward(ag::Var<double>::constant(init_maps));
  CHECK(a.value() == b.value());
}

TEST_CASE("U-Net gradient w.r.t. weights matches finite differences") {
  // double precision: rel err < 1e-5; float backprop agrees to < 1e-3
  Rng rng(8);
  nn::ParamRegistry<double> reg;
  Rng init(14);
  SensitivityRefiner<double> ser(reg, "ser", {4, 8, 16}, 0.2, init);
  // scale the output projection so the pre-normalization magnitude is O(1);
  // at tiny magnitudes the renormalization has huge curvature and central
  // differences cannot resolve the (correct) gradient
  for (auto& p : reg.items())
    if (p.name().rfind("ser.out", 0) == 0)
      for (std::int64_t i = 0; i < p.value().numel(); ++i)
        p.value()[i] *= 20.0;
  auto input = test::random_real<double>({2, 3, 16, 16}, rng);
  auto probe_w = test::random_real<double>({2, 3, 16, 16}, rng);

  auto loss_fn = [&]() {
    auto out = ser.forward(ag::Var<double>::constant(input));
    return ag::sum_op(ag::mul(out, ag::Var<double>::constant(probe_w)));
  };

  reg.zero_grads();
  ag::backward(loss_fn());

  // sample parameters across every layer; compare normwise over the set
  Rng pick(99);
  double num = 0.0, den = 0.0;
  for (int trial = 0; trial < 32; ++trial) {
    auto& p = reg.items()[static_cast<std::size_t>(
        pick.uniform_int(static_cast<std::int64_t>(reg.items().size())))];
    const std::int64_t idx = pick.uniform_int(p.value().numel());
    const double analytic = p.grad()[idx];
    const double orig = p.value()[idx];
    const double h = 1e-5;
    double fp, fm;
    {
      ag::NoGradGuard ng;
      p.value()[idx] = orig + h;
      fp = loss_fn().value()[0];
      p.value()[idx] = orig - h;
      fm = loss_fn().value()[0];
      p.value()[idx] = orig;
    }
    const double fd = (fp - fm) / (2 * h);
    num += (analytic - fd) * (analytic - fd);
    den += fd * fd;
  }
  CHECK(std::sqrt(num / den) < 1e-5);

  // single-precision twin: gradients agree normwise to 1e-3
  for (auto& p : reg.items())
    for (std::int64_t i = 0; i < p.value().numel(); ++i)
      p.value()[i] = static_cast<double>(static_cast<float>(p.value()[i]));
  reg.zero_grads();
  ag::backward(loss_fn());
  nn::ParamRegistry<float> regf;
  Rng initf(14);
  SensitivityRefiner<float> serf(regf, "ser", {4, 8, 16}, 0.2, initf);
  nn::copy_params(reg, regf);
  Tensor<float> inputf({2, 3, 16, 16}), probef({2, 3, 16, 16});
  for (std::int64_t i = 0; i < inputf.numel(); ++i) {
    inputf[i] = static_cast<float>(input[i]);
    probef[i] = static_cast<float>(probe_w[i]);
  }
  regf.zero_grads();
  auto outf = serf.forward(ag::Var<float>::constant(inputf));
  ag::backward(ag::sum_op(ag::mul(outf, ag::Var<float>::constant(probef))));
  double fnum = 0.0, fden = 0.0;
  for (std::size_t pi = 0; pi < reg.items().size(); ++pi) {
    auto& pd = reg.items()[pi];
    auto& pf = regf.items()[pi];
    for (std::int64_t i = 0; i < pd.value().numel(); ++i) {
      const double d = pd.grad()[i] - static_cast<double>(pf.grad()[i]);
      fnum += d * d;
      fden += pd.grad()[i] * pd.grad()[i];
    }
  }
  CHECK(std::sqrt(fnum / std::max(fden, 1e-30)) < 1e-3);
}
