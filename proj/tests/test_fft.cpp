#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rvn/fft.hpp"
#include "rvn/rng.hpp"
#include "test_util.hpp"

using namespace rvn;
using test::dft2c_reference;
using test::random_complex;
using C = std::complex<double>;

TEST_CASE("fft2c of zeros is zeros") {
  Tensor<C> x({4, 4});
  auto y = fft2c(x);
  CHECK(max_abs(y) == 0.0);
}

TEST_CASE("fft2c of a centered unit impulse is the constant 1/4 on 4x4") {
  Tensor<C> x({4, 4});
  x(2, 2) = C(1.0, 0.0);
  auto y = fft2c(x);
  for (std::int64_t i = 0; i < y.numel(); ++i) {
    CHECK(y[i].real() == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(std::abs(y[i].imag()) < 1e-12);
  }
}

TEST_CASE("ifft2c of the constant 1/4 is the centered unit impulse") {
  Tensor<C> x = Tensor<C>::full({4, 4}, C(0.25, 0.0));
  auto y = ifft2c(x);
  Tensor<C> expect({4, 4});
  expect(2, 2) = C(1.0, 0.0);
  CHECK(max_abs_diff(y, expect) < 1e-12);
}

TEST_CASE("fft2c matches the brute-force centered DFT oracle on random 4x4") {
  Rng rng(7);
  auto x = random_complex({4, 4}, rng);
  CHECK(max_abs_diff(fft2c(x), dft2c_reference(x)) < 1e-12);
}

TEST_CASE("ifft2c matches the brute-force inverse DFT oracle") {
  Rng rng(8);
  auto x = random_complex({5, 7}, rng);
  CHECK(max_abs_diff(ifft2c(x), dft2c_reference(x, true)) < 1e-12);
}

TEST_CASE("round-trip identity on random 8x8") {
  Rng rng(9);
  auto x = random_complex({8, 8}, rng);
  CHECK(max_abs_diff(ifft2c(fft2c(x)), x) < 1e-12);
}

TEST_CASE("Parseval on random 16x16") {
  Rng rng(10);
  auto x = random_complex({16, 16}, rng);
  CHECK(std::abs(norm2(fft2c(x)) - norm2(x)) < 1e-10);
}

TEST_CASE("unitarity across all sizes in {4..32}^2 including odd") {
  Rng rng(11);
  for (std::int64_t ny = 4; ny <= 32; ++ny)
    for (std::int64_t nx = 4; nx <= 32; ++nx) {
      auto x = random_complex({ny, nx}, rng);
      auto y = fft2c(x);
      CHECK(max_abs_diff(ifft2c(y), x) < 1e-12);
      CHECK(std::abs(norm2(y) - norm2(x)) < 1e-10);
    }
}

TEST_CASE("transforms broadcast over leading dims") {
  Rng rng(12);
  auto x = random_complex({3, 6, 5}, rng);
  auto y = fft2c(x);
  for (std::int64_t k = 0; k < 3; ++k) {
    Tensor<C> plane({6, 5});
    for (std::int64_t i = 0; i < plane.numel(); ++i) plane[i] = x[k * 30 + i];
    auto yk = fft2c(plane);
    for (std::int64_t i = 0; i < plane.numel(); ++i)
      CHECK(std::abs(y[k * 30 + i] - yk[i]) < 1e-12);
  }
}

TEST_CASE("linearity of fft2c") {
  Rng rng(13);
  auto x = random_complex({9, 11}, rng);
  auto z = random_complex({9, 11}, rng);
  const C a(0.7, -1.3), b(-2.1, 0.4);
  Tensor<C> mix({9, 11});
  for (std::int64_t i = 0; i < mix.numel(); ++i) mix[i] = a * x[i] + b * z[i];
  auto lhs = fft2c(mix);
  auto fx = fft2c(x), fz = fft2c(z);
  Tensor<C> rhs({9, 11});
  for (std::int64_t i = 0; i < rhs.numel(); ++i) rhs[i] = a * fx[i] + b * fz[i];
  CHECK(max_abs_diff(lhs, rhs) < 1e-10);
}

TEST_CASE("non-finite input is rejected") {
  Tensor<C> x({4, 4});
  x(1, 1) = C(std::numeric_limits<double>::quiet_NaN(), 0.0);
  CHECK_THROWS_AS(fft2c(x), std::invalid_argument);
  x(1, 1) = C(0.0, std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(ifft2c(x), std::invalid_argument);
}

TEST_CASE("float instantiation agrees with double to single precision") {
  Rng rng(14);
  auto xd = random_complex({12, 10}, rng);
  Tensor<std::complex<float>> xf({12, 10});
  for (std::int64_t i = 0; i < xd.numel(); ++i)
    xf[i] = std::complex<float>(static_cast<float>(xd[i].real()),
                                static_cast<float>(xd[i].imag()));
  auto yd = fft2c(xd);
  auto yf = fft2c(xf);
  for (std::int64_t i = 0; i < yd.numel(); ++i)
    CHECK(std::abs(std::complex<double>(yf[i].real(), yf[i].imag()) - yd[i]) <
          1e-5);
}
