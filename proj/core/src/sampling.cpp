#include "rvn/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "rvn/rng.hpp"

namespace rvn {

void SamplingMask::validate() const {
  if (mask.rank() != 2 || !mask.same_shape(acs))
    throw std::invalid_argument("SamplingMask: mask/acs must share a 2D shape");
  for (std::int64_t i = 0; i < mask.numel(); ++i) {
    if (mask[i] > 1 || acs[i] > 1)
      throw std::invalid_argument("SamplingMask: entries must be 0/1");
    if (acs[i] && !mask[i])
      throw std::invalid_argument("SamplingMask: acs must be a subset of mask");
  }
  if (acceleration <= 0)
    throw std::invalid_argument("SamplingMask: acceleration must be positive");
}

SamplingMask random_cartesian_mask(std::int64_t ny, std::int64_t nx, double R,
                                   double acs_fraction, std::uint64_t seed) {
  if (ny < 1 || nx < 1)
    throw std::invalid_argument("random_cartesian_mask: empty shape");
  if (R < 1)
    throw std::invalid_argument("random_cartesian_mask: R must be >= 1");

  SamplingMask out;
  out.mask = MaskArray({ny, nx});
  out.acs = MaskArray({ny, nx});
  out.acceleration = R;

  const std::int64_t budget =
      std::min<std::int64_t>(nx, std::llround(static_cast<double>(nx) / R));
  const std::int64_t n_acs = std::min<std::int64_t>(
      nx, std::max<std::int64_t>(1, std::llround(acs_fraction * nx)));
  if (n_acs > budget)
    throw std::invalid_argument(
        "random_cartesian_mask: ACS columns (" + std::to_string(n_acs) +
        ") exceed the column budget (" + std::to_string(budget) + ")");

  std::vector<std::uint8_t> col(static_cast<std::size_t>(nx), 0);
  std::vector<std::uint8_t> col_acs(static_cast<std::size_t>(nx), 0);

  // centered ACS block, left-biased on ties
  const std::int64_t start = (nx - n_acs) / 2;
  for (std::int64_t j = start; j < start + n_acs; ++j)
    col[j] = col_acs[j] = 1;

  // remaining budget drawn uniformly from the non-ACS columns
  std::vector<std::int64_t> rest;
  rest.reserve(static_cast<std::size_t>(nx - n_acs));
  for (std::int64_t j = 0; j < nx; ++j)
    if (!col[j]) rest.push_back(j);
  Rng rng(seed);
  rng.shuffle(rest);
  for (std::int64_t k = 0; k < budget - n_acs; ++k)
    col[rest[static_cast<std::size_t>(k)]] = 1;

  for (std::int64_t i = 0; i < ny; ++i)
    for (std::int64_t j = 0; j < nx; ++j) {
      out.mask(i, j) = col[j];
      out.acs(i, j) = col_acs[j];
    }
  return out;
}

SamplingMask variable_density_mask(std::int64_t ny, std::int64_t nx, double R,
                                   double center_radius, std::uint64_t seed) {
  if (ny < 1 || nx < 1)
    throw std::invalid_argument("variable_density_mask: empty shape");
  if (R < 1)
    throw std::invalid_argument("variable_density_mask: R must be >= 1");

  SamplingMask out;
  out.mask = MaskArray({ny, nx});
  out.acs = MaskArray({ny, nx});
  out.acceleration = R;

  const std::int64_t n = ny * nx;
  const std::int64_t budget =
      std::min<std::int64_t>(n, std::llround(static_cast<double>(n) / R));

  const double cy = static_cast<double>(ny / 2);
  const double cx = static_cast<double>(nx / 2);
  const double radius = center_radius * 0.5 * std::min(ny, nx);

  std::int64_t placed = 0;
  for (std::int64_t i = 0; i < ny; ++i)
    for (std::int64_t j = 0; j < nx; ++j) {
      const double dy = i - cy, dx = j - cx;
      if (dy * dy + dx * dx <= radius * radius) {
        out.mask(i, j) = out.acs(i, j) = 1;
        ++placed;
      }
    }
  if (placed > budget)
    throw std::invalid_argument(
        "variable_density_mask: central disc (" + std::to_string(placed) +
        " samples) exceeds the budget (" + std::to_string(budget) + ")");

  Rng rng(seed);
  const double sy = ny / 4.0, sx = nx / 4.0;
  std::int64_t misses = 0;
  while (placed < budget) {
    std::int64_t i = -1, j = -1;
    if (misses < 64) {
      i = static_cast<std::int64_t>(std::llround(cy + sy * rng.normal()));
      j = static_cast<std::int64_t>(std::llround(cx + sx * rng.normal()));
    } else {
      // dense masks: fall back to uniform draws over the grid
      i = rng.uniform_int(ny);
      j = rng.uniform_int(nx);
    }
    if (i < 0 || i >= ny || j < 0 || j >= nx || out.mask(i, j)) {
      ++misses;
      continue;
    }
    misses = 0;
    out.mask(i, j) = 1;
    ++placed;
  }
  return out;
}

template <typename T>
Tensor<std::complex<T>> acs_extract(const Tensor<std::complex<T>>& ksp,
                                    const SamplingMask& mask) {
  const std::int64_t ny = mask.ny(), nx = mask.nx();
  if (ksp.rank() < 2 || ksp.dim(-2) != ny || ksp.dim(-1) != nx)
    throw std::invalid_argument("acs_extract: spatial shape mismatch");
  Tensor<std::complex<T>> out = ksp;
  const std::int64_t planes = ksp.numel() / (ny * nx);
  for (std::int64_t p = 0; p < planes; ++p)
    for (std::int64_t i = 0; i < ny * nx; ++i)
      if (!mask.acs[i]) out[p * ny * nx + i] = std::complex<T>{};
  return out;
}

template Tensor<std::complex<float>> acs_extract(
    const Tensor<std::complex<float>>&, const SamplingMask&);
template Tensor<std::complex<double>> acs_extract(
    const Tensor<std::complex<double>>&, const SamplingMask&);

double effective_acceleration(const SamplingMask& mask) {
  std::int64_t nz = 0;
  for (std::int64_t i = 0; i < mask.mask.numel(); ++i) nz += mask.mask[i];
  if (nz == 0)
    throw std::invalid_argument("effective_acceleration: empty mask");
  return static_cast<double>(mask.mask.numel()) / static_cast<double>(nz);
}

namespace {
constexpr char kMaskMagic[8] = {'R', 'V', 'N', 'M', 'S', 'K', '0', '1'};
}

void save_mask(const SamplingMask& mask, std::uint64_t seed,
               const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_mask: cannot open " + path);
  f.write(kMaskMagic, 8);
  const std::int64_t ny = mask.ny(), nx = mask.nx();
  const double r = mask.acceleration;
  f.write(reinterpret_cast<const char*>(&ny), 8);
  f.write(reinterpret_cast<const char*>(&nx), 8);
  f.write(reinterpret_cast<const char*>(&r), 8);
  f.write(reinterpret_cast<const char*>(&seed), 8);
  f.write(reinterpret_cast<const char*>(mask.mask.data()),
          mask.mask.numel());
  f.write(reinterpret_cast<const char*>(mask.acs.data()), mask.acs.numel());
  if (!f) throw std::runtime_error("save_mask: write failed for " + path);
}

SamplingMask load_mask(const std::string& path, std::uint64_t* seed) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_mask: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kMaskMagic, 8) != 0)
    throw std::runtime_error("load_mask: bad magic in " + path);
  std::int64_t ny = 0, nx = 0;
  double r = 0;
  std::uint64_t s = 0;
  f.read(reinterpret_cast<char*>(&ny), 8);
  f.read(reinterpret_cast<char*>(&nx), 8);
  f.read(reinterpret_cast<char*>(&r), 8);
  f.read(reinterpret_cast<char*>(&s), 8);
  if (!f || ny < 1 || nx < 1)
    throw std::runtime_error("load_mask: corrupt header in " + path);
  SamplingMask out;
  out.mask = MaskArray({ny, nx});
  out.acs = MaskArray({ny, nx});
  out.acceleration = r;
  f.read(reinterpret_cast<char*>(out.mask.data()), ny * nx);
  f.read(reinterpret_cast<char*>(out.acs.data()), ny * nx);
  if (!f) throw std::runtime_error("load_mask: truncated payload in " + path);
  if (seed) *seed = s;
  out.validate();
  return out;
}

}  // namespace rvn
