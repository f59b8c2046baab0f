#pragma once

#include <cstdint>
#include <string>

#include "rvn/tensor.hpp"

namespace rvn {

/// Binary Cartesian k-space sampling pattern with its auto-calibration
/// sub-region. Invariants: acs implies mask elementwise; applying the
/// mask is idempotent by construction (entries are 0/1).
struct SamplingMask {
  MaskArray mask;         // [ny, nx], 0/1
  MaskArray acs;          // [ny, nx], 0/1, subset of mask
  double acceleration{1}; // requested R

  std::int64_t ny() const { return mask.dim(0); }
  std::int64_t nx() const { return mask.dim(1); }

  /// Throws std::invalid_argument if an invariant is broken.
  void validate() const;
};

/// Column mask: fully samples the centered `acs_fraction` of phase-encode
/// columns, then adds uniformly random full columns until the sampled
/// column count reaches round(nx / R). Constant along the row (readout)
/// dimension. Deterministic per seed. R == 1 yields the all-ones mask.
/// Throws if the ACS block alone exceeds the column budget.
SamplingMask random_cartesian_mask(std::int64_t ny, std::int64_t nx, double R,
                                   double acs_fraction, std::uint64_t seed);

/// 2D point mask: fully sampled central disc plus Gaussian-density random
/// points outside it, round(n/R) samples in total. Deterministic per seed.
/// `center_radius` is the disc radius as a fraction of min(ny, nx)/2.
SamplingMask variable_density_mask(std::int64_t ny, std::int64_t nx, double R,
                                   double center_radius, std::uint64_t seed);

/// Restrict k-space to the auto-calibration region (zero elsewhere).
template <typename T>
Tensor<std::complex<T>> acs_extract(const Tensor<std::complex<T>>& ksp,
                                    const SamplingMask& mask);

/// total pixel count / nonzero count
double effective_acceleration(const SamplingMask& mask);

/// Flat binary bitmap with a small header (shape, R, seed) so masks can be
/// reproduced bit-exactly across runs.
void save_mask(const SamplingMask& mask, std::uint64_t seed,
               const std::string& path);
SamplingMask load_mask(const std::string& path, std::uint64_t* seed = nullptr);

}  // namespace rvn
