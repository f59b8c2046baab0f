#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rvn/operators.hpp"
#include "rvn/rng.hpp"

namespace rvn {

/// One simulated acquisition: fully sampled k-space, its RSS reference
/// image, the true maps used by the simulator, and the noise level.
struct AcquisitionSample {
  CTensor<float> kspace;       // [n_c, ny, nx]
  Tensor<float> reference;     // [ny, nx] = rss(ifft2c(kspace)) when sigma=0
  CTensor<float> maps;         // [n_c, ny, nx] simulation ground truth
  double sigma = 0.0;          // complex noise std per k-space entry
};

/// Deterministic ellipse-composite phantom with a smooth complex phase;
/// magnitude in [0, 1]. phase_scale scales the phase field (0 gives a
/// real-valued phantom).
CTensor<double> generate_phantom(std::int64_t ny, std::int64_t nx,
                                 std::uint64_t seed, double phase_scale = 1.0);

/// Smooth Gaussian-profile coil sensitivities centered at equally spaced
/// boundary points, normalized so sum_k |S^k|^2 = 1 at every pixel.
CTensor<double> simulate_coil_maps(std::int64_t ny, std::int64_t nx,
                                   std::int64_t n_c, std::uint64_t seed);

/// y^k = fft2c(S^k .* x) + noise, noise complex Gaussian with
/// E|e|^2 = sigma^2 per entry.
CTensor<double> simulate_acquisition(const CTensor<double>& phantom,
                                     const CTensor<double>& maps, double sigma,
                                     std::uint64_t seed);

/// A stack of simulated slices sharing one coil geometry.
struct Volume {
  CTensor<float> slices;  // [n_s, n_c, ny, nx]
  CTensor<float> maps;    // [n_c, ny, nx] or empty
  double sigma = 0.0;
  std::uint64_t seed = 0;

  std::int64_t n_slices() const { return slices.dim(0); }
  std::int64_t n_coils() const { return slices.dim(1); }
  std::int64_t ny() const { return slices.dim(2); }
  std::int64_t nx() const { return slices.dim(3); }

  CTensor<float> slice(std::int64_t s) const;
  Tensor<float> reference(std::int64_t s) const;  // RSS reconstruction
};

Volume simulate_volume(std::int64_t n_slices, std::int64_t n_c,
                       std::int64_t ny, std::int64_t nx, double sigma,
                       std::uint64_t seed);

struct VolumeHeader {
  std::uint32_t version = 1;
  bool has_maps = false;
  std::int64_t n_slices = 0, n_coils = 0, ny = 0, nx = 0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

/// Binary volume file: fixed header followed by little-endian interleaved
/// re/im float32 per slice (then maps, if present).
void write_volume(const std::string& path, const Volume& volume);
Volume read_volume(const std::string& path);
/// Header-only inspection; does not touch the payload bytes.
VolumeHeader read_volume_header(const std::string& path);

enum class Split { train, validation, test };
std::string split_name(Split s);

struct ManifestEntry {
  std::string path;
  Split split = Split::train;
  VolumeHeader header;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::vector<const ManifestEntry*> split_entries(Split s) const;
  std::int64_t total_slices() const;
};

void write_manifest(const std::string& path, const Manifest& m);
Manifest read_manifest(const std::string& path);

struct DataConfig {
  std::int64_t ny = 64, nx = 64;
  std::int64_t n_coils = 4;
  std::int64_t slices_per_volume = 4;
  std::int64_t train_volumes = 4, val_volumes = 1, test_volumes = 1;
  double sigma = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Simulates all volumes, writes them plus a manifest under out_dir;
/// split assignment is a seeded shuffle by volume. Returns the manifest.
Manifest generate_dataset(const DataConfig& cfg, const std::string& out_dir);

}  // namespace rvn
