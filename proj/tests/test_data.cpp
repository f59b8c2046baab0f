#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rvn/data.hpp"
#include "test_util.hpp"

using namespace rvn;
namespace fs = std::filesystem;

TEST_CASE("phantom is deterministic per seed") {
  auto a = generate_phantom(32, 32, 5);
  auto b = generate_phantom(32, 32, 5);
  auto c = generate_phantom(32, 32, 6);
  CHECK(a == b);
  CHECK_FALSE(a == c);
}

TEST_CASE("phantom magnitude lies in [0, 1]") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto p = generate_phantom(48, 40, seed);
    for (std::int64_t i = 0; i < p.numel(); ++i) {
      CHECK(std::abs(p[i]) <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("phantom support fraction between 20% and 80% over seeds 0..9") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto p = generate_phantom(64, 64, seed);
    std::int64_t nz = 0;
    for (std::int64_t i = 0; i < p.numel(); ++i)
      if (std::abs(p[i]) > 0) ++nz;
    const double frac = static_cast<double>(nz) / p.numel();
    CHECK(frac > 0.20);
    CHECK(frac < 0.80);
  }
}

TEST_CASE("phase_scale=0 gives a real-valued phantom") {
  auto p = generate_phantom(32, 32, 3, 0.0);
  for (std::int64_t i = 0; i < p.numel(); ++i) CHECK(p[i].imag() == 0.0);
}

TEST_CASE("simulated coil maps satisfy the unit-RSS normalization") {
  for (std::int64_t nc : {2, 4, 8, 12}) {
    auto maps = simulate_coil_maps(32, 28, nc, 7);
    const std::int64_t n = 32 * 28;
    for (std::int64_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::int64_t k = 0; k < nc; ++k) s += std::norm(maps[k * n + i]);
      CHECK(std::abs(s - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("single-coil map is a constant of unit magnitude") {
  auto maps = simulate_coil_maps(16, 16, 1, 3);
  for (std::int64_t i = 0; i < maps.numel(); ++i) {
    CHECK(std::abs(std::abs(maps[i]) - 1.0) < 1e-12);
    CHECK(maps[i] == maps[0]);
  }
}

TEST_CASE("coil maps vary smoothly (finite-difference gradient bound)") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    auto maps = simulate_coil_maps(64, 64, 4, seed);
    double max_grad = 0.0;
    const std::int64_t n = 64 * 64;
    for (std::int64_t k = 0; k < 4; ++k)
      for (std::int64_t i = 0; i < 63; ++i)
        for (std::int64_t j = 0; j < 63; ++j) {
          const auto v = maps[k * n + i * 64 + j];
          max_grad = std::max(
              {max_grad, std::abs(maps[k * n + (i + 1) * 64 + j] - v),
               std::abs(maps[k * n + i * 64 + j + 1] - v)});
        }
    CHECK(max_grad < 0.10);  // per-pixel step on a 64x64 grid
  }
}

TEST_CASE("noiseless acquisition inverts exactly through SENSE and RSS") {
  auto phantom = generate_phantom(32, 32, 11);
  auto maps = simulate_coil_maps(32, 32, 4, 12);
  auto ksp = simulate_acquisition(phantom, maps, 0.0, 13);

  CHECK(max_abs_diff(sense_reconstruct(ksp, maps), phantom) < 1e-6);

  auto mag = rss(ifft2c(ksp));
  for (std::int64_t i = 0; i < mag.numel(); ++i)
    CHECK(std::abs(mag[i] - std::abs(phantom[i])) < 1e-6);
}

TEST_CASE("noise standard deviation matches sigma within 5%") {
  auto phantom = generate_phantom(64, 64, 21);
  auto maps = simulate_coil_maps(64, 64, 4, 22);
  const double sigma = 0.05;
  auto clean = simulate_acquisition(phantom, maps, 0.0, 0);
  auto noisy = simulate_acquisition(phantom, maps, sigma, 23);
  double s = 0.0;
  const std::int64_t n = noisy.numel();  // 16384 entries
  for (std::int64_t i = 0; i < n; ++i) s += std::norm(noisy[i] - clean[i]);
  const double measured = std::sqrt(s / static_cast<double>(n));
  CHECK(std::abs(measured - sigma) / sigma < 0.05);
}

TEST_CASE("volume write/read round-trip is bitwise") {
  auto vol = simulate_volume(3, 2, 16, 12, 0.01, 31);
  const auto path = (fs::temp_directory_path() / "rvn_vol_test.rvnvol").string();
  write_volume(path, vol);
  auto back = read_volume(path);
  CHECK(back.slices == vol.slices);
  CHECK(back.maps == vol.maps);
  CHECK(back.sigma == vol.sigma);
  CHECK(back.seed == vol.seed);
  std::remove(path.c_str());
}

TEST_CASE("truncated volume file reports expected vs actual byte count") {
  auto vol = simulate_volume(2, 2, 8, 8, 0.0, 32);
  const auto path = (fs::temp_directory_path() / "rvn_trunc.rvnvol").string();
  write_volume(path, vol);
  const auto full = fs::file_size(path);
  fs::resize_file(path, full - 100);
  try {
    read_volume(path);
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find(std::to_string(full)) != std::string::npos);
    CHECK(msg.find(std::to_string(full - 100)) != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("bad magic is rejected") {
  const auto path = (fs::temp_directory_path() / "rvn_bad.rvnvol").string();
  std::ofstream(path, std::ios::binary) << "NOTAVOLUME_______________";
  CHECK_THROWS_AS(read_volume(path), std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("header-only inspection returns the shape without the payload") {
  auto vol = simulate_volume(4, 3, 16, 16, 0.25, 33);
  const auto path = (fs::temp_directory_path() / "rvn_hdr.rvnvol").string();
  write_volume(path, vol);
  auto h = read_volume_header(path);
  CHECK(h.n_slices == 4);
  CHECK(h.n_coils == 3);
  CHECK(h.ny == 16);
  CHECK(h.nx == 16);
  CHECK(h.sigma == 0.25);
  CHECK(h.seed == 33);
  CHECK(h.has_maps);
  // byte-offset oracle: header is exactly 64 bytes, payload follows
  const std::int64_t expected_payload = (4 * 3 + 3) * 16 * 16 * 2 * 4;
  CHECK(static_cast<std::int64_t>(fs::file_size(path)) ==
        64 + expected_payload);
  std::remove(path.c_str());
}

TEST_CASE("dataset generation writes volumes, manifest, and splits by volume") {
  DataConfig cfg;
  cfg.ny = cfg.nx = 16;
  cfg.n_coils = 2;
  cfg.slices_per_volume = 2;
  cfg.train_volumes = 4;
  cfg.val_volumes = 1;
  cfg.test_volumes = 1;
  cfg.seed = 9;
  const auto dir = (fs::temp_directory_path() / "rvn_ds_test").string();
  fs::remove_all(dir);
  auto m = generate_dataset(cfg, dir);
  CHECK(m.entries.size() == 6);
  CHECK(m.split_entries(Split::train).size() == 4);
  CHECK(m.split_entries(Split::validation).size() == 1);
  CHECK(m.split_entries(Split::test).size() == 1);
  CHECK(m.total_slices() == 12);

  auto loaded = read_manifest((fs::path(dir) / "manifest.json").string());
  CHECK(loaded.entries.size() == 6);
  for (const auto& e : loaded.entries) {
    auto vol = read_volume(e.path);
    CHECK(vol.n_slices() == 2);
  }

  // regeneration with the same seed is bitwise identical on disk
  const auto dir2 = (fs::temp_directory_path() / "rvn_ds_test2").string();
  fs::remove_all(dir2);
  generate_dataset(cfg, dir2);
  for (const auto& e : m.entries) {
    const auto name = fs::path(e.path).filename();
    std::ifstream a(e.path, std::ios::binary), b(fs::path(dir2) / name,
                                                 std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(a)),
                   std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)),
                   std::istreambuf_iterator<char>());
    CHECK(sa == sb);
  }
  fs::remove_all(dir);
  fs::remove_all(dir2);
}
