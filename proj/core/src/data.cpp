#include "rvn/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace rvn {
namespace {

struct Ellipse {
  double cy, cx, a, b, theta, amplitude;

  bool contains(double y, double x) const {
    const double dy = y - cy, dx = x - cx;
    const double ct = std::cos(theta), st = std::sin(theta);
    const double u = (ct * dx + st * dy) / a;
    const double v = (-st * dx + ct * dy) / b;
    return u * u + v * v <= 1.0;
  }
};

}  // namespace

CTensor<double> generate_phantom(std::int64_t ny, std::int64_t nx,
                                 std::uint64_t seed, double phase_scale) {
  if (ny < 4 || nx < 4)
    throw std::invalid_argument("generate_phantom: dims must be >= 4");
  Rng rng(seed);
  const double my = static_cast<double>(ny), mx = static_cast<double>(nx);

  Ellipse body{0.5 * my + rng.uniform(-0.03, 0.03) * my,
               0.5 * mx + rng.uniform(-0.03, 0.03) * mx,
               rng.uniform(0.30, 0.42) * mx,
               rng.uniform(0.30, 0.42) * my,
               rng.uniform(0.0, std::numbers::pi),
               0.45};

  std::vector<Ellipse> inner;
  const int n_inner = 5 + static_cast<int>(rng.uniform_int(4));
  for (int i = 0; i < n_inner; ++i) {
    inner.push_back({body.cy + rng.uniform(-0.20, 0.20) * my,
                     body.cx + rng.uniform(-0.20, 0.20) * mx,
                     rng.uniform(0.05, 0.18) * mx,
                     rng.uniform(0.05, 0.18) * my,
                     rng.uniform(0.0, std::numbers::pi),
                     rng.uniform(0.10, 0.30) * (rng.uniform() < 0.3 ? -1 : 1)});
  }

  // smooth low-order polynomial phase over normalized coordinates
  const double c0 = rng.uniform(-0.8, 0.8), c1 = rng.uniform(-0.5, 0.5),
               c2 = rng.uniform(-0.5, 0.5), c3 = rng.uniform(-0.4, 0.4),
               c4 = rng.uniform(-0.4, 0.4);

  CTensor<double> out({ny, nx});
  for (std::int64_t i = 0; i < ny; ++i)
    for (std::int64_t j = 0; j < nx; ++j) {
      const double y = static_cast<double>(i), x = static_cast<double>(j);
      if (!body.contains(y, x)) continue;
      double mag = body.amplitude;
      for (const auto& e : inner)
        if (e.contains(y, x)) mag += e.amplitude;
      mag = std::clamp(mag, 0.0, 1.0);
      const double u = 2.0 * y / my - 1.0, v = 2.0 * x / mx - 1.0;
      const double phase =
          phase_scale * (c0 + c1 * u + c2 * v + c3 * u * v + c4 * (u * u - v * v));
      out(i, j) = std::polar(mag, phase);
    }
  return out;
}

CTensor<double> simulate_coil_maps(std::int64_t ny, std::int64_t nx,
                                   std::int64_t n_c, std::uint64_t seed) {
  if (n_c < 1) throw std::invalid_argument("simulate_coil_maps: n_c >= 1");
  Rng rng(seed);
  CTensor<double> maps({n_c, ny, nx});
  if (n_c == 1) {
    const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    maps.fill(std::polar(1.0, theta));
    return maps;
  }

  const double cy = 0.5 * (ny - 1), cx = 0.5 * (nx - 1);
  const double ring = 0.6 * std::min(ny, nx);
  const double width = 0.45 * std::min(ny, nx);
  const std::int64_t n = ny * nx;

  std::vector<double> phases;
  for (std::int64_t k = 0; k < n_c; ++k) {
    const double ang = 2.0 * std::numbers::pi * k / n_c +
                       rng.uniform(-0.1, 0.1);
    const double ky = cy + ring * std::sin(ang);
    const double kx = cx + ring * std::cos(ang);
    phases.push_back(rng.uniform(0.0, 2.0 * std::numbers::pi));
    for (std::int64_t i = 0; i < ny; ++i)
      for (std::int64_t j = 0; j < nx; ++j) {
        const double d2 = (i - ky) * (i - ky) + (j - kx) * (j - kx);
        maps[k * n + i * nx + j] =
            std::polar(std::exp(-d2 / (2.0 * width * width)), phases.back());
      }
  }
  // pixelwise RSS normalization; the Gaussian profiles are positive, so
  // the denominator never vanishes
  for (std::int64_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::int64_t k = 0; k < n_c; ++k) s += std::norm(maps[k * n + i]);
    const double inv = 1.0 / std::sqrt(s);
    for (std::int64_t k = 0; k < n_c; ++k) maps[k * n + i] *= inv;
  }
  return maps;
}

CTensor<double> simulate_acquisition(const CTensor<double>& phantom,
                                     const CTensor<double>& maps, double sigma,
                                     std::uint64_t seed) {
  auto ksp = fft2c(expand(phantom, maps));
  if (sigma > 0.0) {
    Rng rng(seed);
    const double comp = sigma / std::sqrt(2.0);
    for (std::int64_t i = 0; i < ksp.numel(); ++i)
      ksp[i] += std::complex<double>(comp * rng.normal(), comp * rng.normal());
  }
  return ksp;
}

namespace {

CTensor<float> to_single(const CTensor<double>& x) {
  CTensor<float> out(x.shape());
  for (std::int64_t i = 0; i < x.numel(); ++i)
    out[i] = std::complex<float>(static_cast<float>(x[i].real()),
                                 static_cast<float>(x[i].imag()));
  return out;
}

CTensor<double> to_double(const CTensor<float>& x) {
  CTensor<double> out(x.shape());
  for (std::int64_t i = 0; i < x.numel(); ++i)
    out[i] = std::complex<double>(x[i].real(), x[i].imag());
  return out;
}

}  // namespace

CTensor<float> Volume::slice(std::int64_t s) const {
  if (s < 0 || s >= n_slices()) throw std::out_of_range("Volume::slice");
  CTensor<float> out({n_coils(), ny(), nx()});
  const std::int64_t n = out.numel();
  for (std::int64_t i = 0; i < n; ++i) out[i] = slices[s * n + i];
  return out;
}

Tensor<float> Volume::reference(std::int64_t s) const {
  // same single-precision path as a zero-filled reconstruction of the
  // full k-space, so R = 1 reconstructions match the reference bit-exactly
  return rss(ifft2c(slice(s)));
}

Volume simulate_volume(std::int64_t n_slices, std::int64_t n_c,
                       std::int64_t ny, std::int64_t nx, double sigma,
                       std::uint64_t seed) {
  Volume v;
  v.sigma = sigma;
  v.seed = seed;
  const auto maps = simulate_coil_maps(ny, nx, n_c, Rng::derive_seed(seed, 1));
  v.maps = to_single(maps);
  v.slices = CTensor<float>({n_slices, n_c, ny, nx});
  const std::int64_t n = n_c * ny * nx;
  for (std::int64_t s = 0; s < n_slices; ++s) {
    const auto phantom =
        generate_phantom(ny, nx, Rng::derive_seed(seed, 2, s));
    const auto ksp = simulate_acquisition(phantom, maps, sigma,
                                          Rng::derive_seed(seed, 3, s));
    const auto single = to_single(ksp);
    for (std::int64_t i = 0; i < n; ++i) v.slices[s * n + i] = single[i];
  }
  return v;
}

namespace {

constexpr char kVolumeMagic[8] = {'R', 'V', 'N', 'V', 'O', 'L', '0', '1'};
constexpr std::int64_t kHeaderBytes = 8 + 4 + 4 + 4 * 8 + 8 + 8;

void write_raw(std::ofstream& f, const void* p, std::size_t n) {
  f.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
}

}  // namespace

void write_volume(const std::string& path, const Volume& volume) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_volume: cannot open " + path);
  write_raw(f, kVolumeMagic, 8);
  const std::uint32_t version = 1;
  const std::uint32_t flags = volume.maps.numel() > 0 ? 1u : 0u;
  write_raw(f, &version, 4);
  write_raw(f, &flags, 4);
  const std::int64_t dims[4] = {volume.n_slices(), volume.n_coils(),
                                volume.ny(), volume.nx()};
  write_raw(f, dims, 32);
  write_raw(f, &volume.sigma, 8);
  write_raw(f, &volume.seed, 8);

  std::vector<float> buf(static_cast<std::size_t>(volume.slices.numel()) * 2);
  for (std::int64_t i = 0; i < volume.slices.numel(); ++i) {
    buf[2 * i] = volume.slices[i].real();
    buf[2 * i + 1] = volume.slices[i].imag();
  }
  write_raw(f, buf.data(), buf.size() * sizeof(float));
  if (flags & 1u) {
    std::vector<float> mbuf(static_cast<std::size_t>(volume.maps.numel()) * 2);
    for (std::int64_t i = 0; i < volume.maps.numel(); ++i) {
      mbuf[2 * i] = volume.maps[i].real();
      mbuf[2 * i + 1] = volume.maps[i].imag();
    }
    write_raw(f, mbuf.data(), mbuf.size() * sizeof(float));
  }
  if (!f) throw std::runtime_error("write_volume: write failed for " + path);
}

namespace {

VolumeHeader parse_header(std::ifstream& f, const std::string& path) {
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kVolumeMagic, 8) != 0)
    throw std::runtime_error("read_volume: bad magic in " + path);
  VolumeHeader h;
  std::uint32_t flags = 0;
  f.read(reinterpret_cast<char*>(&h.version), 4);
  f.read(reinterpret_cast<char*>(&flags), 4);
  std::int64_t dims[4];
  f.read(reinterpret_cast<char*>(dims), 32);
  f.read(reinterpret_cast<char*>(&h.sigma), 8);
  f.read(reinterpret_cast<char*>(&h.seed), 8);
  if (!f) throw std::runtime_error("read_volume: truncated header in " + path);
  if (h.version != 1)
    throw std::runtime_error("read_volume: unsupported version " +
                             std::to_string(h.version) + " in " + path);
  h.has_maps = (flags & 1u) != 0;
  h.n_slices = dims[0];
  h.n_coils = dims[1];
  h.ny = dims[2];
  h.nx = dims[3];
  if (h.n_slices < 1 || h.n_coils < 1 || h.ny < 1 || h.nx < 1)
    throw std::runtime_error("read_volume: corrupt dimensions in " + path);
  return h;
}

std::int64_t payload_bytes(const VolumeHeader& h) {
  const std::int64_t per_slice = h.n_coils * h.ny * h.nx * 2 * 4;
  std::int64_t total = h.n_slices * per_slice;
  if (h.has_maps) total += h.n_coils * h.ny * h.nx * 2 * 4;
  return total;
}

}  // namespace

VolumeHeader read_volume_header(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_volume: cannot open " + path);
  return parse_header(f, path);
}

Volume read_volume(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_volume: cannot open " + path);
  const VolumeHeader h = parse_header(f, path);

  const std::int64_t expected = kHeaderBytes + payload_bytes(h);
  const std::int64_t actual =
      static_cast<std::int64_t>(fs::file_size(path));
  if (actual != expected)
    throw std::runtime_error(
        "read_volume: truncated file " + path + ": expected " +
        std::to_string(expected) + " bytes, got " + std::to_string(actual));

  Volume v;
  v.sigma = h.sigma;
  v.seed = h.seed;
  v.slices = CTensor<float>({h.n_slices, h.n_coils, h.ny, h.nx});
  std::vector<float> buf(static_cast<std::size_t>(v.slices.numel()) * 2);
  f.read(reinterpret_cast<char*>(buf.data()),
         static_cast<std::streamsize>(buf.size() * sizeof(float)));
  for (std::int64_t i = 0; i < v.slices.numel(); ++i)
    v.slices[i] = std::complex<float>(buf[2 * i], buf[2 * i + 1]);
  if (h.has_maps) {
    v.maps = CTensor<float>({h.n_coils, h.ny, h.nx});
    std::vector<float> mbuf(static_cast<std::size_t>(v.maps.numel()) * 2);
    f.read(reinterpret_cast<char*>(mbuf.data()),
           static_cast<std::streamsize>(mbuf.size() * sizeof(float)));
    for (std::int64_t i = 0; i < v.maps.numel(); ++i)
      v.maps[i] = std::complex<float>(mbuf[2 * i], mbuf[2 * i + 1]);
  }
  if (!f) throw std::runtime_error("read_volume: read failed for " + path);
  return v;
}

std::string split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  throw std::logic_error("split_name: bad split");
}

namespace {

Split split_from_name(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "validation") return Split::validation;
  if (s == "test") return Split::test;
  throw std::runtime_error("manifest: unknown split '" + s + "'");
}

}  // namespace

std::vector<const ManifestEntry*> Manifest::split_entries(Split s) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries)
    if (e.split == s) out.push_back(&e);
  return out;
}

std::int64_t Manifest::total_slices() const {
  std::int64_t n = 0;
  for (const auto& e : entries) n += e.header.n_slices;
  return n;
}

void write_manifest(const std::string& path, const Manifest& m) {
  json j;
  j["version"] = 1;
  j["volumes"] = json::array();
  for (const auto& e : m.entries) {
    j["volumes"].push_back({{"path", fs::path(e.path).filename().string()},
                            {"split", split_name(e.split)},
                            {"n_slices", e.header.n_slices},
                            {"n_coils", e.header.n_coils},
                            {"ny", e.header.ny},
                            {"nx", e.header.nx},
                            {"sigma", e.header.sigma},
                            {"seed", e.header.seed}});
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_manifest: cannot open " + path);
  f << j.dump(2) << "\n";
}

Manifest read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("read_manifest: cannot open " + path);
  json j;
  f >> j;
  Manifest m;
  const fs::path base = fs::path(path).parent_path();
  for (const auto& v : j.at("volumes")) {
    ManifestEntry e;
    e.path = (base / v.at("path").get<std::string>()).string();
    e.split = split_from_name(v.at("split").get<std::string>());
    e.header.n_slices = v.at("n_slices").get<std::int64_t>();
    e.header.n_coils = v.at("n_coils").get<std::int64_t>();
    e.header.ny = v.at("ny").get<std::int64_t>();
    e.header.nx = v.at("nx").get<std::int64_t>();
    e.header.sigma = v.at("sigma").get<double>();
    e.header.seed = v.at("seed").get<std::uint64_t>();
    m.entries.push_back(std::move(e));
  }
  return m;
}

void DataConfig::validate() const {
  if (ny < 4 || nx < 4) throw std::invalid_argument("data: dims must be >= 4");
  if (n_coils < 1) throw std::invalid_argument("data: n_coils >= 1");
  if (slices_per_volume < 1)
    throw std::invalid_argument("data: slices_per_volume >= 1");
  if (train_volumes < 0 || val_volumes < 0 || test_volumes < 0)
    throw std::invalid_argument("data: negative volume counts");
  if (sigma < 0) throw std::invalid_argument("data: sigma must be >= 0");
}

Manifest generate_dataset(const DataConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  fs::create_directories(out_dir);

  const std::int64_t total =
      cfg.train_volumes + cfg.val_volumes + cfg.test_volumes;
  std::vector<std::int64_t> order(static_cast<std::size_t>(total));
  for (std::int64_t i = 0; i < total; ++i)
    order[static_cast<std::size_t>(i)] = i;
  Rng shuffler(Rng::derive_seed(cfg.seed, 0xB0));
  shuffler.shuffle(order);

  Manifest m;
  for (std::int64_t rank = 0; rank < total; ++rank) {
    const std::int64_t id = order[static_cast<std::size_t>(rank)];
    Split split = Split::train;
    if (rank >= cfg.train_volumes)
      split = rank < cfg.train_volumes + cfg.val_volumes ? Split::validation
                                                         : Split::test;
    const auto vol =
        simulate_volume(cfg.slices_per_volume, cfg.n_coils, cfg.ny, cfg.nx,
                        cfg.sigma, Rng::derive_seed(cfg.seed, 0xA0, id));
    char name[32];
    std::snprintf(name, sizeof(name), "vol_%03lld.rvnvol",
                  static_cast<long long>(id));
    const std::string vol_path = (fs::path(out_dir) / name).string();
    write_volume(vol_path, vol);

    ManifestEntry e;
    e.path = vol_path;
    e.split = split;
    e.header = read_volume_header(vol_path);
    m.entries.push_back(std::move(e));
  }
  write_manifest((fs::path(out_dir) / "manifest.json").string(), m);
  return m;
}

}  // namespace rvn
