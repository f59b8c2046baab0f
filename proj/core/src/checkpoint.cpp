#include "rvn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace rvn {
namespace {

constexpr char kMagic[8] = {'R', 'V', 'N', 'C', 'K', 'P', 'T', '1'};

void put(std::ofstream& f, const void* p, std::size_t n) {
  f.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void get(std::ifstream& f, void* p, std::size_t n, const std::string& path) {
  f.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!f)
    throw std::runtime_error("load_checkpoint: truncated file " + path);
}

}  // namespace

const Tensor<float>* CheckpointData::find(const std::string& name) const {
  for (const auto& [n, t] : arrays)
    if (n == name) return &t;
  return nullptr;
}

void save_checkpoint(const std::string& path, const CheckpointData& data) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
  put(f, kMagic, 8);
  put(f, &data.version, 4);
  put(f, &data.iteration, 8);
  put(f, &data.adam_step, 8);
  put(f, &data.best_validation_ssim, 8);
  const std::uint64_t cfg_len = data.config_text.size();
  put(f, &cfg_len, 8);
  put(f, data.config_text.data(), data.config_text.size());
  const std::uint64_t count = data.arrays.size();
  put(f, &count, 8);
  for (const auto& [name, t] : data.arrays) {
    const std::uint64_t name_len = name.size();
    put(f, &name_len, 8);
    put(f, name.data(), name.size());
    const std::uint8_t dtype = 0;  // float32 little-endian
    put(f, &dtype, 1);
    const std::uint32_t ndim = static_cast<std::uint32_t>(t.rank());
    put(f, &ndim, 4);
    for (auto d : t.shape()) put(f, &d, 8);
    put(f, t.data(), static_cast<std::size_t>(t.numel()) * sizeof(float));
  }
  if (!f) throw std::runtime_error("save_checkpoint: write failed " + path);
}

CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[8];
  get(f, magic, 8, path);
  if (std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  CheckpointData d;
  get(f, &d.version, 4, path);
  if (d.version != 1)
    throw std::runtime_error("load_checkpoint: unsupported version in " +
                             path);
  get(f, &d.iteration, 8, path);
  get(f, &d.adam_step, 8, path);
  get(f, &d.best_validation_ssim, 8, path);
  std::uint64_t cfg_len = 0;
  get(f, &cfg_len, 8, path);
  d.config_text.resize(cfg_len);
  if (cfg_len) get(f, d.config_text.data(), cfg_len, path);
  std::uint64_t count = 0;
  get(f, &count, 8, path);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint64_t name_len = 0;
    get(f, &name_len, 8, path);
    std::string name(name_len, '\0');
    if (name_len) get(f, name.data(), name_len, path);
    std::uint8_t dtype = 0;
    get(f, &dtype, 1, path);
    if (dtype != 0)
      throw std::runtime_error("load_checkpoint: unknown dtype in " + path);
    std::uint32_t ndim = 0;
    get(f, &ndim, 4, path);
    Shape shape(ndim);
    for (auto& dd : shape) get(f, &dd, 8, path);
    Tensor<float> t(shape);
    get(f, t.data(), static_cast<std::size_t>(t.numel()) * sizeof(float),
        path);
    d.arrays.emplace_back(std::move(name), std::move(t));
  }
  return d;
}

CheckpointData make_checkpoint(const RecurrentVarNet<float>& model,
                               const Adam<float>* optimizer,
                               std::int64_t iteration,
                               double best_validation_ssim,
                               std::string config_text) {
  CheckpointData d;
  d.iteration = iteration;
  d.best_validation_ssim = best_validation_ssim;
  d.config_text = std::move(config_text);
  for (const auto& p : model.params().items())
    d.arrays.emplace_back(p.name(), p.value());
  if (optimizer) {
    auto* opt = const_cast<Adam<float>*>(optimizer);
    d.adam_step = opt->step_count();
    auto& m = opt->first_moments();
    auto& v = opt->second_moments();
    for (std::size_t i = 0; i < m.size(); ++i) {
      const std::string& base = model.params().items()[i].name();
      d.arrays.emplace_back(base + ".adam_m", m[i]);
      d.arrays.emplace_back(base + ".adam_v", v[i]);
    }
  }
  return d;
}

void restore_model(const CheckpointData& data, RecurrentVarNet<float>& model) {
  for (auto& p : model.params().items()) {
    const Tensor<float>* t = data.find(p.name());
    if (!t)
      throw std::runtime_error("restore_model: checkpoint misses " + p.name());
    if (!(t->shape() == p.value().shape()))
      throw std::runtime_error("restore_model: shape mismatch for " +
                               p.name());
    p.value() = *t;
  }
}

void restore_optimizer(const CheckpointData& data,
                       const RecurrentVarNet<float>& model,
                       Adam<float>& optimizer) {
  std::vector<Tensor<float>> m, v;
  for (const auto& p : model.params().items()) {
    const Tensor<float>* tm = data.find(p.name() + ".adam_m");
    const Tensor<float>* tv = data.find(p.name() + ".adam_v");
    if (!tm || !tv)
      throw std::runtime_error("restore_optimizer: moments missing for " +
                               p.name());
    m.push_back(*tm);
    v.push_back(*tv);
  }
  optimizer.restore(data.adam_step, std::move(m), std::move(v));
}

}  // namespace rvn
