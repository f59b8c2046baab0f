#include "rvn/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace rvn {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("expected a boolean, got '" + v + "'");
}

std::int64_t parse_i64(const std::string& v) {
  try {
    std::size_t pos = 0;
    const std::int64_t out = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("expected an integer, got '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& v) {
  try {
    std::size_t pos = 0;
    const std::uint64_t out = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("expected an unsigned integer, got '" + v + "'");
  }
}

double parse_f64(const std::string& v) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("expected a number, got '" + v + "'");
  }
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string& v, F&& one) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(one(item));
  }
  if (out.empty()) throw ConfigError("expected a comma-separated list");
  return out;
}

template <typename T>
std::string render_list(const std::vector<T>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ",";
    os << v[i];
  }
  return os.str();
}

struct KeyHandler {
  std::function<void(AppConfig&, const std::string&)> set;
  std::function<std::string(const AppConfig&)> get;
};

const std::map<std::string, KeyHandler>& handlers() {
  static const std::map<std::string, KeyHandler> table = {
      {"model.time_steps",
       {[](AppConfig& c, const std::string& v) {
          c.model.time_steps = static_cast<int>(parse_i64(v));
        },
        [](const AppConfig& c) { return std::to_string(c.model.time_steps); }}},
      {"model.recurrent_layers",
       {[](AppConfig& c, const std::string& v) {
          c.model.recurrent_layers = static_cast<int>(parse_i64(v));
        },
        [](const AppConfig& c) {
          return std::to_string(c.model.recurrent_layers);
        }}},
      {"model.hidden_channels",
       {[](AppConfig& c, const std::string& v) {
          c.model.hidden_channels = static_cast<int>(parse_i64(v));
        },
        [](const AppConfig& c) {
          return std::to_string(c.model.hidden_channels);
        }}},
      {"model.rsi_dilations",
       {[](AppConfig& c, const std::string& v) {
          c.model.rsi_dilations = parse_list<int>(
              v, [](const std::string& s) {
                return static_cast<int>(parse_i64(s));
              });
        },
        [](const AppConfig& c) { return render_list(c.model.rsi_dilations); }}},
      {"model.rsi_filters",
       {[](AppConfig& c, const std::string& v) {
          c.model.rsi_filters = parse_list<int>(v, [](const std::string& s) {
            return static_cast<int>(parse_i64(s));
          });
        },
        [](const AppConfig& c) { return render_list(c.model.rsi_filters); }}},
      {"model.ser_filters",
       {[](AppConfig& c, const std::string& v) {
          c.model.ser_filters = parse_list<int>(v, [](const std::string& s) {
            return static_cast<int>(parse_i64(s));
          });
        },
        [](const AppConfig& c) { return render_list(c.model.ser_filters); }}},
      {"model.ser_leaky_slope",
       {[](AppConfig& c, const std::string& v) {
          c.model.ser_leaky_slope = parse_f64(v);
        },
        [](const AppConfig& c) {
          return std::to_string(c.model.ser_leaky_slope);
        }}},
      {"model.use_ser",
       {[](AppConfig& c, const std::string& v) {
          c.model.use_ser = parse_bool(v);
        },
        [](const AppConfig& c) {
          return c.model.use_ser ? "true" : "false";
        }}},
      {"model.use_rsi",
       {[](AppConfig& c, const std::string& v) {
          c.model.use_rsi = parse_bool(v);
        },
        [](const AppConfig& c) {
          return c.model.use_rsi ? "true" : "false";
        }}},
      {"model.share_weights",
       {[](AppConfig& c, const std::string& v) {
          c.model.share_weights = parse_bool(v);
        },
        [](const AppConfig& c) {
          return c.model.share_weights ? "true" : "false";
        }}},
      {"model.rsi_input",
       {[](AppConfig& c, const std::string& v) { c.model.rsi_input = v; },
        [](const AppConfig& c) { return c.model.rsi_input; }}},
      {"model.sens_eps_rel",
       {[](AppConfig& c, const std::string& v) {
          c.model.sens_eps_rel = parse_f64(v);
        },
        [](const AppConfig& c) {
          std::ostringstream os;
          os << c.model.sens_eps_rel;
          return os.str();
        }}},
      {"train.lr_peak",
       {[](AppConfig& c, const std::string& v) { c.train.lr_peak = parse_f64(v); },
        [](const AppConfig& c) {
          std::ostringstream os;
          os << c.train.lr_peak;
          return os.str();
        }}},
      {"train.warmup_iters",
       {[](AppConfig& c, const std::string& v) {
          c.train.warmup_iters = parse_i64(v);
        },
        [](const AppConfig& c) {
          return std::to_string(c.train.warmup_iters);
        }}},
      {"train.decay_every",
       {[](AppConfig& c, const std::string& v) {
          c.train.decay_every = parse_i64(v);
        },
        [](const AppConfig& c) { return std::to_string(c.train.decay_every); }}},
      {"train.decay_factor",
       {[](AppConfig& c, const std::string& v) {
          c.train.decay_factor = parse_f64(v);
        },
        [](const AppConfig& c) {
          std::ostringstream os;
          os << c.train.decay_factor;
          return os.str();
        }}},
      {"train.batch_size",
       {[](AppConfig& c, const std::string& v) {
          c.train.batch_size = parse_i64(v);
        },
        [](const AppConfig& c) { return std::to_string(c.train.batch_size); }}},
      {"train.total_iters",
       {[](AppConfig& c, const std::string& v) {
          c.train.total_iters = parse_i64(v);
        },
        [](const AppConfig& c) { return std::to_string(c.train.total_iters); }}},
      {"train.w1",
       {[](AppConfig& c, const std::string& v) { c.train.w1 = parse_f64(v); },
        [](const AppConfig& c) {
          std::ostringstream os;
          os << c.train.w1;
          return os.str();
        }}},
      {"train.w2",
       {[](AppConfig& c, const std::string& v) { c.train.w2 = parse_f64(v); },
        [](const AppConfig& c) {
          std::ostringstream os;
          os << c.train.w2;
          return os.str();
        }}},
      {"train.beta1",
       {[](AppConfig& c, const std::string& v) { c.train.beta1 = parse_f64(v); },
        [](const AppConfig& c) {
          std::ostringstream os;
          os << c.train.beta1;
          return os.str();
        }}},
      {"train.beta2",
       {[](AppConfig& c, const std::string& v) { c.train.beta2 = parse_f64(v); },
        [](const AppConfig& c) {
          std::ostringstream os;
          os << c.train.beta2;
          return os.str();
        }}},
      {"train.adam_eps",
       {[](AppConfig& c, const std::string& v) {
          c.train.adam_eps = parse_f64(v);
        },
        [](const AppConfig& c) {
          std::ostringstream os;
          os << c.train.adam_eps;
          return os.str();
        }}},
      {"train.seed",
       {[](AppConfig& c, const std::string& v) { c.train.seed = parse_u64(v); },
        [](const AppConfig& c) { return std::to_string(c.train.seed); }}},
      {"train.accelerations",
       {[](AppConfig& c, const std::string& v) {
          c.train.accelerations =
              parse_list<double>(v, [](const std::string& s) {
                return parse_f64(s);
              });
        },
        [](const AppConfig& c) {
          return render_list(c.train.accelerations);
        }}},
      {"train.mask_kind",
       {[](AppConfig& c, const std::string& v) { c.train.mask_kind = v; },
        [](const AppConfig& c) { return c.train.mask_kind; }}},
      {"train.acs_fraction",
       {[](AppConfig& c, const std::string& v) {
          c.train.acs_fraction = parse_f64(v);
        },
        [](const AppConfig& c) {
          std::ostringstream os;
          os << c.train.acs_fraction;
          return os.str();
        }}},
      {"train.center_radius",
       {[](AppConfig& c, const std::string& v) {
          c.train.center_radius = parse_f64(v);
        },
        [](const AppConfig& c) {
          std::ostringstream os;
          os << c.train.center_radius;
          return os.str();
        }}},
      {"train.checkpoint_every",
       {[](AppConfig& c, const std::string& v) {
          c.train.checkpoint_every = parse_i64(v);
        },
        [](const AppConfig& c) {
          return std::to_string(c.train.checkpoint_every);
        }}},
      {"train.validate_every",
       {[](AppConfig& c, const std::string& v) {
          c.train.validate_every = parse_i64(v);
        },
        [](const AppConfig& c) {
          return std::to_string(c.train.validate_every);
        }}},
      {"train.grad_clip",
       {[](AppConfig& c, const std::string& v) {
          c.train.grad_clip = parse_f64(v);
        },
        [](const AppConfig& c) {
          std::ostringstream os;
          os << c.train.grad_clip;
          return os.str();
        }}},
      {"data.ny",
       {[](AppConfig& c, const std::string& v) { c.data.ny = parse_i64(v); },
        [](const AppConfig& c) { return std::to_string(c.data.ny); }}},
      {"data.nx",
       {[](AppConfig& c, const std::string& v) { c.data.nx = parse_i64(v); },
        [](const AppConfig& c) { return std::to_string(c.data.nx); }}},
      {"data.n_coils",
       {[](AppConfig& c, const std::string& v) {
          c.data.n_coils = parse_i64(v);
        },
        [](const AppConfig& c) { return std::to_string(c.data.n_coils); }}},
      {"data.slices_per_volume",
       {[](AppConfig& c, const std::string& v) {
          c.data.slices_per_volume = parse_i64(v);
        },
        [](const AppConfig& c) {
          return std::to_string(c.data.slices_per_volume);
        }}},
      {"data.train_volumes",
       {[](AppConfig& c, const std::string& v) {
          c.data.train_volumes = parse_i64(v);
        },
        [](const AppConfig& c) {
          return std::to_string(c.data.train_volumes);
        }}},
      {"data.val_volumes",
       {[](AppConfig& c, const std::string& v) {
          c.data.val_volumes = parse_i64(v);
        },
        [](const AppConfig& c) { return std::to_string(c.data.val_volumes); }}},
      {"data.test_volumes",
       {[](AppConfig& c, const std::string& v) {
          c.data.test_volumes = parse_i64(v);
        },
        [](const AppConfig& c) {
          return std::to_string(c.data.test_volumes);
        }}},
      {"data.sigma",
       {[](AppConfig& c, const std::string& v) { c.data.sigma = parse_f64(v); },
        [](const AppConfig& c) {
          std::ostringstream os;
          os << c.data.sigma;
          return os.str();
        }}},
      {"data.seed",
       {[](AppConfig& c, const std::string& v) { c.data.seed = parse_u64(v); },
        [](const AppConfig& c) { return std::to_string(c.data.seed); }}},
      {"seed",
       {[](AppConfig& c, const std::string& v) { c.seed = parse_u64(v); },
        [](const AppConfig& c) { return std::to_string(c.seed); }}},
      {"out_dir",
       {[](AppConfig& c, const std::string& v) { c.out_dir = v; },
        [](const AppConfig& c) { return c.out_dir; }}},
      {"dataset_manifest",
       {[](AppConfig& c, const std::string& v) { c.dataset_manifest = v; },
        [](const AppConfig& c) { return c.dataset_manifest; }}},
      {"checkpoint",
       {[](AppConfig& c, const std::string& v) { c.checkpoint = v; },
        [](const AppConfig& c) { return c.checkpoint; }}},
      {"input_volume",
       {[](AppConfig& c, const std::string& v) { c.input_volume = v; },
        [](const AppConfig& c) { return c.input_volume; }}},
      {"emit_png",
       {[](AppConfig& c, const std::string& v) { c.emit_png = parse_bool(v); },
        [](const AppConfig& c) { return c.emit_png ? "true" : "false"; }}},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [key, _] : handlers()) k.push_back(key);
    return k;
  }();
  return keys;
}

void apply_config_value(AppConfig& cfg, const std::string& key,
                        const std::string& value) {
  const auto& table = handlers();
  auto it = table.find(key);
  if (it == table.end()) {
    std::ostringstream os;
    os << "unknown config key '" << key << "'; valid keys:";
    for (const auto& k : config_keys()) os << "\n  " << k;
    throw ConfigError(os.str());
  }
  try {
    it->second.set(cfg, value);
  } catch (const ConfigError& e) {
    throw ConfigError("key '" + key + "': " + e.what());
  }
}

AppConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  AppConfig cfg;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    apply_config_value(cfg, trim(line.substr(0, eq)),
                       trim(line.substr(eq + 1)));
  }
  return cfg;
}

std::string render_config(const AppConfig& cfg) {
  std::ostringstream os;
  for (const auto& [key, h] : handlers()) os << key << " = " << h.get(cfg)
                                             << "\n";
  return os.str();
}

void AppConfig::validate() const {
  model.validate();
  train.validate();
  data.validate();
}

}  // namespace rvn
