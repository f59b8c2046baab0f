#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace rvn {

/// Deterministic random source. Only the raw mt19937_64 stream (which the
/// standard defines bit-exactly) is consumed; all value mappings are done
/// here so that seeded outputs are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n); unbiased via rejection.
  std::int64_t uniform_int(std::int64_t n);

  /// Standard normal via Box-Muller (deterministic, caches the spare).
  double normal();

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::int64_t i = static_cast<std::int64_t>(v.size()) - 1; i > 0; --i)
      std::swap(v[static_cast<std::size_t>(i)],
                v[static_cast<std::size_t>(uniform_int(i + 1))]);
  }

  /// Derive an independent stream for a sub-task (e.g. per-sample masks).
  static std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                   std::uint64_t b = 0, std::uint64_t c = 0);

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rvn
