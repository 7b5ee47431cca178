#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace mvgrl {

/// Deterministic random source. mt19937_64 is fully specified by the
/// standard; the distributions here are hand-rolled because the standard
/// library's distribution objects are implementation-defined and would
/// break run reproducibility across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  /// Derive an independent stream from a seed and a tag path, e.g.
  /// Rng::derived(seed, {kEpoch, epoch, step}).
  static Rng derived(uint64_t seed, std::initializer_list<uint64_t> tags);

  uint64_t next_u64() { return gen_(); }

  /// Uniform in [0,1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n), n >= 1. Rejection sampling, unbiased.
  int uniform_int(int n);

  /// Standard normal via Box-Muller.
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      std::swap(v[i], v[uniform_int(i + 1)]);
    }
  }

  /// k distinct values from [0, n), in random order.
  std::vector<int> sample_without_replacement(int n, int k);

  /// Random permutation of [0, n).
  std::vector<int> permutation(int n);

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mvgrl
