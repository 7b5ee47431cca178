#include "mvgrl/rng.hpp"

#include <cmath>
#include <numbers>

namespace mvgrl {

namespace {
uint64_t mix(uint64_t h, uint64_t x) {
  // splitmix64 finalizer as the combiner
  h ^= x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  uint64_t z = h;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

Rng Rng::derived(uint64_t seed, std::initializer_list<uint64_t> tags) {
  uint64_t h = mix(0x6d76677265706f73ULL, seed);
  for (uint64_t t : tags) h = mix(h, t);
  return Rng(h);
}

double Rng::uniform() {
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

int Rng::uniform_int(int n) {
  const uint64_t un = static_cast<uint64_t>(n);
  const uint64_t limit = UINT64_MAX - UINT64_MAX % un;
  uint64_t x;
  do {
    x = gen_();
  } while (x >= limit);
  return static_cast<int>(x % un);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

std::vector<int> Rng::sample_without_replacement(int n, int k) {
  std::vector<int> pool(n);
  for (int i = 0; i < n; ++i) pool[i] = i;
  for (int i = 0; i < k; ++i) {
    std::swap(pool[i], pool[i + uniform_int(n - i)]);
  }
  pool.resize(k);
  return pool;
}

std::vector<int> Rng::permutation(int n) { return sample_without_replacement(n, n); }

}  // namespace mvgrl
