#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace phonerec {

// Seeded generator with hand-rolled draws. mt19937_64 output is pinned by the
// standard, but the distribution classes are not, so uniform/shuffle are
// implemented here to keep trained models bit-identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // uniform in [0, 1)
  double uniform01() { return static_cast<double>(gen_() >> 11) * (1.0 / 9007199254740992.0); }

  // uniform in [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // unbiased uniform integer in [0, n); n must be > 0
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  // Fisher-Yates
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

// FNV-1a, used to derive independent per-node seeds from a base seed so that
// concurrent training jobs draw from disjoint deterministic streams.
inline std::uint64_t hash64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t base, const std::string& tag) {
  std::uint64_t h = hash64(tag);
  h ^= base + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
  return h;
}

}  // namespace phonerec
