#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace ratshare {

// Seeded generator with platform-independent derived draws. The standard
// distributions are implementation-defined, so every draw used by the
// protocol goes through the methods below instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, bound). bound must be nonzero.
  std::uint64_t below(std::uint64_t bound) {
    // Rejection on the top of the range keeps the result unbiased.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % bound;
  }

  // Uniform in (0, 1] with 53 bits of resolution.
  double unit_open_closed() {
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  }

  bool coin() { return (engine_() >> 63) != 0; }

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based seed derivation: trial `index` of `stream` is reproducible
// without replaying earlier trials.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(master) ^ stream) + index);
}

}  // namespace ratshare
