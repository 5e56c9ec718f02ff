#pragma once

#include <cstdint>
#include <vector>

namespace scr {

// splitmix64: a small, fast, well-mixed generator used everywhere the
// artifact needs platform-independent randomness. std::shuffle and the
// standard distributions are implementation-defined, so seeded shuffles
// and bounded draws are done by hand on top of this.
struct SplitMix64 {
  uint64_t state;

  explicit SplitMix64(uint64_t seed) : state(seed) {}

  uint64_t next() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform draw in [0, n) via 128-bit multiply-shift.
  uint64_t bounded(uint64_t n) {
    return static_cast<uint64_t>((static_cast<__uint128_t>(next()) * n) >> 64);
  }

  double next_double() {  // in [0, 1)
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }
};

// Derives an independent stream seed from a base seed and a stream tag.
inline uint64_t derive_seed(uint64_t base, uint64_t tag) {
  SplitMix64 g(base ^ (0x9e3779b97f4a7c15ULL * (tag + 1)));
  g.next();
  return g.next();
}

// Deterministic Fisher-Yates shuffle.
template <typename T>
void deterministic_shuffle(std::vector<T>& items, SplitMix64& rng) {
  for (size_t i = items.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng.bounded(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace scr
