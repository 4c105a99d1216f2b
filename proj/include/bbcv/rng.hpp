#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace bbcv {

// SplitMix64 finalizer. Used to turn (master, tag, counter, sub) into a
// 64-bit stream key; the derivation below is the documented reproduction
// rule for every random draw the library makes.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// FNV-1a over the tag bytes.
inline uint64_t hash_tag(std::string_view tag) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline uint64_t stream_key(uint64_t master, std::string_view tag, uint64_t counter,
                           uint64_t sub) {
  return mix64(mix64(mix64(master ^ hash_tag(tag)) + counter) + sub);
}

// One independent random stream. Bounded integers use rejection sampling and
// uniform01 takes the top 53 bits, so draws are reproducible from the key
// alone (mt19937_64 seeded with stream_key, no library distributions).
class RngStream {
 public:
  RngStream(uint64_t master, std::string_view tag, uint64_t counter = 0, uint64_t sub = 0)
      : gen_(stream_key(master, tag, counter, sub)) {}

  uint64_t next_u64() { return gen_(); }

  // Unbiased integer in [0, n).
  uint64_t uniform_below(uint64_t n);

  // [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Box-Muller.
  double normal();

  // Marsaglia-Tsang for shape >= 1, boosted for shape < 1. Unit scale.
  double gamma(double shape);

  double beta(double a, double b);

  // Fisher-Yates over [first, last).
  template <typename It>
  void shuffle(It first, It last) {
    auto n = static_cast<uint64_t>(last - first);
    for (uint64_t i = n; i > 1; --i) {
      uint64_t j = uniform_below(i);
      std::swap(first[i - 1], first[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

// Root of the seed hierarchy. Independent streams are addressed by a purpose
// tag plus counters; child plans give whole subsystems (a simulation setting,
// a replicate) their own master without coordination.
struct SeedPlan {
  uint64_t master = 0;

  RngStream stream(std::string_view tag, uint64_t counter = 0, uint64_t sub = 0) const {
    return RngStream(master, tag, counter, sub);
  }

  SeedPlan child(std::string_view tag, uint64_t counter = 0) const {
    return SeedPlan{stream_key(master, tag, counter, 0)};
  }
};

}  // namespace bbcv
