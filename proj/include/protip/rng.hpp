#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace protip {

// Deterministic seeded random streams.
//
// All randomness in the project flows through named substreams derived from
// one master seed, so that per-frame / per-iteration work can run in parallel
// and still produce output identical to a serial run. Distribution sampling
// is hand-rolled on top of mt19937_64 (whose output sequence is fully
// specified by the standard) so results do not depend on the standard
// library's distribution implementations.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  // Substream for (master seed, tag, index), e.g. ("speckle", frame).
  static RngStream substream(std::uint64_t master, std::string_view tag,
                             std::uint64_t index = 0) {
    std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a over the tag
    for (char c : tag) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ull;
    }
    std::uint64_t x = master ^ mix(h) ^ mix(index * 0x9e3779b97f4a7c15ull + 1);
    return RngStream(mix(x));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n), n > 0. Rejection-free modulo is fine here:
  // n is always tiny relative to 2^64, bias < 1e-15.
  std::uint64_t uniform_index(std::uint64_t n) { return engine_() % n; }

  // Standard normal via Box-Muller (no state caching, so the draw count per
  // sample is fixed).
  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

 private:
  static std::uint64_t mix(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
};

}  // namespace protip
