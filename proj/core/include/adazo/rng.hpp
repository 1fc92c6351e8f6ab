#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace adazo {

/// Splittable, counter-derived random stream (xoshiro256** seeded via
/// splitmix64). Every consumer derives its own stream from
/// (master_seed, hi, lo) so parallel trials and per-iteration sketches
/// never share state. All draws are bit-reproducible across runs of the
/// same binary.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) {
    std::uint64_t z = seed;
    for (auto& word : state_) word = splitmix64(z);
  }

  /// Independent stream for slot (hi, lo) under a master seed.
  static RngStream derive(std::uint64_t master, std::uint64_t hi,
                          std::uint64_t lo = 0) {
    std::uint64_t z = master;
    std::uint64_t a = splitmix64(z);
    z ^= 0x9e3779b97f4a7c15ULL + (hi << 1);
    std::uint64_t b = splitmix64(z);
    z ^= 0xbf58476d1ce4e5b9ULL + (lo << 1);
    std::uint64_t c = splitmix64(z);
    RngStream s(a ^ rotl(b, 17) ^ rotl(c, 41));
    s.state_[1] ^= hi * 0x94d049bb133111ebULL + 1;
    s.state_[3] ^= lo * 0xd6e8feb86659fd93ULL + 1;
    s.next_u64();  // decorrelate the injected words
    return s;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in (0, 1].
  double uniform01() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the spare is cached, so draw order
  /// is part of the reproducibility contract.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Uniform integer in [0, n), unbiased (rejection).
  std::uint64_t uniform_below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  /// Rademacher sign.
  double sign() { return (next_u64() >> 63) ? 1.0 : -1.0; }

 private:
  static std::uint64_t splitmix64(std::uint64_t& z) {
    z += 0x9e3779b97f4a7c15ULL;
    std::uint64_t x = z;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Stream slots used by the solvers and the harness. Keeping them in one
/// place documents the derivation layout that reproducibility relies on.
namespace stream_slot {
inline constexpr std::uint64_t kSketch = 1;
inline constexpr std::uint64_t kNoise = 2;
inline constexpr std::uint64_t kTrial = 3;
inline constexpr std::uint64_t kInit = 4;
}  // namespace stream_slot

}  // namespace adazo
