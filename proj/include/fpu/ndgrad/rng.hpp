#pragma once

#include <array>
#include <cstdint>
#include <utility>

namespace fpu::ndgrad {

// xoshiro256** generator seeded through SplitMix64.
//
// Everything here is integer arithmetic with a fixed algorithm, so streams are
// identical across platforms and standard libraries. Normal deviates use the
// Box-Muller transform over two uniforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  // Independent generator for (seed, stream), e.g. (dataset seed, sample index).
  static Rng substream(std::uint64_t seed, std::uint64_t stream);
  // Child stream derived from this generator's current state; does not advance it.
  Rng split(std::uint64_t stream) const;

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }
  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();
  std::pair<double, double> normal_pair();

  const std::array<std::uint64_t, 4>& state() const noexcept { return s_; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> s_{};
};

std::uint64_t splitmix64(std::uint64_t& state);
// Stateless 64-bit mix of a pair of integers; used for stream derivation.
std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b);
std::uint64_t hash_string(const char* text);

}  // namespace fpu::ndgrad
