#include "fpu/ndgrad/rng.hpp"

#include <cmath>
#include <numbers>

namespace fpu::ndgrad {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a;
  std::uint64_t h = splitmix64(s);
  s = h ^ b;
  return splitmix64(s);
}

std::uint64_t hash_string(const char* text) {
  // FNV-1a
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const char* p = text; *p; ++p) {
    h ^= static_cast<unsigned char>(*p);
    h *= 0x100000001B3ULL;
  }
  return h;
}

Rng::Rng(std::uint64_t seed) {
  std::uint64_t sm = seed;
  for (auto& word : s_) word = splitmix64(sm);
}

Rng Rng::substream(std::uint64_t seed, std::uint64_t stream) { return Rng(hash_combine(seed, stream)); }

Rng Rng::split(std::uint64_t stream) const {
  std::uint64_t h = s_[0];
  for (std::size_t i = 1; i < s_.size(); ++i) h = hash_combine(h, s_[i]);
  return Rng(hash_combine(h, stream));
}

std::uint64_t Rng::below(std::uint64_t n) {
  // Lemire-style rejection to avoid modulo bias.
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % n;
  }
}

std::pair<double, double> Rng::normal_pair() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

double Rng::normal() { return normal_pair().first; }

}  // namespace fpu::ndgrad
