#include "hsisr/core/rng.hpp"

#include <cmath>

namespace hsisr {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng seed_stream(std::uint64_t base_seed, std::string_view name, std::uint64_t index) {
  const std::uint64_t s = splitmix64(splitmix64(base_seed) ^ fnv1a64(name) ^ splitmix64(index + 1));
  return Rng(s);
}

float standard_normal(Rng& rng) {
  // Box-Muller on our own uniforms keeps draws identical across standard libraries.
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
  const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return static_cast<float>(std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2));
}

}  // namespace hsisr
