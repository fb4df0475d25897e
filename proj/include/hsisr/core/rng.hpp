#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hsisr {

using Rng = std::mt19937_64;

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::uint64_t splitmix64(std::uint64_t x);

// Every random draw in the project comes from a named stream derived from a base seed,
// so that e.g. data splitting never shifts the diffusion draws.
Rng seed_stream(std::uint64_t base_seed, std::string_view name, std::uint64_t index = 0);

float standard_normal(Rng& rng);

}  // namespace hsisr
