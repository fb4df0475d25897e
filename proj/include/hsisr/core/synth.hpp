#pragma once

#include <cstdint>

#include "hsisr/core/cube.hpp"

namespace hsisr {

// Deterministic synthetic cube in [0,1]: a few smooth spatial fields (sums of
// random-phase sinusoids) each carrying a smooth spectral signature, so
// adjacent bands are strongly correlated.
Cube synth_cube(int height, int width, int bands, std::uint64_t seed);

}  // namespace hsisr
