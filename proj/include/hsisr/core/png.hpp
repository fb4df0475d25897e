#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "hsisr/core/cube.hpp"

namespace hsisr {

struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB triplets
};

void write_png(const RgbImage& image, const std::filesystem::path& path);

// False-color composite from three band indices; each channel is clipped to [0,1].
RgbImage false_color(const Cube& cube, std::array<int, 3> rgb_bands);

// Colormap used for error maps: black -> blue -> cyan -> yellow -> white as the
// value goes from 0 to vmax.
std::array<std::uint8_t, 3> error_colormap(float value, float vmax);

}  // namespace hsisr
