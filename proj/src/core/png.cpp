#include "hsisr/core/png.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include <zlib.h>

#include "hsisr/core/error.hpp"

namespace hsisr {
namespace {

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

void put_chunk(std::string& out, const char* type, const std::string& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  std::string body(type, 4);
  body += data;
  out += body;
  put_u32(out, static_cast<std::uint32_t>(
                   crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()))));
}

std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

}  // namespace

void write_png(const RgbImage& image, const std::filesystem::path& path) {
  if (image.height <= 0 || image.width <= 0 ||
      image.pixels.size() != static_cast<std::size_t>(image.height) * image.width * 3) {
    throw ShapeError("write_png: inconsistent image buffer");
  }
  std::string raw;
  raw.reserve(static_cast<std::size_t>(image.height) * (image.width * 3 + 1));
  for (int y = 0; y < image.height; ++y) {
    raw.push_back('\0');  // filter: none
    raw.append(reinterpret_cast<const char*>(image.pixels.data()) + static_cast<std::size_t>(y) * image.width * 3,
               static_cast<std::size_t>(image.width) * 3);
  }
  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  std::string packed(packed_size, '\0');
  if (compress2(reinterpret_cast<Bytef*>(packed.data()), &packed_size,
                reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()), 6) != Z_OK) {
    throw IoError("write_png: deflate failed");
  }
  packed.resize(packed_size);

  std::string file("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(image.width));
  put_u32(ihdr, static_cast<std::uint32_t>(image.height));
  ihdr += std::string("\x08\x02\x00\x00\x00", 5);  // 8-bit RGB, no interlace
  put_chunk(file, "IHDR", ihdr);
  put_chunk(file, "IDAT", packed);
  put_chunk(file, "IEND", "");

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(file.data(), static_cast<std::streamsize>(file.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

RgbImage false_color(const Cube& cube, std::array<int, 3> rgb_bands) {
  for (int b : rgb_bands) {
    if (b < 0 || b >= cube.bands()) {
      throw ShapeError("false_color: band " + std::to_string(b) + " out of range for " + shape_string(cube));
    }
  }
  RgbImage img{cube.height(), cube.width(), {}};
  img.pixels.resize(cube.pixels() * 3);
  for (int y = 0; y < cube.height(); ++y) {
    for (int x = 0; x < cube.width(); ++x) {
      const std::size_t o = (static_cast<std::size_t>(y) * cube.width() + x) * 3;
      for (int ch = 0; ch < 3; ++ch) img.pixels[o + ch] = to_byte(cube.at(y, x, rgb_bands[ch]));
    }
  }
  return img;
}

std::array<std::uint8_t, 3> error_colormap(float value, float vmax) {
  // Piecewise-linear ramp through black, blue, cyan, yellow, white.
  static constexpr float kStops[5][3] = {
      {0, 0, 0}, {0, 0, 1}, {0, 1, 1}, {1, 1, 0}, {1, 1, 1}};
  const float t = vmax > 0 ? std::clamp(value / vmax, 0.0f, 1.0f) * 4.0f : 0.0f;
  const int i = std::min(3, static_cast<int>(t));
  const float f = t - static_cast<float>(i);
  std::array<std::uint8_t, 3> rgb{};
  for (int ch = 0; ch < 3; ++ch) rgb[ch] = to_byte(kStops[i][ch] + f * (kStops[i + 1][ch] - kStops[i][ch]));
  return rgb;
}

}  // namespace hsisr
