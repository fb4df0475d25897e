#pragma once

#include <filesystem>
#include <string_view>

#include "hsisr/core/cube.hpp"

namespace hsisr {

enum class CubeFormat { Native, RawBsq };

CubeFormat parse_cube_format(std::string_view name);

// Native layout: one line of JSON header terminated by '\n', followed by
// height*width*bands little-endian f32 values in band-sequential order.
//
// Raw BSQ: headerless payload plus an ENVI-style sidecar ("<path>.hdr" or
// "<stem>.hdr") with samples/lines/bands/data type/byte order. Integer and
// f64 payloads are converted to f32 on import.
Cube load_cube(const std::filesystem::path& path, CubeFormat format = CubeFormat::Native);
void save_cube(const Cube& cube, const std::filesystem::path& path);

// Writes a raw BSQ payload and its ENVI sidecar (f32, little-endian).
void save_raw_bsq(const Cube& cube, const std::filesystem::path& path);

}  // namespace hsisr
