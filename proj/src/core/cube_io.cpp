#include "hsisr/core/cube_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "hsisr/core/error.hpp"

namespace hsisr {
namespace {

using nlohmann::json;

constexpr const char* kMagic = "hsisr-cube";

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T byteswap_value(T v) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void check_finite(const Cube& cube, const std::filesystem::path& path) {
  const auto values = cube.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      const std::size_t plane = cube.pixels();
      const std::size_t b = i / plane;
      const std::size_t y = (i % plane) / cube.width();
      const std::size_t x = i % cube.width();
      throw IoError(path.string() + ": non-finite value at index " + std::to_string(i) + " (y=" +
                    std::to_string(y) + ", x=" + std::to_string(x) + ", band=" + std::to_string(b) +
                    ")");
    }
  }
}

int positive_field(const json& header, const char* key, const std::filesystem::path& path) {
  if (!header.contains(key) || !header[key].is_number_integer() || header[key].get<long long>() <= 0) {
    throw IoError(path.string() + ": malformed header, missing or invalid '" + key + "'");
  }
  return header[key].get<int>();
}

Cube decode_payload(const char* bytes, std::size_t n_bytes, int h, int w, int c, int envi_type,
                    bool big_endian, const std::filesystem::path& path) {
  std::size_t elem = 0;
  switch (envi_type) {
    case 1: elem = 1; break;
    case 2: case 12: elem = 2; break;
    case 3: case 13: case 4: elem = 4; break;
    case 5: elem = 8; break;
    default: throw IoError(path.string() + ": unsupported data type " + std::to_string(envi_type));
  }
  const std::size_t count = static_cast<std::size_t>(h) * w * c;
  if (n_bytes != count * elem) {
    throw IoError(path.string() + ": payload size mismatch: expected " + std::to_string(count) +
                  " values (" + std::to_string(count * elem) + " bytes), found " +
                  std::to_string(n_bytes) + " bytes");
  }
  const bool swap = big_endian != (std::endian::native == std::endian::big);
  Cube cube(h, w, c);
  auto out = cube.values();
  for (std::size_t i = 0; i < count; ++i) {
    const char* p = bytes + i * elem;
    double v = 0.0;
    switch (envi_type) {
      case 1: v = static_cast<unsigned char>(*p); break;
      case 2: { std::int16_t t; std::memcpy(&t, p, 2); v = swap ? byteswap_value(t) : t; break; }
      case 12: { std::uint16_t t; std::memcpy(&t, p, 2); v = swap ? byteswap_value(t) : t; break; }
      case 3: { std::int32_t t; std::memcpy(&t, p, 4); v = swap ? byteswap_value(t) : t; break; }
      case 13: { std::uint32_t t; std::memcpy(&t, p, 4); v = swap ? byteswap_value(t) : t; break; }
      case 4: { float t; std::memcpy(&t, p, 4); out[i] = swap ? byteswap_value(t) : t; continue; }
      case 5: { double t; std::memcpy(&t, p, 8); v = swap ? byteswap_value(t) : t; break; }
    }
    out[i] = static_cast<float>(v);
  }
  return cube;
}

Cube load_native(const std::filesystem::path& path) {
  const std::string blob = read_all(path);
  const auto newline = blob.find('\n');
  if (newline == std::string::npos) throw IoError(path.string() + ": malformed header, no terminator");
  json header;
  try {
    header = json::parse(blob.substr(0, newline));
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": malformed header: " + e.what());
  }
  if (!header.is_object() || header.value("format", "") != kMagic) {
    throw IoError(path.string() + ": malformed header, not an " + kMagic + " file");
  }
  if (header.value("dtype", "") != "f32le" || header.value("layout", "") != "bsq") {
    throw IoError(path.string() + ": malformed header, expected dtype f32le and layout bsq");
  }
  const int h = positive_field(header, "height", path);
  const int w = positive_field(header, "width", path);
  const int c = positive_field(header, "bands", path);
  Cube cube = decode_payload(blob.data() + newline + 1, blob.size() - newline - 1, h, w, c, 4,
                             false, path);
  check_finite(cube, path);
  if (header.contains("meta") && header["meta"].is_object()) {
    for (const auto& [k, v] : header["meta"].items()) {
      cube.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  }
  if (header.contains("min") && header.contains("max")) {
    cube.meta.try_emplace("norm_min", header["min"].dump());
    cube.meta.try_emplace("norm_max", header["max"].dump());
  }
  cube.meta["source_path"] = path.string();
  cube.meta["source_dtype"] = "f32le";
  return cube;
}

std::filesystem::path find_sidecar(const std::filesystem::path& path) {
  std::filesystem::path a = path;
  a += ".hdr";
  if (std::filesystem::exists(a)) return a;
  std::filesystem::path b = path;
  b.replace_extension(".hdr");
  if (std::filesystem::exists(b)) return b;
  throw IoError(path.string() + ": no ENVI sidecar header (" + a.string() + ")");
}

Cube load_raw_bsq(const std::filesystem::path& path) {
  const auto sidecar = find_sidecar(path);
  const std::string text = read_all(sidecar);
  std::map<std::string, std::string> fields;
  const std::regex line_re(R"(^\s*([A-Za-z ]+?)\s*=\s*(.*?)\s*$)");
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    std::smatch m;
    if (std::regex_match(line, m, line_re)) {
      std::string key = m[1];
      for (auto& ch : key) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      fields[key] = m[2];
    }
  }
  auto int_field = [&](const char* key, int fallback, bool required) {
    auto it = fields.find(key);
    if (it == fields.end()) {
      if (required) throw IoError(sidecar.string() + ": malformed header, missing '" + key + "'");
      return fallback;
    }
    try {
      return std::stoi(it->second);
    } catch (const std::exception&) {
      throw IoError(sidecar.string() + ": malformed header, bad value for '" + key + "'");
    }
  };
  const int w = int_field("samples", 0, true);
  const int h = int_field("lines", 0, true);
  const int c = int_field("bands", 0, true);
  const int type = int_field("data type", 4, false);
  const int order = int_field("byte order", 0, false);
  const int offset = int_field("header offset", 0, false);
  if (w <= 0 || h <= 0 || c <= 0) throw IoError(sidecar.string() + ": malformed header, non-positive size");
  if (auto it = fields.find("interleave"); it != fields.end()) {
    std::string il = it->second;
    for (auto& ch : il) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (il != "bsq") throw IoError(sidecar.string() + ": unsupported interleave '" + it->second + "'");
  }
  const std::string blob = read_all(path);
  if (static_cast<std::size_t>(offset) > blob.size()) throw IoError(path.string() + ": payload size mismatch");
  Cube cube = decode_payload(blob.data() + offset, blob.size() - offset, h, w, c, type, order == 1, path);
  check_finite(cube, path);
  cube.meta["source_path"] = path.string();
  cube.meta["source_dtype"] = "envi-" + std::to_string(type);
  return cube;
}

void write_payload(std::ofstream& out, const Cube& cube, const std::filesystem::path& path) {
  const auto values = cube.values();
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(float)));
  } else {
    for (float v : values) {
      const float s = byteswap_value(v);
      out.write(reinterpret_cast<const char*>(&s), sizeof(float));
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

CubeFormat parse_cube_format(std::string_view name) {
  if (name == "native") return CubeFormat::Native;
  if (name == "raw-bsq") return CubeFormat::RawBsq;
  throw ConfigError("unknown cube format '" + std::string(name) + "' (expected native or raw-bsq)");
}

Cube load_cube(const std::filesystem::path& path, CubeFormat format) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
  return format == CubeFormat::Native ? load_native(path) : load_raw_bsq(path);
}

void save_cube(const Cube& cube, const std::filesystem::path& path) {
  json header;
  header["format"] = kMagic;
  header["version"] = 1;
  header["height"] = cube.height();
  header["width"] = cube.width();
  header["bands"] = cube.bands();
  header["dtype"] = "f32le";
  header["layout"] = "bsq";
  json meta = json::object();
  for (const auto& [k, v] : cube.meta) meta[k] = v;
  header["meta"] = meta;
  if (auto lo = cube.meta.find("norm_min"), hi = cube.meta.find("norm_max");
      lo != cube.meta.end() && hi != cube.meta.end()) {
    header["min"] = std::stod(lo->second);
    header["max"] = std::stod(hi->second);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  const std::string text = header.dump() + "\n";
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  write_payload(out, cube, path);
}

void save_raw_bsq(const Cube& cube, const std::filesystem::path& path) {
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    write_payload(out, cube, path);
  }
  std::filesystem::path sidecar = path;
  sidecar += ".hdr";
  std::ofstream hdr(sidecar);
  if (!hdr) throw IoError("cannot open for writing: " + sidecar.string());
  hdr << "ENVI\nsamples = " << cube.width() << "\nlines = " << cube.height()
      << "\nbands = " << cube.bands() << "\nheader offset = 0\nfile type = ENVI Standard\n"
      << "data type = 4\ninterleave = bsq\nbyte order = 0\n";
}

}  // namespace hsisr
