#include "hsisr/core/cube.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hsisr/core/error.hpp"

namespace hsisr {

Cube::Cube(int height, int width, int bands, float fill)
    : height_(height), width_(width), bands_(bands) {
  if (height <= 0 || width <= 0 || bands <= 0) {
    throw ShapeError("cube dimensions must be positive, got " + std::to_string(height) + "x" +
                     std::to_string(width) + "x" + std::to_string(bands));
  }
  data_.assign(static_cast<std::size_t>(height) * width * bands, fill);
}

Cube Cube::slice_bands(int first, int last) const {
  if (first < 0 || last > bands_ || first >= last) {
    throw ShapeError("band slice [" + std::to_string(first) + "," + std::to_string(last) +
                     ") out of range for " + std::to_string(bands_) + " bands");
  }
  Cube out(height_, width_, last - first);
  std::copy(data_.begin() + first * pixels(), data_.begin() + last * pixels(), out.data_.begin());
  out.meta = meta;
  return out;
}

std::string shape_string(const Cube& cube) {
  std::ostringstream os;
  os << cube.height() << "x" << cube.width() << "x" << cube.bands();
  return os.str();
}

void require_same_shape(const Cube& a, const Cube& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_string(a) + " vs " +
                     shape_string(b));
  }
}

void require_finite(const Cube& cube, const char* what) {
  const auto values = cube.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(std::string(what) + ": non-finite value at index " + std::to_string(i));
    }
  }
}

namespace {

double meta_number(const Meta& meta, const std::string& key, double fallback) {
  auto it = meta.find(key);
  return it == meta.end() ? fallback : std::stod(it->second);
}

std::string exact_string(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

Cube normalize(const Cube& cube) {
  require_finite(cube, "normalize");
  const auto values = cube.values();
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) {
    throw Error("normalize: degenerate dynamic range (all values equal " + exact_string(lo) + ")");
  }
  Cube out = cube;
  const double range = hi - lo;
  for (float& v : out.values()) {
    v = static_cast<float>((v - lo) / range);
  }
  // Compose with an earlier normalization so denormalize always returns the original units.
  const double prev_lo = meta_number(cube.meta, "norm_min", 0.0);
  const double prev_hi = meta_number(cube.meta, "norm_max", 1.0);
  const double prev_range = prev_hi - prev_lo;
  out.meta["norm_min"] = exact_string(prev_lo + prev_range * lo);
  out.meta["norm_max"] = exact_string(prev_lo + prev_range * hi);
  return out;
}

Cube denormalize(const Cube& cube) {
  const double lo = meta_number(cube.meta, "norm_min", 0.0);
  const double hi = meta_number(cube.meta, "norm_max", 1.0);
  Cube out = cube;
  for (float& v : out.values()) {
    v = static_cast<float>(lo + (hi - lo) * v);
  }
  out.meta.erase("norm_min");
  out.meta.erase("norm_max");
  return out;
}

}  // namespace hsisr
