#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace hsisr {

using Meta = std::map<std::string, std::string>;

// A hyperspectral cube. Logically indexed [y, x, band]; stored band-sequential
// so each band is a contiguous height*width plane.
class Cube {
 public:
  Cube() = default;
  Cube(int height, int width, int bands, float fill = 0.0f);

  int height() const { return height_; }
  int width() const { return width_; }
  int bands() const { return bands_; }
  std::size_t pixels() const { return static_cast<std::size_t>(height_) * width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float& at(int y, int x, int b) { return data_[b * pixels() + static_cast<std::size_t>(y) * width_ + x]; }
  float at(int y, int x, int b) const { return data_[b * pixels() + static_cast<std::size_t>(y) * width_ + x]; }

  std::span<float> band(int b) { return {data_.data() + b * pixels(), pixels()}; }
  std::span<const float> band(int b) const { return {data_.data() + b * pixels(), pixels()}; }

  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }

  bool same_shape(const Cube& other) const {
    return height_ == other.height_ && width_ == other.width_ && bands_ == other.bands_;
  }

  // Contiguous band slice [first, last).
  Cube slice_bands(int first, int last) const;

  Meta meta;

  friend bool operator==(const Cube& a, const Cube& b) {
    return a.same_shape(b) && a.data_ == b.data_;
  }

 private:
  int height_ = 0;
  int width_ = 0;
  int bands_ = 0;
  std::vector<float> data_;
};

struct ImagePair {
  Cube hr;
  Cube lr;
  int scale = 2;
};

struct PatchSpec {
  int patch_size = 32;
  int stride = 16;
  bool augment = false;
};

std::string shape_string(const Cube& cube);
void require_same_shape(const Cube& a, const Cube& b, const char* what);
void require_finite(const Cube& cube, const char* what);

// Per-cube global min-max scaling to [0,1]. Records the original range in
// meta["norm_min"] / meta["norm_max"] (composed with any earlier record).
Cube normalize(const Cube& cube);
Cube denormalize(const Cube& cube);

}  // namespace hsisr
