#include "hsisr/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hsisr/core/error.hpp"

namespace hsisr::nn {

Tensor::Tensor(int n, int c, int h, int w, float fill) : n_(n), c_(c), h_(h), w_(w) {
  if (n <= 0 || c <= 0 || h <= 0 || w <= 0) {
    throw ShapeError("tensor dimensions must be positive");
  }
  data_.assign(static_cast<std::size_t>(n) * c * h * w, fill);
}

std::string shape_string(const Tensor& t) {
  std::ostringstream os;
  os << "[" << t.n() << "," << t.c() << "," << t.h() << "," << t.w() << "]";
  return os.str();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_string(a) + " vs " + shape_string(b));
  }
}

Tensor from_cube(const Cube& cube) {
  Tensor t(1, cube.bands(), cube.height(), cube.width());
  std::copy(cube.values().begin(), cube.values().end(), t.values().begin());
  return t;
}

Tensor from_cubes(std::span<const Cube> cubes) {
  if (cubes.empty()) throw ShapeError("from_cubes: empty batch");
  Tensor t(static_cast<int>(cubes.size()), cubes[0].bands(), cubes[0].height(), cubes[0].width());
  for (std::size_t i = 0; i < cubes.size(); ++i) {
    require_same_shape(cubes[0], cubes[i], "from_cubes");
    std::copy(cubes[i].values().begin(), cubes[i].values().end(), t.item(static_cast<int>(i)).begin());
  }
  return t;
}

Cube to_cube(const Tensor& t, int item) {
  Cube cube(t.h(), t.w(), t.c());
  const auto src = t.item(item);
  std::copy(src.begin(), src.end(), cube.values().begin());
  return cube;
}

Tensor take_item(const Tensor& t, int i) {
  Tensor out(1, t.c(), t.h(), t.w());
  const auto src = t.item(i);
  std::copy(src.begin(), src.end(), out.values().begin());
  return out;
}

Tensor concat_batch(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_batch: nothing to stack");
  int n = 0;
  for (const Tensor& p : parts) {
    if (p.c() != parts[0].c() || p.h() != parts[0].h() || p.w() != parts[0].w()) {
      throw ShapeError("concat_batch: shape mismatch " + shape_string(parts[0]) + " vs " + shape_string(p));
    }
    n += p.n();
  }
  Tensor out(n, parts[0].c(), parts[0].h(), parts[0].w());
  auto dst = out.values().begin();
  for (const Tensor& p : parts) dst = std::copy(p.values().begin(), p.values().end(), dst);
  return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w()) {
    throw ShapeError("concat_channels: shape mismatch " + shape_string(a) + " vs " + shape_string(b));
  }
  Tensor out(a.n(), a.c() + b.c(), a.h(), a.w());
  for (int i = 0; i < a.n(); ++i) {
    auto dst = std::copy(a.item(i).begin(), a.item(i).end(), out.item(i).begin());
    std::copy(b.item(i).begin(), b.item(i).end(), dst);
  }
  return out;
}

void split_channels(const Tensor& ab, int channels_a, Tensor& a, Tensor& b) {
  a = Tensor(ab.n(), channels_a, ab.h(), ab.w());
  b = Tensor(ab.n(), ab.c() - channels_a, ab.h(), ab.w());
  for (int i = 0; i < ab.n(); ++i) {
    const auto src = ab.item(i);
    std::copy(src.begin(), src.begin() + a.item_size(), a.item(i).begin());
    std::copy(src.begin() + a.item_size(), src.end(), b.item(i).begin());
  }
}

Tensor add(const Tensor& a, const Tensor& b) {
  Tensor out = a;
  add_inplace(out, b);
  return out;
}

void add_inplace(Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  auto x = a.values();
  const auto y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += y[i];
}

void scale_inplace(Tensor& a, float s) {
  for (float& v : a.values()) v *= s;
}

bool all_finite(const Tensor& t) {
  return std::all_of(t.values().begin(), t.values().end(), [](float v) { return std::isfinite(v); });
}

}  // namespace hsisr::nn
