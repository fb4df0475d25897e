#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hsisr/core/cube.hpp"

namespace hsisr::nn {

// Dense NCHW float tensor.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int n, int c, int h, int w, float fill = 0.0f);

  int n() const { return n_; }
  int c() const { return c_; }
  int h() const { return h_; }
  int w() const { return w_; }
  std::size_t plane_size() const { return static_cast<std::size_t>(h_) * w_; }
  std::size_t item_size() const { return static_cast<std::size_t>(c_) * h_ * w_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }
  std::span<float> item(int i) { return {data_.data() + i * item_size(), item_size()}; }
  std::span<const float> item(int i) const { return {data_.data() + i * item_size(), item_size()}; }
  std::span<float> plane(int i, int ch) { return {data_.data() + (static_cast<std::size_t>(i) * c_ + ch) * plane_size(), plane_size()}; }
  std::span<const float> plane(int i, int ch) const { return {data_.data() + (static_cast<std::size_t>(i) * c_ + ch) * plane_size(), plane_size()}; }

  float& at(int i, int ch, int y, int x) { return data_[((static_cast<std::size_t>(i) * c_ + ch) * h_ + y) * w_ + x]; }
  float at(int i, int ch, int y, int x) const { return data_[((static_cast<std::size_t>(i) * c_ + ch) * h_ + y) * w_ + x]; }

  bool same_shape(const Tensor& o) const { return n_ == o.n_ && c_ == o.c_ && h_ == o.h_ && w_ == o.w_; }

  friend bool operator==(const Tensor& a, const Tensor& b) { return a.same_shape(b) && a.data_ == b.data_; }

 private:
  int n_ = 0;
  int c_ = 0;
  int h_ = 0;
  int w_ = 0;
  std::vector<float> data_;
};

std::string shape_string(const Tensor& t);
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

Tensor from_cube(const Cube& cube);
Tensor from_cubes(std::span<const Cube> cubes);
Cube to_cube(const Tensor& t, int item = 0);

// Copies item `i` out as a batch of one.
Tensor take_item(const Tensor& t, int i);
// Stacks same-shaped tensors along the batch axis.
Tensor concat_batch(std::span<const Tensor> parts);

Tensor concat_channels(const Tensor& a, const Tensor& b);
// Inverse of concat_channels for gradients: returns the first `channels_a` channels in `a`.
void split_channels(const Tensor& ab, int channels_a, Tensor& a, Tensor& b);

// y = a + b (same shape); in-place accumulate variant.
Tensor add(const Tensor& a, const Tensor& b);
void add_inplace(Tensor& a, const Tensor& b);
void scale_inplace(Tensor& a, float s);

bool all_finite(const Tensor& t);

}  // namespace hsisr::nn
