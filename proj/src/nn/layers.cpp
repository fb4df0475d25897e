#include "hsisr/nn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "hsisr/core/error.hpp"

namespace hsisr::nn {

void Parameter::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0f); }

std::size_t parameter_count(const ParameterList& params) {
  std::size_t n = 0;
  for (const Parameter* p : params) n += p->size();
  return n;
}

void zero_grads(const ParameterList& params) {
  for (Parameter* p : params) p->zero_grad();
}

namespace {

Parameter make_parameter(std::string name, std::vector<int> shape, int fan_in, Rng& rng, InitMode init) {
  Parameter p;
  p.name = std::move(name);
  p.shape = std::move(shape);
  std::size_t count = 1;
  for (int d : p.shape) count *= static_cast<std::size_t>(d);
  p.value.assign(count, 0.0f);
  p.grad.assign(count, 0.0f);
  if (init == InitMode::Default) {
    const float stddev = std::sqrt(1.0f / static_cast<float>(fan_in));
    for (float& v : p.value) v = stddev * standard_normal(rng);
  }
  return p;
}

Parameter make_bias(std::string name, int count) {
  Parameter p;
  p.name = std::move(name);
  p.shape = {count};
  p.value.assign(count, 0.0f);
  p.grad.assign(count, 0.0f);
  return p;
}

}  // namespace

Conv2d::Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride, Rng& rng,
               InitMode init)
    : in_(in_channels), out_(out_channels), kernel_(kernel), stride_(stride) {
  weight = make_parameter(name + ".weight", {out_channels, in_channels, kernel, kernel},
                          in_channels * kernel * kernel, rng, init);
  bias = make_bias(name + ".bias", out_channels);
}

kernels::ConvShape Conv2d::shape_for(const Tensor& x) const {
  if (x.c() != in_) {
    throw ShapeError(weight.name + ": expected " + std::to_string(in_) + " input channels, got " +
                     shape_string(x));
  }
  return kernels::ConvShape{in_, out_, kernel_, stride_, kernel_ / 2, x.h(), x.w()};
}

Tensor Conv2d::forward(const Tensor& x) const {
  const auto s = shape_for(x);
  Tensor y(x.n(), out_, s.out_h(), s.out_w());
  for (int i = 0; i < x.n(); ++i) {
    kernels::parallel::conv2d_forward(s, x.item(i), weight.value, bias.value, y.item(i));
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& x, const Tensor& dy) {
  const auto s = shape_for(x);
  Tensor dx(x.n(), in_, x.h(), x.w());
  for (int i = 0; i < x.n(); ++i) {
    kernels::parallel::conv2d_backward_weight(s, x.item(i), dy.item(i), weight.grad, bias.grad);
    kernels::parallel::conv2d_backward_input(s, dy.item(i), weight.value, dx.item(i));
  }
  return dx;
}

Tensor Conv2d::backward_input(const Tensor& x, const Tensor& dy) const {
  const auto s = shape_for(x);
  Tensor dx(x.n(), in_, x.h(), x.w());
  for (int i = 0; i < x.n(); ++i) {
    kernels::parallel::conv2d_backward_input(s, dy.item(i), weight.value, dx.item(i));
  }
  return dx;
}

Linear::Linear(std::string name, int in_features, int out_features, Rng& rng, InitMode init)
    : in_(in_features), out_(out_features) {
  weight = make_parameter(name + ".weight", {out_features, in_features}, in_features, rng, init);
  bias = make_bias(name + ".bias", out_features);
}

Tensor Linear::forward(const Tensor& x) const {
  if (static_cast<int>(x.item_size()) != in_) {
    throw ShapeError(weight.name + ": expected " + std::to_string(in_) + " features, got " + shape_string(x));
  }
  Tensor y(x.n(), out_, 1, 1);
  for (int i = 0; i < x.n(); ++i) {
    auto out = y.item(i);
    std::copy(bias.value.begin(), bias.value.end(), out.begin());
  }
  kernels::parallel::gemm_nt(x.n(), out_, in_, x.values(), weight.value, y.values(), true);
  return y;
}

Tensor Linear::backward(const Tensor& x, const Tensor& dy) {
  Tensor dx(x.n(), in_, 1, 1);
  kernels::parallel::gemm_nn(x.n(), in_, out_, dy.values(), weight.value, dx.values(), false);
  for (int i = 0; i < x.n(); ++i) {
    const auto g = dy.item(i);
    const auto xi = x.item(i);
    for (int o = 0; o < out_; ++o) {
      bias.grad[o] += g[o];
      float* wrow = weight.grad.data() + static_cast<std::size_t>(o) * in_;
      for (int k = 0; k < in_; ++k) wrow[k] += g[o] * xi[k];
    }
  }
  return dx;
}

Activation parse_activation(const std::string& name) {
  if (name == "silu") return Activation::Silu;
  if (name == "relu") return Activation::Relu;
  if (name == "identity") return Activation::Identity;
  throw ConfigError("unknown activation '" + name + "'");
}

Tensor activate(Activation act, const Tensor& x) {
  Tensor y = x;
  switch (act) {
    case Activation::Silu:
      for (float& v : y.values()) v = v / (1.0f + std::exp(-v));
      break;
    case Activation::Relu:
      for (float& v : y.values()) v = std::max(v, 0.0f);
      break;
    case Activation::Identity:
      break;
  }
  return y;
}

Tensor activate_backward(Activation act, const Tensor& x, const Tensor& dy) {
  Tensor dx = dy;
  auto g = dx.values();
  const auto in = x.values();
  switch (act) {
    case Activation::Silu:
      for (std::size_t i = 0; i < g.size(); ++i) {
        const float s = 1.0f / (1.0f + std::exp(-in[i]));
        g[i] *= s * (1.0f + in[i] * (1.0f - s));
      }
      break;
    case Activation::Relu:
      for (std::size_t i = 0; i < g.size(); ++i)
        if (in[i] <= 0.0f) g[i] = 0.0f;
      break;
    case Activation::Identity:
      break;
  }
  return dx;
}

Tensor upsample_nearest2x(const Tensor& x) {
  Tensor y(x.n(), x.c(), x.h() * 2, x.w() * 2);
  for (int i = 0; i < x.n(); ++i)
    for (int ch = 0; ch < x.c(); ++ch)
      for (int yy = 0; yy < y.h(); ++yy)
        for (int xx = 0; xx < y.w(); ++xx) y.at(i, ch, yy, xx) = x.at(i, ch, yy / 2, xx / 2);
  return y;
}

Tensor upsample_nearest2x_backward(const Tensor& dy) {
  Tensor dx(dy.n(), dy.c(), dy.h() / 2, dy.w() / 2);
  for (int i = 0; i < dy.n(); ++i)
    for (int ch = 0; ch < dy.c(); ++ch)
      for (int yy = 0; yy < dy.h(); ++yy)
        for (int xx = 0; xx < dy.w(); ++xx) dx.at(i, ch, yy / 2, xx / 2) += dy.at(i, ch, yy, xx);
  return dx;
}

Tensor maxpool2x2(const Tensor& x) {
  Tensor y(x.n(), x.c(), x.h() / 2, x.w() / 2);
  for (int i = 0; i < x.n(); ++i)
    for (int ch = 0; ch < x.c(); ++ch)
      for (int yy = 0; yy < y.h(); ++yy)
        for (int xx = 0; xx < y.w(); ++xx) {
          float m = x.at(i, ch, 2 * yy, 2 * xx);
          m = std::max(m, x.at(i, ch, 2 * yy, 2 * xx + 1));
          m = std::max(m, x.at(i, ch, 2 * yy + 1, 2 * xx));
          m = std::max(m, x.at(i, ch, 2 * yy + 1, 2 * xx + 1));
          y.at(i, ch, yy, xx) = m;
        }
  return y;
}

Tensor maxpool2x2_backward(const Tensor& x, const Tensor& dy) {
  Tensor dx(x.n(), x.c(), x.h(), x.w());
  for (int i = 0; i < x.n(); ++i)
    for (int ch = 0; ch < x.c(); ++ch)
      for (int yy = 0; yy < dy.h(); ++yy)
        for (int xx = 0; xx < dy.w(); ++xx) {
          // Gradient goes to the first maximal element in raster order.
          int by = 2 * yy, bx = 2 * xx;
          for (int dy_ = 0; dy_ < 2; ++dy_)
            for (int dx_ = 0; dx_ < 2; ++dx_)
              if (x.at(i, ch, 2 * yy + dy_, 2 * xx + dx_) > x.at(i, ch, by, bx)) {
                by = 2 * yy + dy_;
                bx = 2 * xx + dx_;
              }
          dx.at(i, ch, by, bx) += dy.at(i, ch, yy, xx);
        }
  return dx;
}

void add_channel_bias(Tensor& x, const Tensor& bias) {
  if (bias.n() != x.n() || bias.c() != x.c()) {
    throw ShapeError("add_channel_bias: " + shape_string(bias) + " does not match " + shape_string(x));
  }
  for (int i = 0; i < x.n(); ++i)
    for (int ch = 0; ch < x.c(); ++ch) {
      const float b = bias.at(i, ch, 0, 0);
      for (float& v : x.plane(i, ch)) v += b;
    }
}

Tensor channel_bias_backward(const Tensor& dy) {
  Tensor db(dy.n(), dy.c(), 1, 1);
  for (int i = 0; i < dy.n(); ++i)
    for (int ch = 0; ch < dy.c(); ++ch) {
      float acc = 0.0f;
      for (float v : dy.plane(i, ch)) acc += v;
      db.at(i, ch, 0, 0) = acc;
    }
  return db;
}

}  // namespace hsisr::nn
