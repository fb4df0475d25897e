#pragma once

#include <string>
#include <vector>

#include "hsisr/core/rng.hpp"
#include "hsisr/kernels/kernels.hpp"
#include "hsisr/nn/tensor.hpp"

namespace hsisr::nn {

// A trainable array with its gradient accumulator.
struct Parameter {
  std::string name;
  std::vector<int> shape;
  std::vector<float> value;
  std::vector<float> grad;

  std::size_t size() const { return value.size(); }
  void zero_grad();
};

using ParameterList = std::vector<Parameter*>;

std::size_t parameter_count(const ParameterList& params);
void zero_grads(const ParameterList& params);

enum class InitMode { Default, Zero };

class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride, Rng& rng,
         InitMode init = InitMode::Default);

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  int stride() const { return stride_; }

  Tensor forward(const Tensor& x) const;
  // Accumulates weight/bias gradients and returns dL/dx.
  Tensor backward(const Tensor& x, const Tensor& dy);
  // Gradient w.r.t. the input only; weights untouched (frozen layers).
  Tensor backward_input(const Tensor& x, const Tensor& dy) const;

  void collect(ParameterList& out) { out.push_back(&weight); out.push_back(&bias); }

  Parameter weight;
  Parameter bias;

 private:
  kernels::ConvShape shape_for(const Tensor& x) const;

  int in_ = 0;
  int out_ = 0;
  int kernel_ = 3;
  int stride_ = 1;
};

class Linear {
 public:
  Linear() = default;
  Linear(std::string name, int in_features, int out_features, Rng& rng, InitMode init = InitMode::Default);

  int out_features() const { return out_; }

  // x and y are [n, features] stored as tensors of shape [n, features, 1, 1].
  Tensor forward(const Tensor& x) const;
  Tensor backward(const Tensor& x, const Tensor& dy);

  void collect(ParameterList& out) { out.push_back(&weight); out.push_back(&bias); }

  Parameter weight;
  Parameter bias;

 private:
  int in_ = 0;
  int out_ = 0;
};

enum class Activation { Silu, Relu, Identity };

Activation parse_activation(const std::string& name);
Tensor activate(Activation act, const Tensor& x);
// dL/dx given the pre-activation input x and dL/dy.
Tensor activate_backward(Activation act, const Tensor& x, const Tensor& dy);

Tensor upsample_nearest2x(const Tensor& x);
Tensor upsample_nearest2x_backward(const Tensor& dy);

Tensor maxpool2x2(const Tensor& x);
Tensor maxpool2x2_backward(const Tensor& x, const Tensor& dy);

// x[i, ch, :, :] += bias[i, ch] where bias is [n, c, 1, 1].
void add_channel_bias(Tensor& x, const Tensor& bias);
// Sums dy over space into a [n, c, 1, 1] tensor.
Tensor channel_bias_backward(const Tensor& dy);

}  // namespace hsisr::nn
