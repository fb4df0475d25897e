#pragma once

#include <vector>

#include "hsisr/nn/layers.hpp"

namespace hsisr::nn {

// Straight-line stack of convolutions, activations and resampling ops.
// forward() can record the input of every op so backward() can replay it.
class ConvStack {
 public:
  void add_conv(Conv2d conv);
  void add_activation(Activation act);
  void add_upsample();
  void add_maxpool();

  bool empty() const { return ops_.empty(); }
  std::size_t size() const { return ops_.size(); }

  Tensor forward(const Tensor& x, std::vector<Tensor>* trace = nullptr) const;
  // When update_weights is false only dL/dx is propagated.
  Tensor backward(const std::vector<Tensor>& trace, const Tensor& dy, bool update_weights = true);
  Tensor backward_input(const std::vector<Tensor>& trace, const Tensor& dy) const;

  ParameterList parameters();
  std::vector<Conv2d>& convs() { return convs_; }
  const std::vector<Conv2d>& convs() const { return convs_; }

 private:
  enum class Kind { Conv, Act, Upsample, MaxPool };
  struct Op {
    Kind kind;
    int index;  // conv index or activation value
  };
  std::vector<Op> ops_;
  std::vector<Conv2d> convs_;
};

}  // namespace hsisr::nn
