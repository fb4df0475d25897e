#include "hsisr/nn/sequential.hpp"

#include "hsisr/core/error.hpp"

namespace hsisr::nn {

void ConvStack::add_conv(Conv2d conv) {
  ops_.push_back({Kind::Conv, static_cast<int>(convs_.size())});
  convs_.push_back(std::move(conv));
}

void ConvStack::add_activation(Activation act) { ops_.push_back({Kind::Act, static_cast<int>(act)}); }
void ConvStack::add_upsample() { ops_.push_back({Kind::Upsample, 0}); }
void ConvStack::add_maxpool() { ops_.push_back({Kind::MaxPool, 0}); }

Tensor ConvStack::forward(const Tensor& x, std::vector<Tensor>* trace) const {
  if (trace) trace->clear();
  Tensor cur = x;
  for (const Op& op : ops_) {
    if (trace) trace->push_back(cur);
    switch (op.kind) {
      case Kind::Conv: cur = convs_[op.index].forward(cur); break;
      case Kind::Act: cur = activate(static_cast<Activation>(op.index), cur); break;
      case Kind::Upsample: cur = upsample_nearest2x(cur); break;
      case Kind::MaxPool: cur = maxpool2x2(cur); break;
    }
  }
  return cur;
}

Tensor ConvStack::backward(const std::vector<Tensor>& trace, const Tensor& dy, bool update_weights) {
  if (!update_weights) return backward_input(trace, dy);
  if (trace.size() != ops_.size()) throw ShapeError("ConvStack::backward: trace does not match the stack");
  Tensor grad = dy;
  for (std::size_t k = ops_.size(); k-- > 0;) {
    const Op& op = ops_[k];
    const Tensor& in = trace[k];
    switch (op.kind) {
      case Kind::Conv:
        grad = convs_[op.index].backward(in, grad);
        break;
      case Kind::Act: grad = activate_backward(static_cast<Activation>(op.index), in, grad); break;
      case Kind::Upsample: grad = upsample_nearest2x_backward(grad); break;
      case Kind::MaxPool: grad = maxpool2x2_backward(in, grad); break;
    }
  }
  return grad;
}

Tensor ConvStack::backward_input(const std::vector<Tensor>& trace, const Tensor& dy) const {
  if (trace.size() != ops_.size()) throw ShapeError("ConvStack::backward: trace does not match the stack");
  Tensor grad = dy;
  for (std::size_t k = ops_.size(); k-- > 0;) {
    const Op& op = ops_[k];
    const Tensor& in = trace[k];
    switch (op.kind) {
      case Kind::Conv: grad = convs_[op.index].backward_input(in, grad); break;
      case Kind::Act: grad = activate_backward(static_cast<Activation>(op.index), in, grad); break;
      case Kind::Upsample: grad = upsample_nearest2x_backward(grad); break;
      case Kind::MaxPool: grad = maxpool2x2_backward(in, grad); break;
    }
  }
  return grad;
}

ParameterList ConvStack::parameters() {
  ParameterList out;
  for (Conv2d& c : convs_) c.collect(out);
  return out;
}

}  // namespace hsisr::nn
