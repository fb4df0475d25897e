#pragma once

#include <cstdint>
#include <vector>

#include "hsisr/nn/layers.hpp"

namespace hsisr::nn {

struct AdamParams {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(ParameterList params, AdamParams hp);

  // One update from the accumulated gradients at learning rate `lr`.
  void step(double lr);
  void step() { step(hp_.lr); }
  void zero_grad();

  std::int64_t steps() const { return t_; }
  const AdamParams& params() const { return hp_; }
  const ParameterList& parameters() const { return params_; }

  // Moment buffers, exposed for checkpointing.
  std::vector<std::vector<float>>& first_moments() { return m_; }
  std::vector<std::vector<float>>& second_moments() { return v_; }
  void set_steps(std::int64_t t) { t_ = t; }

 private:
  ParameterList params_;
  AdamParams hp_;
  std::int64_t t_ = 0;
  std::vector<std::vector<float>> m_;
  std::vector<std::vector<float>> v_;
};

// Cosine decay from lr to lr_final over total_steps.
double cosine_lr(double lr, double lr_final, std::int64_t step, std::int64_t total_steps);

}  // namespace hsisr::nn
