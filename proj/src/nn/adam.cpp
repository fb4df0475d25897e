#include "hsisr/nn/adam.hpp"

#include <algorithm>
#include <cmath>

namespace hsisr::nn {

Adam::Adam(ParameterList params, AdamParams hp) : params_(std::move(params)), hp_(hp) {
  for (const Parameter* p : params_) {
    m_.emplace_back(p->size(), 0.0f);
    v_.emplace_back(p->size(), 0.0f);
  }
}

void Adam::step(double lr) {
  ++t_;
  const double b1 = hp_.beta1;
  const double b2 = hp_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter& p = *params_[k];
    auto& m = m_[k];
    auto& v = v_[k];
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = static_cast<float>(b1 * m[i] + (1.0 - b1) * g);
      v[i] = static_cast<float>(b2 * v[i] + (1.0 - b2) * g * g);
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p.value[i] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + hp_.eps));
    }
  }
}

void Adam::zero_grad() { zero_grads(params_); }

double cosine_lr(double lr, double lr_final, std::int64_t step, std::int64_t total_steps) {
  if (total_steps <= 1) return lr;
  constexpr double kPi = 3.14159265358979323846;
  const double frac = std::min(1.0, static_cast<double>(step) / static_cast<double>(total_steps - 1));
  return lr_final + 0.5 * (lr - lr_final) * (1.0 + std::cos(kPi * frac));
}

}  // namespace hsisr::nn
