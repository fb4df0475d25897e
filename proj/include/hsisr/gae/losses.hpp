#pragma once

#include "hsisr/core/cube.hpp"
#include "hsisr/gae/perceptual.hpp"
#include "hsisr/nn/tensor.hpp"

namespace hsisr::gae {

struct LossConfig {
  double lambda1 = 0.3;    // SAM
  double lambda2 = 0.1;    // gradient
  double lambda3 = 0.001;  // perceptual

  void validate() const;
};

// Loss value plus dLoss/dre (left empty when not requested).
struct LossValue {
  double value = 0.0;
  nn::Tensor grad;
};

// All losses take reconstruction `re` and reference `hr` as [N, C, H, W] batches.
LossValue l1_loss(const nn::Tensor& re, const nn::Tensor& hr, bool with_grad = false);
LossValue sam_loss(const nn::Tensor& re, const nn::Tensor& hr, bool with_grad = false);
LossValue gradient_loss(const nn::Tensor& re, const nn::Tensor& hr, bool with_grad = false);
LossValue perceptual_loss(const nn::Tensor& re, const nn::Tensor& hr, const FeatureExtractor& phi,
                          bool with_grad = false);

// Start band of each 3-band window: 0, 3, 6, ... with the last one right-aligned.
std::vector<int> perceptual_windows(int bands);

struct LossBreakdown {
  double l1 = 0.0;
  double sam = 0.0;
  double gradient = 0.0;
  double perceptual = 0.0;
  double total = 0.0;
  nn::Tensor grad;
};

// L1 + lambda1 * SAM + lambda2 * gradient + lambda3 * perceptual.
LossBreakdown total_loss(const nn::Tensor& re, const nn::Tensor& hr, const LossConfig& cfg,
                         const FeatureExtractor& phi, bool with_grad = false);

double loss_l1(const Cube& re, const Cube& hr);
double loss_sam(const Cube& re, const Cube& hr);
double loss_gradient(const Cube& re, const Cube& hr);
double loss_perceptual(const Cube& re, const Cube& hr, const FeatureExtractor& phi);
double loss_total(const Cube& re, const Cube& hr, const LossConfig& cfg, const FeatureExtractor& phi);

}  // namespace hsisr::gae
