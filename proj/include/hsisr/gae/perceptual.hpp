#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "hsisr/nn/sequential.hpp"

namespace hsisr::gae {

// Fixed (never trained) feature map applied to 3-channel images.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;

  virtual nn::Tensor features(const nn::Tensor& rgb) const = 0;
  // dL/drgb for a given dL/dfeatures. Recomputes the forward pass.
  virtual nn::Tensor backward(const nn::Tensor& rgb, const nn::Tensor& dfeatures) const = 0;
  virtual std::string name() const = 0;
};

class IdentityExtractor final : public FeatureExtractor {
 public:
  nn::Tensor features(const nn::Tensor& rgb) const override { return rgb; }
  nn::Tensor backward(const nn::Tensor&, const nn::Tensor& dfeatures) const override { return dfeatures; }
  std::string name() const override { return "identity"; }
};

// Two 3x3 ReLU conv layers (the second strided) with seeded random weights.
class RandomConvExtractor final : public FeatureExtractor {
 public:
  explicit RandomConvExtractor(std::uint64_t seed = 1234, int width = 16);

  nn::Tensor features(const nn::Tensor& rgb) const override;
  nn::Tensor backward(const nn::Tensor& rgb, const nn::Tensor& dfeatures) const override;
  std::string name() const override { return "fixed-random-conv"; }

 private:
  nn::ConvStack stack_;
};

// VGG19 feature prefix up to (and including) `cut`, e.g. "relu2_2".
// Weights come from a checkpoint container holding "conv1_1.weight",
// "conv1_1.bias", ... in [out, in, 3, 3] layout. Inputs in [0,1] are
// standardized with the ImageNet channel statistics.
class Vgg19Extractor final : public FeatureExtractor {
 public:
  Vgg19Extractor(const std::filesystem::path& weights, const std::string& cut = "relu2_2");

  nn::Tensor features(const nn::Tensor& rgb) const override;
  nn::Tensor backward(const nn::Tensor& rgb, const nn::Tensor& dfeatures) const override;
  std::string name() const override { return "pretrained-vgg19"; }

  // Layer names of the full VGG19 feature stack in order ("conv1_1", ...).
  static std::vector<std::string> conv_names();

 private:
  nn::Tensor standardize(const nn::Tensor& rgb) const;
  nn::ConvStack stack_;
};

// backend: "fixed-random-conv" | "pretrained-vgg19" | "identity".
std::unique_ptr<FeatureExtractor> make_extractor(const std::string& backend,
                                                 const std::filesystem::path& vgg_weights = {},
                                                 const std::string& vgg_cut = "relu2_2");

}  // namespace hsisr::gae
