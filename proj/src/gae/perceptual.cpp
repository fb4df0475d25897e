#include "hsisr/gae/perceptual.hpp"

#include "hsisr/core/error.hpp"
#include "hsisr/core/rng.hpp"
#include "hsisr/nn/checkpoint.hpp"

namespace hsisr::gae {

RandomConvExtractor::RandomConvExtractor(std::uint64_t seed, int width) {
  Rng rng = seed_stream(seed, "perceptual.random_conv");
  stack_.add_conv(nn::Conv2d("phi.conv1", 3, width, 3, 1, rng));
  stack_.add_activation(nn::Activation::Relu);
  stack_.add_conv(nn::Conv2d("phi.conv2", width, width, 3, 2, rng));
  stack_.add_activation(nn::Activation::Relu);
}

nn::Tensor RandomConvExtractor::features(const nn::Tensor& rgb) const { return stack_.forward(rgb); }

nn::Tensor RandomConvExtractor::backward(const nn::Tensor& rgb, const nn::Tensor& dfeatures) const {
  std::vector<nn::Tensor> trace;
  stack_.forward(rgb, &trace);
  return stack_.backward_input(trace, dfeatures);
}

namespace {

struct VggLayer {
  const char* name;
  int channels;  // 0 marks a pooling layer
};

constexpr VggLayer kVgg19[] = {
    {"conv1_1", 64},  {"conv1_2", 64},  {"pool1", 0},    {"conv2_1", 128}, {"conv2_2", 128},
    {"pool2", 0},     {"conv3_1", 256}, {"conv3_2", 256}, {"conv3_3", 256}, {"conv3_4", 256},
    {"pool3", 0},     {"conv4_1", 512}, {"conv4_2", 512}, {"conv4_3", 512}, {"conv4_4", 512},
    {"pool4", 0},     {"conv5_1", 512}, {"conv5_2", 512}, {"conv5_3", 512}, {"conv5_4", 512},
    {"pool5", 0},
};

constexpr float kMean[3] = {0.485f, 0.456f, 0.406f};
constexpr float kStd[3] = {0.229f, 0.224f, 0.225f};

}  // namespace

std::vector<std::string> Vgg19Extractor::conv_names() {
  std::vector<std::string> names;
  for (const VggLayer& l : kVgg19)
    if (l.channels > 0) names.emplace_back(l.name);
  return names;
}

Vgg19Extractor::Vgg19Extractor(const std::filesystem::path& weights, const std::string& cut) {
  const nn::Checkpoint ckpt = nn::Checkpoint::load(weights);
  Rng unused(0);
  int in = 3;
  bool reached = false;
  for (const VggLayer& l : kVgg19) {
    const std::string name = l.name;
    if (l.channels == 0) {
      stack_.add_maxpool();
      if (cut == name) {
        reached = true;
        break;
      }
      continue;
    }
    nn::Conv2d conv(name, in, l.channels, 3, 1, unused, nn::InitMode::Zero);
    nn::ParameterList params;
    conv.collect(params);
    nn::restore_parameters(ckpt, params);
    stack_.add_conv(std::move(conv));
    in = l.channels;
    if (cut == name) {
      reached = true;
      break;
    }
    stack_.add_activation(nn::Activation::Relu);
    if (cut == "relu" + name.substr(4)) {
      reached = true;
      break;
    }
  }
  if (!reached) throw ConfigError("unknown VGG19 cut layer '" + cut + "'");
}

nn::Tensor Vgg19Extractor::standardize(const nn::Tensor& rgb) const {
  if (rgb.c() != 3) throw ShapeError("VGG19 expects 3-channel input, got " + nn::shape_string(rgb));
  nn::Tensor x = rgb;
  for (int i = 0; i < x.n(); ++i)
    for (int ch = 0; ch < 3; ++ch)
      for (float& v : x.plane(i, ch)) v = (v - kMean[ch]) / kStd[ch];
  return x;
}

nn::Tensor Vgg19Extractor::features(const nn::Tensor& rgb) const { return stack_.forward(standardize(rgb)); }

nn::Tensor Vgg19Extractor::backward(const nn::Tensor& rgb, const nn::Tensor& dfeatures) const {
  std::vector<nn::Tensor> trace;
  stack_.forward(standardize(rgb), &trace);
  nn::Tensor dx = stack_.backward_input(trace, dfeatures);
  for (int i = 0; i < dx.n(); ++i)
    for (int ch = 0; ch < 3; ++ch)
      for (float& v : dx.plane(i, ch)) v /= kStd[ch];
  return dx;
}

std::unique_ptr<FeatureExtractor> make_extractor(const std::string& backend,
                                                 const std::filesystem::path& vgg_weights,
                                                 const std::string& vgg_cut) {
  if (backend == "fixed-random-conv") return std::make_unique<RandomConvExtractor>();
  if (backend == "identity") return std::make_unique<IdentityExtractor>();
  if (backend == "pretrained-vgg19") {
    if (vgg_weights.empty()) throw ConfigError("pretrained-vgg19 backend needs loss.vgg_weights");
    return std::make_unique<Vgg19Extractor>(vgg_weights, vgg_cut);
  }
  throw ConfigError("unknown perceptual backend '" + backend + "'");
}

}  // namespace hsisr::gae
