#include "hsisr/pipeline/codec.hpp"

#include <algorithm>
#include <cmath>

#include "hsisr/core/error.hpp"

namespace hsisr::pipeline {

using nn::Tensor;

LatentStandardizer LatentStandardizer::fit(const std::vector<Tensor>& latents) {
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (const auto& z : latents) {
    for (float v : z.values()) {
      sum += v;
      sq += static_cast<double>(v) * v;
    }
    n += z.size();
  }
  if (n == 0) throw ShapeError("cannot fit a standardizer on no latents");
  const double mean = sum / n;
  const double var = std::max(sq / n - mean * mean, 0.0);
  return {mean, var > 1e-12 ? std::sqrt(var) : 1.0};
}

Tensor LatentStandardizer::forward(const Tensor& z) const {
  Tensor out = z;
  for (float& v : out.values()) v = static_cast<float>((v - shift) / scale);
  return out;
}

Tensor LatentStandardizer::inverse(const Tensor& z) const {
  Tensor out = z;
  for (float& v : out.values()) v = static_cast<float>(v * scale + shift);
  return out;
}

GaeCodec::GaeCodec(const gae::GroupAutoencoder& model, LatentStandardizer standardizer)
    : model_(model), std_(standardizer) {}

std::vector<Tensor> GaeCodec::encode_raw(const Cube& cube) const {
  const Tensor z = model_.encode(nn::from_cube(cube));
  std::vector<Tensor> out;
  for (int g = 0; g < z.n(); ++g) out.push_back(nn::take_item(z, g));
  return out;
}

std::vector<Tensor> GaeCodec::encode(const Cube& cube) const {
  auto out = encode_raw(cube);
  for (auto& z : out) z = std_.forward(z);
  return out;
}

Cube GaeCodec::decode(const std::vector<Tensor>& latents) const {
  if (static_cast<int>(latents.size()) != model_.group_count()) {
    throw ShapeError("expected " + std::to_string(model_.group_count()) + " latents, got " +
                     std::to_string(latents.size()));
  }
  std::vector<Tensor> raw;
  for (const auto& z : latents) raw.push_back(std_.inverse(z));
  return nn::to_cube(model_.decode(nn::concat_batch(raw)));
}

namespace {

Tensor to_signed(Tensor t) {
  for (float& v : t.values()) v = 2.0f * v - 1.0f;
  return t;
}

Tensor to_unit(Tensor t) {
  for (float& v : t.values()) v = 0.5f * (v + 1.0f);
  return t;
}

}  // namespace

std::vector<Tensor> PerBandCodec::encode(const Cube& cube) const {
  std::vector<Tensor> out;
  for (int b = 0; b < cube.bands(); ++b) {
    Tensor t(1, 1, cube.height(), cube.width());
    const auto src = cube.band(b);
    std::copy(src.begin(), src.end(), t.values().begin());
    out.push_back(to_signed(std::move(t)));
  }
  return out;
}

Cube PerBandCodec::decode(const std::vector<Tensor>& latents) const {
  if (latents.empty()) throw ShapeError("no bands to decode");
  const int h = latents.front().h();
  const int w = latents.front().w();
  Cube cube(h, w, static_cast<int>(latents.size()));
  for (std::size_t b = 0; b < latents.size(); ++b) {
    if (latents[b].c() != 1 || latents[b].h() != h || latents[b].w() != w) throw ShapeError("ragged band latents");
    const Tensor u = to_unit(latents[b]);
    std::copy(u.values().begin(), u.values().end(), cube.band(static_cast<int>(b)).begin());
  }
  return cube;
}

std::vector<Tensor> FullBandCodec::encode(const Cube& cube) const {
  if (cube.bands() != bands_) throw ShapeError("full-band codec expects " + std::to_string(bands_) + " bands");
  return {to_signed(nn::from_cube(cube))};
}

Cube FullBandCodec::decode(const std::vector<Tensor>& latents) const {
  if (latents.size() != 1 || latents.front().c() != bands_) throw ShapeError("full-band codec expects one latent");
  return nn::to_cube(to_unit(latents.front()));
}

}  // namespace hsisr::pipeline
