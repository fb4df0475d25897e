#pragma once

#include <string>
#include <vector>

#include "hsisr/core/cube.hpp"
#include "hsisr/gae/gae.hpp"
#include "hsisr/nn/tensor.hpp"

namespace hsisr::pipeline {

// Maps a cube to the list of tensors the diffusion model works on and back.
// One reverse_sample runs per list element.
class LatentCodec {
 public:
  virtual ~LatentCodec() = default;
  virtual std::vector<nn::Tensor> encode(const Cube& cube) const = 0;
  virtual Cube decode(const std::vector<nn::Tensor>& latents) const = 0;
  virtual int latent_channels() const = 0;
  // Size of the latent grid relative to the cube.
  virtual int downscale() const = 0;
  // Number of latents per cube with `bands` bands.
  virtual int elements(int bands) const = 0;
};

// Affine map applied to latents so the diffusion model sees roughly unit variance.
struct LatentStandardizer {
  double shift = 0.0;
  double scale = 1.0;

  static LatentStandardizer fit(const std::vector<nn::Tensor>& latents);
  nn::Tensor forward(const nn::Tensor& z) const;
  nn::Tensor inverse(const nn::Tensor& z) const;
};

// The group autoencoder: one latent per band group.
class GaeCodec final : public LatentCodec {
 public:
  GaeCodec(const gae::GroupAutoencoder& model, LatentStandardizer standardizer);

  std::vector<nn::Tensor> encode(const Cube& cube) const override;
  Cube decode(const std::vector<nn::Tensor>& latents) const override;
  int latent_channels() const override { return model_.config().latent_channels; }
  int downscale() const override { return model_.config().latent_downscale; }
  int elements(int) const override { return model_.group_count(); }

  // Raw (unstandardized) latents, used to fit the standardizer.
  std::vector<nn::Tensor> encode_raw(const Cube& cube) const;

 private:
  const gae::GroupAutoencoder& model_;
  LatentStandardizer std_;
};

// No autoencoder, one single-band "latent" per band, values mapped to [-1, 1].
class PerBandCodec final : public LatentCodec {
 public:
  std::vector<nn::Tensor> encode(const Cube& cube) const override;
  Cube decode(const std::vector<nn::Tensor>& latents) const override;
  int latent_channels() const override { return 1; }
  int downscale() const override { return 1; }
  int elements(int bands) const override { return bands; }
};

// No autoencoder, the whole cube as a single C-channel "latent" in [-1, 1].
class FullBandCodec final : public LatentCodec {
 public:
  explicit FullBandCodec(int bands) : bands_(bands) {}
  std::vector<nn::Tensor> encode(const Cube& cube) const override;
  Cube decode(const std::vector<nn::Tensor>& latents) const override;
  int latent_channels() const override { return bands_; }
  int downscale() const override { return 1; }
  int elements(int) const override { return 1; }

 private:
  int bands_;
};

}  // namespace hsisr::pipeline
