#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "hsisr/diffusion/schedule.hpp"
#include "hsisr/nn/checkpoint.hpp"
#include "hsisr/nn/layers.hpp"

namespace hsisr::diffusion {

// Anything that maps (z_t, t, z_LR) to a noise estimate. predict() is the only
// entry point used for sampling and counts one call per latent evaluated.
class NoisePredictor {
 public:
  virtual ~NoisePredictor() = default;

  // z_t, z_lr: [N, L, h, w] with one timestep per item.
  nn::Tensor predict(const nn::Tensor& z_t, std::span<const int> t, const nn::Tensor& z_lr) const;

  std::uint64_t calls() const { return calls_.load(); }
  void reset_calls() { calls_.store(0); }

 protected:
  virtual nn::Tensor do_predict(const nn::Tensor& z_t, std::span<const int> t, const nn::Tensor& z_lr) const = 0;

 private:
  mutable std::atomic<std::uint64_t> calls_{0};
};

// A noise predictor that can be trained.
class DenoiserModel : public NoisePredictor {
 public:
  // Same result as predict() but caches what backward() needs; not counted as a sampling call.
  virtual nn::Tensor forward_train(const nn::Tensor& z_t, std::span<const int> t, const nn::Tensor& z_lr) = 0;
  // Accumulates parameter gradients for the last forward_train().
  virtual void backward(const nn::Tensor& dpred) = 0;
  virtual nn::ParameterList parameters() = 0;
};

// Sinusoidal embedding of integer timesteps, [N, dim, 1, 1].
nn::Tensor timestep_embedding(std::span<const int> t, int dim);

// Small U-Net: channel concatenation of z_t and z_LR at the input, one residual
// block per resolution with the time embedding added as a per-channel bias,
// stride-2 downsampling, nearest upsampling and skip concatenation.
class UNetDenoiser final : public DenoiserModel {
 public:
  UNetDenoiser(const DiffusionConfig& cfg, int latent_channels, std::uint64_t seed);

  int latent_channels() const { return latent_; }
  // Latent height and width must be multiples of this.
  int spatial_multiple() const { return 1 << (levels() - 1); }

  nn::Tensor forward_train(const nn::Tensor& z_t, std::span<const int> t, const nn::Tensor& z_lr) override;
  void backward(const nn::Tensor& dpred) override;
  nn::ParameterList parameters() override;

  void save(nn::Checkpoint& ckpt);
  void load(const nn::Checkpoint& ckpt);
  nlohmann::json signature() const;

 protected:
  nn::Tensor do_predict(const nn::Tensor& z_t, std::span<const int> t, const nn::Tensor& z_lr) const override;

 private:
  struct ResBlock {
    nn::Conv2d conv1;
    nn::Conv2d conv2;
    nn::Linear proj;
  };
  struct BlockCache {
    nn::Tensor x, a, h1, b;
  };
  struct Cache {
    nn::Tensor e0, u, v, w2, emb;
    nn::Tensor input;
    std::vector<BlockCache> enc, dec;
    BlockCache mid;
    std::vector<nn::Tensor> down_in, merge_in, up_in;
    nn::Tensor out_pre, out_act;
  };

  int levels() const { return static_cast<int>(cfg_.widths.size()); }
  nn::Tensor run(const nn::Tensor& z_t, std::span<const int> t, const nn::Tensor& z_lr, Cache* cache) const;
  nn::Tensor block_forward(const ResBlock& blk, const nn::Tensor& x, const nn::Tensor& emb, BlockCache* cache) const;
  nn::Tensor block_backward(ResBlock& blk, const BlockCache& cache, const nn::Tensor& emb, const nn::Tensor& dy,
                            nn::Tensor& demb);
  void check_inputs(const nn::Tensor& z_t, std::span<const int> t, const nn::Tensor& z_lr) const;

  DiffusionConfig cfg_;
  int latent_ = 0;
  int emb_dim_ = 0;
  nn::Linear temb1_, temb2_;
  nn::Conv2d conv_in_;
  std::vector<ResBlock> enc_;
  std::vector<nn::Conv2d> down_;
  ResBlock mid_;
  std::vector<nn::Conv2d> merge_;
  std::vector<ResBlock> dec_;
  std::vector<nn::Conv2d> up_;  // up_[l] maps width l to width l-1; up_[0] unused
  nn::Conv2d conv_out_;
  nn::Activation act_ = nn::Activation::Silu;
  Cache cache_;
};

}  // namespace hsisr::diffusion
