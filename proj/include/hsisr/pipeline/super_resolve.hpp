#pragma once

#include <cstdint>
#include <mutex>
#include <vector>

#include "hsisr/core/cube.hpp"
#include "hsisr/diffusion/denoiser.hpp"
#include "hsisr/pipeline/codec.hpp"

namespace hsisr::pipeline {

// Seed of the reverse-sampling stream for latent `element`.
std::uint64_t element_seed(std::uint64_t seed, int element);

// Upsample the LR cube to the HR grid, encode it, run reverse_sample on every
// latent with the shared denoiser, and decode the list. Latents are sampled in
// parallel; each uses its own seed stream so the result does not depend on the
// thread count.
Cube super_resolve(const LatentCodec& codec, const diffusion::NoisePredictor& model,
                   const diffusion::NoiseSchedule& sched, const Cube& lr, int scale, std::uint64_t seed);

// Wraps a predictor and records every call as (timestep, first value of z_lr).
class TracingPredictor final : public diffusion::NoisePredictor {
 public:
  struct Call {
    int t;
    float z_lr_probe;
  };
  explicit TracingPredictor(const diffusion::NoisePredictor& inner) : inner_(inner) {}
  std::vector<Call> trace() const;

 protected:
  nn::Tensor do_predict(const nn::Tensor& z_t, std::span<const int> t, const nn::Tensor& z_lr) const override;

 private:
  const diffusion::NoisePredictor& inner_;
  mutable std::mutex mu_;
  mutable std::vector<Call> calls_;
};

}  // namespace hsisr::pipeline
