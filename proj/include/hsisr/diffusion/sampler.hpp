#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hsisr/diffusion/denoiser.hpp"
#include "hsisr/diffusion/schedule.hpp"
#include "hsisr/nn/adam.hpp"

namespace hsisr::diffusion {

// z_t = sqrt(abar_t) z0 + sqrt(1 - abar_t) eps, one timestep for the whole batch.
nn::Tensor q_sample(const nn::Tensor& z0, int t, const nn::Tensor& eps, const NoiseSchedule& sched);
// Per-item timesteps.
nn::Tensor q_sample(const nn::Tensor& z0, std::span<const int> t, const nn::Tensor& eps, const NoiseSchedule& sched);

// One ancestral update from z_t to z_{t-1}. eps_draw is ignored at t == 1 and may be empty there.
nn::Tensor reverse_step(const NoisePredictor& model, const nn::Tensor& z_t, int t, const nn::Tensor& z_lr,
                        const NoiseSchedule& sched, const nn::Tensor& eps_draw);

// Runs t = T..1 from a standard-normal start; exactly T predictor calls per item of z_lr.
nn::Tensor reverse_sample(const NoisePredictor& model, const nn::Tensor& z_lr, const NoiseSchedule& sched,
                          std::uint64_t seed);

struct StepResult {
  double loss = 0.0;
};

// One optimisation step of the L1 noise-prediction objective on a batch of aligned
// (z_lr, z_hr) latents. t ~ U{1..T} and eps ~ N(0, I) come from rng.
StepResult train_step(DenoiserModel& model, nn::Adam& opt, const nn::Tensor& z_lr, const nn::Tensor& z_hr,
                      const NoiseSchedule& sched, Rng& rng, double lr);

struct LatentPair {
  nn::Tensor lr;  // [1, L, h, w]
  nn::Tensor hr;
};

struct DiffusionTrainOptions {
  int steps = 2000;
  int batch_size = 4;
  int crop = 0;  // random square latent crop per sample; 0 uses the whole latent
  double lr = 1e-5;
  double lr_final = -1.0;  // >= 0 enables cosine decay towards it
  std::uint64_t seed = 0;
};

struct DiffusionTrainReport {
  std::vector<double> loss_curve;
};

using DiffusionStepCallback = std::function<void(int step, double loss)>;

DiffusionTrainReport train_diffusion(DenoiserModel& model, nn::Adam& opt, std::span<const LatentPair> pairs,
                                     const NoiseSchedule& sched, const DiffusionTrainOptions& options,
                                     int start_step = 0, const DiffusionStepCallback& on_step = {});

}  // namespace hsisr::diffusion
