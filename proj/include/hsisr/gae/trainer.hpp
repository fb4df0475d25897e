#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hsisr/gae/gae.hpp"
#include "hsisr/gae/losses.hpp"
#include "hsisr/nn/adam.hpp"

namespace hsisr::gae {

struct TrainOptions {
  int steps = 2000;
  int batch_size = 4;
  nn::AdamParams adam{};    // lr = 1e-4, betas (0.9, 0.999)
  double lr_final = -1.0;   // < 0: constant lr; otherwise cosine decay to this value
  std::uint64_t seed = 0;
};

struct TrainReport {
  std::vector<double> loss_curve;      // total loss per step
  std::vector<LossBreakdown> last;     // breakdown of the final step (grad dropped)
};

using StepCallback = std::function<void(std::int64_t step, const LossBreakdown& loss)>;

// Stage-1 training on HR patches. Batches for step s are drawn from the
// stream ("gae.batch", s) so resuming at start_step replays the same data.
// Throws NumericalError naming the step on a non-finite loss.
TrainReport train_gae(GroupAutoencoder& model, nn::Adam& opt, std::span<const Cube> patches,
                      const LossConfig& loss_cfg, const FeatureExtractor& phi, const TrainOptions& options,
                      std::int64_t start_step = 0, const StepCallback& on_step = {});

}  // namespace hsisr::gae
