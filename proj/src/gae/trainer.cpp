#include "hsisr/gae/trainer.hpp"

#include <cmath>

#include "hsisr/core/error.hpp"
#include "hsisr/core/rng.hpp"

namespace hsisr::gae {

TrainReport train_gae(GroupAutoencoder& model, nn::Adam& opt, std::span<const Cube> patches,
                      const LossConfig& loss_cfg, const FeatureExtractor& phi, const TrainOptions& options,
                      std::int64_t start_step, const StepCallback& on_step) {
  if (patches.empty()) throw ConfigError("train_gae: no training patches");
  if (options.batch_size < 1) throw ConfigError("train_gae: batch_size must be >= 1");
  loss_cfg.validate();
  TrainReport report;
  std::vector<Cube> batch(options.batch_size);
  for (std::int64_t step = start_step; step < options.steps; ++step) {
    Rng rng = seed_stream(options.seed, "gae.batch", static_cast<std::uint64_t>(step));
    for (int b = 0; b < options.batch_size; ++b) batch[b] = patches[rng() % patches.size()];
    const nn::Tensor x = nn::from_cubes(batch);

    opt.zero_grad();
    const nn::Tensor re = model.forward_train(x);
    LossBreakdown loss = total_loss(re, x, loss_cfg, phi, true);
    if (!std::isfinite(loss.total)) {
      throw NumericalError("stage-1 loss became non-finite at step " + std::to_string(step));
    }
    model.backward(loss.grad);
    const double lr = options.lr_final < 0 ? options.adam.lr
                                           : nn::cosine_lr(options.adam.lr, options.lr_final, step, options.steps);
    opt.step(lr);

    report.loss_curve.push_back(loss.total);
    loss.grad = nn::Tensor();
    if (on_step) on_step(step, loss);
    if (step + 1 == options.steps) report.last = {loss};
  }
  return report;
}

}  // namespace hsisr::gae
