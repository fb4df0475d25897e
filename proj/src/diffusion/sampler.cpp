#include "hsisr/diffusion/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hsisr/core/error.hpp"

namespace hsisr::diffusion {

using nn::Tensor;

Tensor q_sample(const Tensor& z0, std::span<const int> t, const Tensor& eps, const NoiseSchedule& sched) {
  nn::require_same_shape(z0, eps, "q_sample");
  if (static_cast<int>(t.size()) != z0.n()) throw ShapeError("q_sample: one timestep per item required");
  Tensor out(z0.n(), z0.c(), z0.h(), z0.w());
  for (int i = 0; i < z0.n(); ++i) {
    require_timestep(sched, t[i]);
    const double ab = sched.alpha_bar_at(t[i]);
    const double a = std::sqrt(ab);
    const double b = std::sqrt(1.0 - ab);
    const auto x = z0.item(i);
    const auto e = eps.item(i);
    auto y = out.item(i);
    for (std::size_t k = 0; k < y.size(); ++k) y[k] = static_cast<float>(a * x[k] + b * e[k]);
  }
  return out;
}

Tensor q_sample(const Tensor& z0, int t, const Tensor& eps, const NoiseSchedule& sched) {
  std::vector<int> ts(static_cast<std::size_t>(z0.n()), t);
  return q_sample(z0, std::span<const int>(ts), eps, sched);
}

Tensor reverse_step(const NoisePredictor& model, const Tensor& z_t, int t, const Tensor& z_lr,
                    const NoiseSchedule& sched, const Tensor& eps_draw) {
  require_timestep(sched, t);
  if (t > 1) nn::require_same_shape(z_t, eps_draw, "reverse_step noise");
  std::vector<int> ts(static_cast<std::size_t>(z_t.n()), t);
  const Tensor eps_theta = model.predict(z_t, ts, z_lr);
  nn::require_same_shape(z_t, eps_theta, "denoiser output");

  const double alpha = sched.alpha_at(t);
  const double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
  const double coef = (1.0 - alpha) / std::sqrt(1.0 - sched.alpha_bar_at(t));
  const double sigma = t > 1 ? std::sqrt(1.0 - alpha) : 0.0;

  Tensor out(z_t.n(), z_t.c(), z_t.h(), z_t.w());
  const auto z = z_t.values();
  const auto e = eps_theta.values();
  auto y = out.values();
  for (std::size_t k = 0; k < y.size(); ++k) {
    double v = inv_sqrt_alpha * (z[k] - coef * e[k]);
    if (t > 1) v += sigma * eps_draw.values()[k];
    y[k] = static_cast<float>(v);
  }
  return out;
}

Tensor reverse_sample(const NoisePredictor& model, const Tensor& z_lr, const NoiseSchedule& sched,
                      std::uint64_t seed) {
  Rng rng = seed_stream(seed, "diffusion.sample");
  auto draw = [&] {
    Tensor e(z_lr.n(), z_lr.c(), z_lr.h(), z_lr.w());
    for (float& v : e.values()) v = standard_normal(rng);
    return e;
  };
  Tensor z = draw();
  const Tensor none;
  for (int t = sched.steps(); t >= 1; --t) {
    z = t > 1 ? reverse_step(model, z, t, z_lr, sched, draw()) : reverse_step(model, z, t, z_lr, sched, none);
  }
  return z;
}

StepResult train_step(DenoiserModel& model, nn::Adam& opt, const Tensor& z_lr, const Tensor& z_hr,
                      const NoiseSchedule& sched, Rng& rng, double lr) {
  nn::require_same_shape(z_lr, z_hr, "latent pair");
  std::uniform_int_distribution<int> pick_t(1, sched.steps());
  std::vector<int> ts(static_cast<std::size_t>(z_hr.n()));
  for (int& t : ts) t = pick_t(rng);
  Tensor eps(z_hr.n(), z_hr.c(), z_hr.h(), z_hr.w());
  for (float& v : eps.values()) v = standard_normal(rng);

  const Tensor z_t = q_sample(z_hr, std::span<const int>(ts), eps, sched);
  opt.zero_grad();
  const Tensor pred = model.forward_train(z_t, ts, z_lr);
  nn::require_same_shape(pred, eps, "denoiser output");

  const auto p = pred.values();
  const auto e = eps.values();
  const double inv_n = 1.0 / static_cast<double>(p.size());
  double loss = 0.0;
  Tensor grad(pred.n(), pred.c(), pred.h(), pred.w());
  auto g = grad.values();
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double d = static_cast<double>(p[k]) - e[k];
    loss += std::abs(d);
    g[k] = static_cast<float>(d > 0 ? inv_n : (d < 0 ? -inv_n : 0.0));
  }
  loss *= inv_n;
  if (!std::isfinite(loss)) throw NumericalError("diffusion loss became non-finite");
  model.backward(grad);
  opt.step(lr);
  return {loss};
}

namespace {

Tensor crop_item(const Tensor& t, int y0, int x0, int size) {
  Tensor out(1, t.c(), size, size);
  for (int c = 0; c < t.c(); ++c)
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) out.at(0, c, y, x) = t.at(0, c, y0 + y, x0 + x);
  return out;
}

}  // namespace

DiffusionTrainReport train_diffusion(DenoiserModel& model, nn::Adam& opt, std::span<const LatentPair> pairs,
                                     const NoiseSchedule& sched, const DiffusionTrainOptions& options,
                                     int start_step, const DiffusionStepCallback& on_step) {
  if (pairs.empty()) throw ConfigError("stage 2 needs at least one latent pair");
  if (options.batch_size < 1) throw ConfigError("stage2.batch_size must be >= 1");
  const int h = pairs.front().hr.h();
  const int w = pairs.front().hr.w();
  for (const auto& p : pairs) {
    nn::require_same_shape(p.lr, p.hr, "latent pair");
    if (p.hr.h() != h || p.hr.w() != w || p.hr.n() != 1) throw ShapeError("latent pairs must share one shape");
  }
  const int crop = options.crop;
  if (crop < 0 || crop > std::min(h, w)) throw ConfigError("stage2.crop must be in [0, latent size]");

  DiffusionTrainReport report;
  for (int step = start_step; step < options.steps; ++step) {
    Rng rng = seed_stream(options.seed, "diffusion.batch", static_cast<std::uint64_t>(step));
    std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);
    std::vector<Tensor> lrs, hrs;
    for (int b = 0; b < options.batch_size; ++b) {
      const auto& pair = pairs[pick(rng)];
      if (crop == 0) {
        lrs.push_back(pair.lr);
        hrs.push_back(pair.hr);
      } else {
        std::uniform_int_distribution<int> oy(0, h - crop), ox(0, w - crop);
        const int y0 = oy(rng);
        const int x0 = ox(rng);
        lrs.push_back(crop_item(pair.lr, y0, x0, crop));
        hrs.push_back(crop_item(pair.hr, y0, x0, crop));
      }
    }
    const double lr = options.lr_final >= 0.0 ? nn::cosine_lr(options.lr, options.lr_final, step, options.steps)
                                              : options.lr;
    const StepResult r = train_step(model, opt, nn::concat_batch(lrs), nn::concat_batch(hrs), sched, rng, lr);
    report.loss_curve.push_back(r.loss);
    if (on_step) on_step(step, r.loss);
  }
  return report;
}

}  // namespace hsisr::diffusion
