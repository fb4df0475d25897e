#include "hsisr/pipeline/super_resolve.hpp"

#include <exception>

#include "hsisr/core/error.hpp"
#include "hsisr/core/resample.hpp"
#include "hsisr/core/rng.hpp"
#include "hsisr/diffusion/sampler.hpp"

namespace hsisr::pipeline {

std::uint64_t element_seed(std::uint64_t seed, int element) {
  return splitmix64(seed ^ fnv1a64("infer.element")) + static_cast<std::uint64_t>(element) * 0x9e3779b97f4a7c15ULL;
}

Cube super_resolve(const LatentCodec& codec, const diffusion::NoisePredictor& model,
                   const diffusion::NoiseSchedule& sched, const Cube& lr, int scale, std::uint64_t seed) {
  const Cube up = upsample_bicubic(lr, scale);
  const std::vector<nn::Tensor> z_lr = codec.encode(up);
  std::vector<nn::Tensor> z_sr(z_lr.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < static_cast<int>(z_lr.size()); ++i) {
    try {
      z_sr[i] = diffusion::reverse_sample(model, z_lr[i], sched, element_seed(seed, i));
    } catch (...) {
#pragma omp critical
      failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  for (const auto& z : z_sr)
    if (!nn::all_finite(z)) throw NumericalError("reverse sampling produced non-finite latents");
  Cube sr = codec.decode(z_sr);
  sr.meta = lr.meta;
  return sr;
}

std::vector<TracingPredictor::Call> TracingPredictor::trace() const {
  std::lock_guard lock(mu_);
  return calls_;
}

nn::Tensor TracingPredictor::do_predict(const nn::Tensor& z_t, std::span<const int> t, const nn::Tensor& z_lr) const {
  {
    std::lock_guard lock(mu_);
    for (int i = 0; i < z_t.n(); ++i) calls_.push_back({t[i], z_lr.item(i)[0]});
  }
  return inner_.predict(z_t, t, z_lr);
}

}  // namespace hsisr::pipeline
