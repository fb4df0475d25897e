#include "hsisr/gae/losses.hpp"

#include <cmath>

#include "hsisr/core/error.hpp"
#include "hsisr/gae/loss_kernels.hpp"

namespace hsisr::gae {

void LossConfig::validate() const {
  if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0) throw ConfigError("loss weights must be non-negative");
}

LossValue l1_loss(const nn::Tensor& re, const nn::Tensor& hr, bool with_grad) {
  nn::require_same_shape(re, hr, "loss_l1");
  LossValue out;
  if (with_grad) out.grad = nn::Tensor(re.n(), re.c(), re.h(), re.w());
  out.value = detail::l1_core<float>(re.values(), hr.values(), with_grad ? out.grad.values() : std::span<float>{});
  return out;
}

LossValue sam_loss(const nn::Tensor& re, const nn::Tensor& hr, bool with_grad) {
  nn::require_same_shape(re, hr, "loss_sam");
  LossValue out;
  if (with_grad) out.grad = nn::Tensor(re.n(), re.c(), re.h(), re.w());
  out.value = detail::sam_core<float>(re.values(), hr.values(), re.n(), re.c(), re.plane_size(),
                                      with_grad ? out.grad.values() : std::span<float>{});
  return out;
}

LossValue gradient_loss(const nn::Tensor& re, const nn::Tensor& hr, bool with_grad) {
  nn::require_same_shape(re, hr, "loss_gradient");
  LossValue out;
  if (with_grad) out.grad = nn::Tensor(re.n(), re.c(), re.h(), re.w());
  out.value = detail::gradient_core<float>(re.values(), hr.values(), re.n(), re.c(), re.h(), re.w(),
                                           with_grad ? out.grad.values() : std::span<float>{});
  return out;
}

std::vector<int> perceptual_windows(int bands) {
  if (bands < 3) throw ShapeError("perceptual loss needs at least 3 bands, got " + std::to_string(bands));
  std::vector<int> starts;
  const int count = (bands + 2) / 3;
  for (int k = 0; k < count; ++k) starts.push_back(k + 1 == count ? bands - 3 : 3 * k);
  return starts;
}

namespace {

nn::Tensor gather_windows(const nn::Tensor& x, const std::vector<int>& starts) {
  const int nw = static_cast<int>(starts.size());
  nn::Tensor out(x.n() * nw, 3, x.h(), x.w());
  for (int i = 0; i < x.n(); ++i)
    for (int k = 0; k < nw; ++k)
      for (int ch = 0; ch < 3; ++ch) {
        const auto src = x.plane(i, starts[k] + ch);
        std::copy(src.begin(), src.end(), out.plane(i * nw + k, ch).begin());
      }
  return out;
}

}  // namespace

LossValue perceptual_loss(const nn::Tensor& re, const nn::Tensor& hr, const FeatureExtractor& phi,
                          bool with_grad) {
  nn::require_same_shape(re, hr, "loss_perceptual");
  const auto starts = perceptual_windows(re.c());
  const nn::Tensor re_w = gather_windows(re, starts);
  const nn::Tensor hr_w = gather_windows(hr, starts);
  const nn::Tensor f_re = phi.features(re_w);
  const nn::Tensor f_hr = phi.features(hr_w);
  // Every window yields the same feature count, so the mean over windows of
  // per-window means is the global mean.
  LossValue feat = l1_loss(f_re, f_hr, with_grad);
  LossValue out;
  out.value = feat.value;
  if (with_grad) {
    const nn::Tensor d_windows = phi.backward(re_w, feat.grad);
    const int nw = static_cast<int>(starts.size());
    out.grad = nn::Tensor(re.n(), re.c(), re.h(), re.w());
    for (int i = 0; i < re.n(); ++i)
      for (int k = 0; k < nw; ++k)
        for (int ch = 0; ch < 3; ++ch) {
          const auto src = d_windows.plane(i * nw + k, ch);
          auto dst = out.grad.plane(i, starts[k] + ch);
          for (std::size_t p = 0; p < dst.size(); ++p) dst[p] += src[p];
        }
  }
  return out;
}

LossBreakdown total_loss(const nn::Tensor& re, const nn::Tensor& hr, const LossConfig& cfg,
                         const FeatureExtractor& phi, bool with_grad) {
  LossBreakdown out;
  LossValue l1 = l1_loss(re, hr, with_grad);
  out.l1 = l1.value;
  out.total = l1.value;
  if (with_grad) out.grad = std::move(l1.grad);
  auto accumulate = [&](const LossValue& term, double weight, double& slot) {
    slot = term.value;
    out.total += weight * term.value;
    if (with_grad && !term.grad.empty()) {
      auto g = out.grad.values();
      const auto t = term.grad.values();
      const float w = static_cast<float>(weight);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += w * t[i];
    }
  };
  // Terms with a zero weight are still reported so the breakdown stays comparable.
  accumulate(sam_loss(re, hr, with_grad && cfg.lambda1 != 0.0), cfg.lambda1, out.sam);
  accumulate(gradient_loss(re, hr, with_grad && cfg.lambda2 != 0.0), cfg.lambda2, out.gradient);
  if (re.c() >= 3) {
    accumulate(perceptual_loss(re, hr, phi, with_grad && cfg.lambda3 != 0.0), cfg.lambda3, out.perceptual);
  } else if (cfg.lambda3 != 0.0) {
    throw ShapeError("perceptual loss needs at least 3 bands");
  }
  return out;
}

double loss_l1(const Cube& re, const Cube& hr) {
  require_same_shape(re, hr, "loss_l1");
  return l1_loss(nn::from_cube(re), nn::from_cube(hr)).value;
}
double loss_sam(const Cube& re, const Cube& hr) {
  require_same_shape(re, hr, "loss_sam");
  return sam_loss(nn::from_cube(re), nn::from_cube(hr)).value;
}
double loss_gradient(const Cube& re, const Cube& hr) {
  require_same_shape(re, hr, "loss_gradient");
  return gradient_loss(nn::from_cube(re), nn::from_cube(hr)).value;
}
double loss_perceptual(const Cube& re, const Cube& hr, const FeatureExtractor& phi) {
  require_same_shape(re, hr, "loss_perceptual");
  return perceptual_loss(nn::from_cube(re), nn::from_cube(hr), phi).value;
}
double loss_total(const Cube& re, const Cube& hr, const LossConfig& cfg, const FeatureExtractor& phi) {
  require_same_shape(re, hr, "loss_total");
  return total_loss(nn::from_cube(re), nn::from_cube(hr), cfg, phi).total;
}

}  // namespace hsisr::gae
