#pragma once

// Scalar-type-generic cores of the reconstruction losses. The float
// instantiation backs training; the double one lets tests compare analytic
// gradients against finite differences without float round-off.
//
// Layout is NCHW with `items` images of `bands` x `height` x `width`.
// When `grad` is non-empty it receives dLoss/dre (overwritten).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

namespace hsisr::gae::detail {

inline constexpr double kSamEps = 1e-8;
inline constexpr double kPi = 3.14159265358979323846;

template <typename T>
double l1_core(std::span<const T> re, std::span<const T> hr, std::span<T> grad) {
  const std::size_t n = re.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += std::abs(static_cast<double>(re[i]) - hr[i]);
  if (!grad.empty()) {
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = static_cast<double>(re[i]) - hr[i];
      grad[i] = static_cast<T>(d > 0 ? inv : (d < 0 ? -inv : 0.0));
    }
  }
  return sum / static_cast<double>(n);
}

// Mean over pixels of arccos(<re,hr> / max(|re||hr|, eps)) / pi. Away from the
// floor the angle is evaluated as 2 atan2(|a/|a| - b/|b||, |a/|a| + b/|b||), which
// is exact for parallel spectra where arccos of a rounded cosine is not.
template <typename T>
double sam_core(std::span<const T> re, std::span<const T> hr, int items, int bands, std::size_t pixels,
                std::span<T> grad) {
  const std::size_t item_size = static_cast<std::size_t>(bands) * pixels;
  const double scale = 1.0 / (kPi * static_cast<double>(items) * static_cast<double>(pixels));
  double total = 0.0;
  for (int n = 0; n < items; ++n) {
    const T* a = re.data() + n * item_size;
    const T* b = hr.data() + n * item_size;
    T* g = grad.empty() ? nullptr : grad.data() + n * item_size;
    for (std::size_t p = 0; p < pixels; ++p) {
      double dot = 0.0, aa = 0.0, bb = 0.0;
      for (int c = 0; c < bands; ++c) {
        const double av = a[c * pixels + p];
        const double bv = b[c * pixels + p];
        dot += av * bv;
        aa += av * av;
        bb += bv * bv;
      }
      const double na = std::sqrt(aa);
      const double nb = std::sqrt(bb);
      const bool floored = na * nb < kSamEps;
      const double denom = floored ? kSamEps : na * nb;
      const double cosine = dot / denom;
      if (floored) {
        total += std::acos(std::clamp(cosine, -1.0, 1.0));
      } else {
        double diff = 0.0, sum = 0.0;
        for (int c = 0; c < bands; ++c) {
          const double u = a[c * pixels + p] / na;
          const double w = b[c * pixels + p] / nb;
          diff += (u - w) * (u - w);
          sum += (u + w) * (u + w);
        }
        total += 2.0 * std::atan2(std::sqrt(diff), std::sqrt(sum));
      }
      if (g) {
        // d acos(c)/da = -1/sqrt(1-c^2) * (b/denom - dot * a / (na^2 * denom))
        const bool interior = cosine > -1.0 && cosine < 1.0;
        const double outer = interior ? -scale / std::sqrt(1.0 - cosine * cosine) : 0.0;
        const double radial = floored ? 0.0 : dot / (na * na * denom);
        for (int c = 0; c < bands; ++c) {
          const double av = a[c * pixels + p];
          const double bv = b[c * pixels + p];
          g[c * pixels + p] = static_cast<T>(outer * (bv / denom - radial * av));
        }
      }
    }
  }
  return total * scale;
}

// Mean absolute difference of the forward differences along width, height and
// the spectral axis, pooled over all difference samples.
template <typename T>
double gradient_core(std::span<const T> re, std::span<const T> hr, int items, int bands, int height,
                     int width, std::span<T> grad) {
  const std::size_t plane = static_cast<std::size_t>(height) * width;
  const std::size_t item_size = static_cast<std::size_t>(bands) * plane;
  const double count = static_cast<double>(items) *
                       (static_cast<double>(bands) * height * (width - 1) +
                        static_cast<double>(bands) * (height - 1) * width +
                        static_cast<double>(bands - 1) * plane);
  if (!grad.empty()) std::fill(grad.begin(), grad.end(), T(0));
  if (count <= 0.0) return 0.0;
  const double inv = 1.0 / count;
  double sum = 0.0;
  auto term = [&](std::size_t hi, std::size_t lo) {
    const double d = (static_cast<double>(re[hi]) - re[lo]) - (static_cast<double>(hr[hi]) - hr[lo]);
    sum += std::abs(d);
    if (!grad.empty() && d != 0.0) {
      const double s = d > 0 ? inv : -inv;
      grad[hi] = static_cast<T>(grad[hi] + s);
      grad[lo] = static_cast<T>(grad[lo] - s);
    }
  };
  for (int n = 0; n < items; ++n) {
    const std::size_t base = n * item_size;
    for (int c = 0; c < bands; ++c) {
      for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
          const std::size_t i = base + c * plane + static_cast<std::size_t>(y) * width + x;
          if (x + 1 < width) term(i + 1, i);
          if (y + 1 < height) term(i + width, i);
          if (c + 1 < bands) term(i + plane, i);
        }
      }
    }
  }
  return sum * inv;
}

}  // namespace hsisr::gae::detail
