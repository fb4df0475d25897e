#include "hsisr/core/resample.hpp"

#include <cmath>
#include <string>

#include "hsisr/core/error.hpp"

namespace hsisr {

double cubic_kernel(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

std::vector<ResampleTaps> bicubic_taps(int n_in, int n_out) {
  if (n_in <= 0 || n_out <= 0) throw ShapeError("bicubic_taps: sizes must be positive");
  const double scale = static_cast<double>(n_in) / n_out;
  const double stretch = scale > 1.0 ? scale : 1.0;
  const double support = 2.0 * stretch;
  std::vector<ResampleTaps> taps(n_out);
  for (int i = 0; i < n_out; ++i) {
    const double centre = (i + 0.5) * scale - 0.5;
    const int first = static_cast<int>(std::floor(centre - support)) + 1;
    const int last = static_cast<int>(std::ceil(centre + support)) - 1;
    ResampleTaps& row = taps[i];
    row.first = first;
    row.weights.resize(last - first + 1);
    double sum = 0.0;
    for (int j = first; j <= last; ++j) {
      const double wgt = cubic_kernel((centre - j) / stretch);
      row.weights[j - first] = wgt;
      sum += wgt;
    }
    for (double& wgt : row.weights) wgt /= sum;
  }
  return taps;
}

Cube resize_bicubic(const Cube& cube, int out_height, int out_width) {
  const auto row_taps = bicubic_taps(cube.height(), out_height);
  const auto col_taps = bicubic_taps(cube.width(), out_width);
  const int h = cube.height();
  const int w = cube.width();
  Cube out(out_height, out_width, cube.bands());
  out.meta = cube.meta;

#pragma omp parallel for schedule(static)
  for (int b = 0; b < cube.bands(); ++b) {
    const auto src = cube.band(b);
    // Horizontal pass into an h x out_width buffer, then vertical pass.
    std::vector<double> tmp(static_cast<std::size_t>(h) * out_width);
    for (int y = 0; y < h; ++y) {
      const float* row = src.data() + static_cast<std::size_t>(y) * w;
      for (int x = 0; x < out_width; ++x) {
        const ResampleTaps& t = col_taps[x];
        double acc = 0.0;
        for (std::size_t k = 0; k < t.weights.size(); ++k) {
          acc += t.weights[k] * row[reflect_index(t.first + static_cast<int>(k), w)];
        }
        tmp[static_cast<std::size_t>(y) * out_width + x] = acc;
      }
    }
    auto dst = out.band(b);
    for (int y = 0; y < out_height; ++y) {
      const ResampleTaps& t = row_taps[y];
      float* orow = dst.data() + static_cast<std::size_t>(y) * out_width;
      std::vector<double> acc(out_width, 0.0);
      for (std::size_t k = 0; k < t.weights.size(); ++k) {
        const double wgt = t.weights[k];
        const double* trow = tmp.data() +
                             static_cast<std::size_t>(reflect_index(t.first + static_cast<int>(k), h)) * out_width;
        for (int x = 0; x < out_width; ++x) acc[x] += wgt * trow[x];
      }
      for (int x = 0; x < out_width; ++x) orow[x] = static_cast<float>(acc[x]);
    }
  }
  return out;
}

void require_scale(int scale) {
  if (scale < 2 || scale > 4) {
    throw ConfigError("scale must be 2, 3 or 4, got " + std::to_string(scale));
  }
}

ImagePair degrade(const Cube& hr, int scale) {
  require_scale(scale);
  if (hr.height() % scale != 0 || hr.width() % scale != 0) {
    throw ShapeError("degrade: " + shape_string(hr) + " not divisible by scale " + std::to_string(scale));
  }
  ImagePair pair;
  pair.hr = hr;
  pair.lr = resize_bicubic(hr, hr.height() / scale, hr.width() / scale);
  pair.scale = scale;
  return pair;
}

Cube upsample_bicubic(const Cube& lr, int scale) {
  require_scale(scale);
  return resize_bicubic(lr, lr.height() * scale, lr.width() * scale);
}

}  // namespace hsisr
