#include "hsisr/kernels/kernels.hpp"

#include <cstddef>

namespace hsisr::kernels::serial {

void gemm_nn(int m, int n, int k, std::span<const float> a, std::span<const float> b, std::span<float> c,
             bool accumulate) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = accumulate ? c[static_cast<std::size_t>(i) * n + j] : 0.0;
      for (int p = 0; p < k; ++p) {
        acc += static_cast<double>(a[static_cast<std::size_t>(i) * k + p]) * b[static_cast<std::size_t>(p) * n + j];
      }
      c[static_cast<std::size_t>(i) * n + j] = static_cast<float>(acc);
    }
  }
}

void gemm_nt(int m, int n, int k, std::span<const float> a, std::span<const float> b, std::span<float> c,
             bool accumulate) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = accumulate ? c[static_cast<std::size_t>(i) * n + j] : 0.0;
      for (int p = 0; p < k; ++p) {
        acc += static_cast<double>(a[static_cast<std::size_t>(i) * k + p]) * b[static_cast<std::size_t>(j) * k + p];
      }
      c[static_cast<std::size_t>(i) * n + j] = static_cast<float>(acc);
    }
  }
}

void conv2d_forward(const ConvShape& s, std::span<const float> x, std::span<const float> w,
                    std::span<const float> bias, std::span<float> y) {
  const int oh = s.out_h();
  const int ow = s.out_w();
  for (int co = 0; co < s.out_channels; ++co) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double acc = bias.empty() ? 0.0 : bias[co];
        for (int ci = 0; ci < s.in_channels; ++ci) {
          for (int ky = 0; ky < s.kernel; ++ky) {
            const int iy = oy * s.stride - s.pad + ky;
            if (iy < 0 || iy >= s.in_h) continue;
            for (int kx = 0; kx < s.kernel; ++kx) {
              const int ix = ox * s.stride - s.pad + kx;
              if (ix < 0 || ix >= s.in_w) continue;
              acc += static_cast<double>(w[((static_cast<std::size_t>(co) * s.in_channels + ci) * s.kernel + ky) * s.kernel + kx]) *
                     x[(static_cast<std::size_t>(ci) * s.in_h + iy) * s.in_w + ix];
            }
          }
        }
        y[(static_cast<std::size_t>(co) * oh + oy) * ow + ox] = static_cast<float>(acc);
      }
    }
  }
}

void conv2d_backward_input(const ConvShape& s, std::span<const float> dy, std::span<const float> w,
                           std::span<float> dx) {
  const int oh = s.out_h();
  const int ow = s.out_w();
  for (int ci = 0; ci < s.in_channels; ++ci) {
    for (int iy = 0; iy < s.in_h; ++iy) {
      for (int ix = 0; ix < s.in_w; ++ix) {
        double acc = 0.0;
        for (int co = 0; co < s.out_channels; ++co) {
          for (int ky = 0; ky < s.kernel; ++ky) {
            const int ty = iy + s.pad - ky;
            if (ty < 0 || ty % s.stride != 0 || ty / s.stride >= oh) continue;
            for (int kx = 0; kx < s.kernel; ++kx) {
              const int tx = ix + s.pad - kx;
              if (tx < 0 || tx % s.stride != 0 || tx / s.stride >= ow) continue;
              acc += static_cast<double>(w[((static_cast<std::size_t>(co) * s.in_channels + ci) * s.kernel + ky) * s.kernel + kx]) *
                     dy[(static_cast<std::size_t>(co) * oh + ty / s.stride) * ow + tx / s.stride];
            }
          }
        }
        dx[(static_cast<std::size_t>(ci) * s.in_h + iy) * s.in_w + ix] = static_cast<float>(acc);
      }
    }
  }
}

void conv2d_backward_weight(const ConvShape& s, std::span<const float> x, std::span<const float> dy,
                            std::span<float> dw, std::span<float> db) {
  const int oh = s.out_h();
  const int ow = s.out_w();
  for (int co = 0; co < s.out_channels; ++co) {
    if (!db.empty()) {
      double acc = 0.0;
      for (int p = 0; p < oh * ow; ++p) acc += dy[static_cast<std::size_t>(co) * oh * ow + p];
      db[co] += static_cast<float>(acc);
    }
    for (int ci = 0; ci < s.in_channels; ++ci) {
      for (int ky = 0; ky < s.kernel; ++ky) {
        for (int kx = 0; kx < s.kernel; ++kx) {
          double acc = 0.0;
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * s.stride - s.pad + ky;
            if (iy < 0 || iy >= s.in_h) continue;
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * s.stride - s.pad + kx;
              if (ix < 0 || ix >= s.in_w) continue;
              acc += static_cast<double>(dy[(static_cast<std::size_t>(co) * oh + oy) * ow + ox]) *
                     x[(static_cast<std::size_t>(ci) * s.in_h + iy) * s.in_w + ix];
            }
          }
          dw[((static_cast<std::size_t>(co) * s.in_channels + ci) * s.kernel + ky) * s.kernel + kx] += static_cast<float>(acc);
        }
      }
    }
  }
}

}  // namespace hsisr::kernels::serial
