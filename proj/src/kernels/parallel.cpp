#include "hsisr/kernels/kernels.hpp"

#include <algorithm>
#include <cstddef>
#include <vector>

namespace hsisr::kernels::parallel {
namespace {

constexpr int kRowBlock = 4;
constexpr int kColBlock = 64;

// One kRowBlock x kColBlock tile of C = A * B; the accumulators stay in registers.
inline void tile_full(int n, int k, const float* a, const float* b, float* c, bool accumulate) {
  float acc[kRowBlock][kColBlock];
  if (accumulate) {
    for (int r = 0; r < kRowBlock; ++r)
      for (int j = 0; j < kColBlock; ++j) acc[r][j] = c[static_cast<std::size_t>(r) * n + j];
  } else {
    for (int r = 0; r < kRowBlock; ++r)
      for (int j = 0; j < kColBlock; ++j) acc[r][j] = 0.0f;
  }
  for (int p = 0; p < k; ++p) {
    const float* brow = b + static_cast<std::size_t>(p) * n;
    float av[kRowBlock];
    for (int r = 0; r < kRowBlock; ++r) av[r] = a[static_cast<std::size_t>(r) * k + p];
    for (int r = 0; r < kRowBlock; ++r) {
#pragma omp simd
      for (int j = 0; j < kColBlock; ++j) acc[r][j] += av[r] * brow[j];
    }
  }
  for (int r = 0; r < kRowBlock; ++r)
    for (int j = 0; j < kColBlock; ++j) c[static_cast<std::size_t>(r) * n + j] = acc[r][j];
}

inline void tile_edge(int rows, int cols, int n, int k, const float* a, const float* b, float* c,
                      bool accumulate) {
  for (int r = 0; r < rows; ++r) {
    float* crow = c + static_cast<std::size_t>(r) * n;
    if (!accumulate)
      for (int j = 0; j < cols; ++j) crow[j] = 0.0f;
    for (int p = 0; p < k; ++p) {
      const float av = a[static_cast<std::size_t>(r) * k + p];
      const float* brow = b + static_cast<std::size_t>(p) * n;
#pragma omp simd
      for (int j = 0; j < cols; ++j) crow[j] += av * brow[j];
    }
  }
}

void transpose(int rows, int cols, const float* src, float* dst) {
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) dst[static_cast<std::size_t>(c) * rows + r] = src[static_cast<std::size_t>(r) * cols + c];
}

void im2col(const ConvShape& s, const float* x, float* col) {
  const int oh = s.out_h();
  const int ow = s.out_w();
  const int kk = s.kernel * s.kernel;
#pragma omp parallel for schedule(static)
  for (int row = 0; row < s.patch(); ++row) {
    const int ci = row / kk;
    const int ky = (row % kk) / s.kernel;
    const int kx = row % s.kernel;
    float* dst = col + static_cast<std::size_t>(row) * oh * ow;
    const float* plane = x + static_cast<std::size_t>(ci) * s.in_h * s.in_w;
    for (int oy = 0; oy < oh; ++oy) {
      const int iy = oy * s.stride - s.pad + ky;
      float* drow = dst + static_cast<std::size_t>(oy) * ow;
      if (iy < 0 || iy >= s.in_h) {
        std::fill(drow, drow + ow, 0.0f);
        continue;
      }
      const float* srow = plane + static_cast<std::size_t>(iy) * s.in_w;
      for (int ox = 0; ox < ow; ++ox) {
        const int ix = ox * s.stride - s.pad + kx;
        drow[ox] = (ix >= 0 && ix < s.in_w) ? srow[ix] : 0.0f;
      }
    }
  }
}

// Inverse scatter of im2col; each input channel is owned by one thread.
void col2im(const ConvShape& s, const float* col, float* dx) {
  const int oh = s.out_h();
  const int ow = s.out_w();
#pragma omp parallel for schedule(static)
  for (int ci = 0; ci < s.in_channels; ++ci) {
    float* plane = dx + static_cast<std::size_t>(ci) * s.in_h * s.in_w;
    std::fill(plane, plane + static_cast<std::size_t>(s.in_h) * s.in_w, 0.0f);
    for (int ky = 0; ky < s.kernel; ++ky) {
      for (int kx = 0; kx < s.kernel; ++kx) {
        const int row = (ci * s.kernel + ky) * s.kernel + kx;
        const float* src = col + static_cast<std::size_t>(row) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * s.stride - s.pad + ky;
          if (iy < 0 || iy >= s.in_h) continue;
          float* drow = plane + static_cast<std::size_t>(iy) * s.in_w;
          const float* srow = src + static_cast<std::size_t>(oy) * ow;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * s.stride - s.pad + kx;
            if (ix >= 0 && ix < s.in_w) drow[ix] += srow[ox];
          }
        }
      }
    }
  }
}

bool is_pointwise(const ConvShape& s) { return s.kernel == 1 && s.stride == 1 && s.pad == 0; }

}  // namespace

void gemm_nn(int m, int n, int k, std::span<const float> a, std::span<const float> b, std::span<float> c,
             bool accumulate) {
  const int row_tiles = (m + kRowBlock - 1) / kRowBlock;
  const int col_tiles = (n + kColBlock - 1) / kColBlock;
#pragma omp parallel for collapse(2) schedule(static)
  for (int ti = 0; ti < row_tiles; ++ti) {
    for (int tj = 0; tj < col_tiles; ++tj) {
      const int i0 = ti * kRowBlock;
      const int j0 = tj * kColBlock;
      const int rows = std::min(kRowBlock, m - i0);
      const int cols = std::min(kColBlock, n - j0);
      const float* ap = a.data() + static_cast<std::size_t>(i0) * k;
      const float* bp = b.data() + j0;
      float* cp = c.data() + static_cast<std::size_t>(i0) * n + j0;
      if (rows == kRowBlock && cols == kColBlock) {
        tile_full(n, k, ap, bp, cp, accumulate);
      } else {
        tile_edge(rows, cols, n, k, ap, bp, cp, accumulate);
      }
    }
  }
}

void gemm_nt(int m, int n, int k, std::span<const float> a, std::span<const float> b, std::span<float> c,
             bool accumulate) {
  std::vector<float> bt(static_cast<std::size_t>(k) * n);
  transpose(n, k, b.data(), bt.data());
  gemm_nn(m, n, k, a, bt, c, accumulate);
}

void conv2d_forward(const ConvShape& s, std::span<const float> x, std::span<const float> w,
                    std::span<const float> bias, std::span<float> y) {
  const int pixels = s.out_h() * s.out_w();
  std::vector<float> col;
  std::span<const float> cols = x;
  if (!is_pointwise(s)) {
    col.resize(static_cast<std::size_t>(s.patch()) * pixels);
    im2col(s, x.data(), col.data());
    cols = col;
  }
  if (!bias.empty()) {
#pragma omp parallel for schedule(static)
    for (int co = 0; co < s.out_channels; ++co)
      std::fill_n(y.data() + static_cast<std::size_t>(co) * pixels, pixels, bias[co]);
  }
  gemm_nn(s.out_channels, pixels, s.patch(), w, cols, y, !bias.empty());
}

void conv2d_backward_input(const ConvShape& s, std::span<const float> dy, std::span<const float> w,
                           std::span<float> dx) {
  const int pixels = s.out_h() * s.out_w();
  std::vector<float> wt(static_cast<std::size_t>(s.patch()) * s.out_channels);
  transpose(s.out_channels, s.patch(), w.data(), wt.data());
  if (is_pointwise(s)) {
    gemm_nn(s.patch(), pixels, s.out_channels, wt, dy, dx, false);
    return;
  }
  std::vector<float> col(static_cast<std::size_t>(s.patch()) * pixels);
  gemm_nn(s.patch(), pixels, s.out_channels, wt, dy, col, false);
  col2im(s, col.data(), dx.data());
}

void conv2d_backward_weight(const ConvShape& s, std::span<const float> x, std::span<const float> dy,
                            std::span<float> dw, std::span<float> db) {
  const int pixels = s.out_h() * s.out_w();
  std::vector<float> col;
  std::span<const float> cols = x;
  if (!is_pointwise(s)) {
    col.resize(static_cast<std::size_t>(s.patch()) * pixels);
    im2col(s, x.data(), col.data());
    cols = col;
  }
  gemm_nt(s.out_channels, s.patch(), pixels, dy, cols, dw, true);
  if (!db.empty()) {
#pragma omp parallel for schedule(static)
    for (int co = 0; co < s.out_channels; ++co) {
      const float* row = dy.data() + static_cast<std::size_t>(co) * pixels;
      float acc = 0.0f;
      for (int p = 0; p < pixels; ++p) acc += row[p];
      db[co] += acc;
    }
  }
}

}  // namespace hsisr::kernels::parallel
