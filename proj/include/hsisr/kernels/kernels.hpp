#pragma once

#include <span>

// Dense compute kernels behind the convolutional layers.
//
// Two implementations share one interface:
//   serial::   direct loop nests, the reference kept for testing;
//   parallel:: im2col + register-blocked GEMM, OpenMP-parallel over output tiles.
// Tensors are single images in CHW order; weights are [out][in][k][k].

namespace hsisr::kernels {

struct ConvShape {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  int stride = 1;
  int pad = 1;
  int in_h = 0;
  int in_w = 0;

  int out_h() const { return (in_h + 2 * pad - kernel) / stride + 1; }
  int out_w() const { return (in_w + 2 * pad - kernel) / stride + 1; }
  int patch() const { return in_channels * kernel * kernel; }
};

namespace serial {

// C[m,n] = A[m,k] * B[k,n], added to C when accumulate is set.
void gemm_nn(int m, int n, int k, std::span<const float> a, std::span<const float> b, std::span<float> c,
             bool accumulate);
// C[m,n] = A[m,k] * B[n,k]^T
void gemm_nt(int m, int n, int k, std::span<const float> a, std::span<const float> b, std::span<float> c,
             bool accumulate);

void conv2d_forward(const ConvShape& s, std::span<const float> x, std::span<const float> w,
                    std::span<const float> bias, std::span<float> y);
// Overwrites dx.
void conv2d_backward_input(const ConvShape& s, std::span<const float> dy, std::span<const float> w,
                           std::span<float> dx);
// Accumulates into dw and db.
void conv2d_backward_weight(const ConvShape& s, std::span<const float> x, std::span<const float> dy,
                            std::span<float> dw, std::span<float> db);

}  // namespace serial

namespace parallel {

void gemm_nn(int m, int n, int k, std::span<const float> a, std::span<const float> b, std::span<float> c,
             bool accumulate);
void gemm_nt(int m, int n, int k, std::span<const float> a, std::span<const float> b, std::span<float> c,
             bool accumulate);

void conv2d_forward(const ConvShape& s, std::span<const float> x, std::span<const float> w,
                    std::span<const float> bias, std::span<float> y);
void conv2d_backward_input(const ConvShape& s, std::span<const float> dy, std::span<const float> w,
                           std::span<float> dx);
void conv2d_backward_weight(const ConvShape& s, std::span<const float> x, std::span<const float> dy,
                            std::span<float> dw, std::span<float> db);

}  // namespace parallel

}  // namespace hsisr::kernels
