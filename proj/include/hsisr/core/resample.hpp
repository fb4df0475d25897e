#pragma once

#include <vector>

#include "hsisr/core/cube.hpp"

namespace hsisr {

// Cubic convolution kernel (Keys, a = -0.5).
double cubic_kernel(double x);

// Maps an index outside [0, n) back inside by mirror reflection including the
// edge sample (... 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...).
int reflect_index(int i, int n);

// Sparse row of a 1-D resampling operator: output sample i is
// sum_k weights[k] * input[first + k] (indices before reflection).
struct ResampleTaps {
  int first = 0;
  std::vector<double> weights;
};

// Pixel-centre aligned bicubic taps for resizing n_in samples to n_out.
// When shrinking, the kernel is stretched by the scale (antialiasing).
// Weights of each row are normalized to sum to one.
std::vector<ResampleTaps> bicubic_taps(int n_in, int n_out);

Cube resize_bicubic(const Cube& cube, int out_height, int out_width);

// Band-wise bicubic downsampling by an integer factor in {2,3,4}.
ImagePair degrade(const Cube& hr, int scale);
Cube upsample_bicubic(const Cube& lr, int scale);

void require_scale(int scale);

}  // namespace hsisr
