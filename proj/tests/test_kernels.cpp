#include <doctest.h>

#include <random>
#include <vector>

#include "hsisr/kernels/kernels.hpp"

using namespace hsisr::kernels;

namespace {

std::vector<float> random_vec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (float& x : v) x = u(rng);
  return v;
}

// Convolution written straight from its definition, accumulated in double.
std::vector<double> conv_oracle(const ConvShape& s, const std::vector<float>& x, const std::vector<float>& w,
                                const std::vector<float>& bias) {
  const int oh = s.out_h(), ow = s.out_w(), k = s.kernel;
  std::vector<double> y(std::size_t(s.out_channels) * oh * ow);
  for (int o = 0; o < s.out_channels; ++o)
    for (int yy = 0; yy < oh; ++yy)
      for (int xx = 0; xx < ow; ++xx) {
        double acc = bias.empty() ? 0.0 : bias[o];
        for (int i = 0; i < s.in_channels; ++i)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              const int iy = yy * s.stride - s.pad + ky;
              const int ix = xx * s.stride - s.pad + kx;
              if (iy < 0 || ix < 0 || iy >= s.in_h || ix >= s.in_w) continue;
              acc += double(w[((std::size_t(o) * s.in_channels + i) * k + ky) * k + kx]) *
                     x[(std::size_t(i) * s.in_h + iy) * s.in_w + ix];
            }
        y[(std::size_t(o) * oh + yy) * ow + xx] = acc;
      }
  return y;
}

double dot(const std::vector<float>& a, const std::vector<float>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += double(a[i]) * b[i];
  return s;
}

const ConvShape kShapes[] = {
    {3, 5, 3, 1, 1, 7, 9},  {4, 4, 3, 2, 1, 8, 8},   {2, 3, 1, 1, 0, 5, 6},
    {6, 2, 3, 2, 1, 9, 7},  {16, 33, 3, 1, 1, 12, 11}, {8, 70, 3, 1, 1, 6, 5},
};

}  // namespace

TEST_CASE("gemm variants agree with a triple loop") {
  for (auto [m, n, k] : {std::array{1, 1, 1}, std::array{4, 64, 9}, std::array{5, 67, 13}, std::array{9, 130, 31},
                         std::array{3, 200, 1}, std::array{17, 5, 40}}) {
    const auto a = random_vec(std::size_t(m) * k, 1);
    const auto b = random_vec(std::size_t(k) * n, 2);
    const auto bt = random_vec(std::size_t(n) * k, 3);
    const auto c0 = random_vec(std::size_t(m) * n, 4);
    for (bool acc : {false, true}) {
      std::vector<double> nn(std::size_t(m) * n), nt(std::size_t(m) * n);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
          double s1 = acc ? c0[i * n + j] : 0.0, s2 = s1;
          for (int p = 0; p < k; ++p) {
            s1 += double(a[i * k + p]) * b[p * n + j];
            s2 += double(a[i * k + p]) * bt[j * k + p];
          }
          nn[i * n + j] = s1;
          nt[i * n + j] = s2;
        }
      for (int impl = 0; impl < 2; ++impl) {
        auto c1 = c0, c2 = c0;
        if (impl == 0) {
          serial::gemm_nn(m, n, k, a, b, c1, acc);
          serial::gemm_nt(m, n, k, a, bt, c2, acc);
        } else {
          parallel::gemm_nn(m, n, k, a, b, c1, acc);
          parallel::gemm_nt(m, n, k, a, bt, c2, acc);
        }
        for (std::size_t i = 0; i < c1.size(); ++i) {
          CHECK(c1[i] == doctest::Approx(nn[i]).epsilon(1e-5).scale(1.0));
          CHECK(c2[i] == doctest::Approx(nt[i]).epsilon(1e-5).scale(1.0));
        }
      }
    }
  }
}

TEST_CASE("conv forward: serial and parallel match the definition") {
  for (const auto& s : kShapes) {
    const auto x = random_vec(std::size_t(s.in_channels) * s.in_h * s.in_w, 5);
    const auto w = random_vec(std::size_t(s.out_channels) * s.patch(), 6);
    const auto bias = random_vec(s.out_channels, 7);
    const auto expect = conv_oracle(s, x, w, bias);
    std::vector<float> y1(expect.size()), y2(expect.size());
    serial::conv2d_forward(s, x, w, bias, y1);
    parallel::conv2d_forward(s, x, w, bias, y2);
    for (std::size_t i = 0; i < expect.size(); ++i) {
      CHECK(y1[i] == doctest::Approx(expect[i]).epsilon(1e-5).scale(1.0));
      CHECK(y2[i] == doctest::Approx(expect[i]).epsilon(1e-5).scale(1.0));
    }
  }
}

TEST_CASE("conv backward passes are the adjoints of the forward pass") {
  for (const auto& s : kShapes) {
    const auto x = random_vec(std::size_t(s.in_channels) * s.in_h * s.in_w, 8);
    const auto w = random_vec(std::size_t(s.out_channels) * s.patch(), 9);
    const auto dy = random_vec(std::size_t(s.out_channels) * s.out_h() * s.out_w(), 10);
    std::vector<float> y(dy.size());
    serial::conv2d_forward(s, x, w, {}, y);
    const double lhs = dot(y, dy);  // <conv(x; w), dy>

    for (int impl = 0; impl < 2; ++impl) {
      std::vector<float> dx(x.size(), 123.0f), dw(w.size(), 0.0f), db(s.out_channels, 0.0f);
      if (impl == 0) {
        serial::conv2d_backward_input(s, dy, w, dx);
        serial::conv2d_backward_weight(s, x, dy, dw, db);
      } else {
        parallel::conv2d_backward_input(s, dy, w, dx);
        parallel::conv2d_backward_weight(s, x, dy, dw, db);
      }
      CHECK(dot(x, dx) == doctest::Approx(lhs).epsilon(1e-4));
      CHECK(dot(w, dw) == doctest::Approx(lhs).epsilon(1e-4));
      const int plane = s.out_h() * s.out_w();
      for (int o = 0; o < s.out_channels; ++o) {
        double sum = 0;
        for (int i = 0; i < plane; ++i) sum += dy[std::size_t(o) * plane + i];
        CHECK(db[o] == doctest::Approx(sum).epsilon(1e-4).scale(1.0));
      }
    }
  }
}

TEST_CASE("parallel backward matches serial elementwise and accumulates") {
  const ConvShape s{5, 7, 3, 2, 1, 10, 9};
  const auto x = random_vec(std::size_t(s.in_channels) * s.in_h * s.in_w, 11);
  const auto w = random_vec(std::size_t(s.out_channels) * s.patch(), 12);
  const auto dy = random_vec(std::size_t(s.out_channels) * s.out_h() * s.out_w(), 13);
  std::vector<float> dx1(x.size()), dx2(x.size());
  serial::conv2d_backward_input(s, dy, w, dx1);
  parallel::conv2d_backward_input(s, dy, w, dx2);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(dx2[i] == doctest::Approx(dx1[i]).epsilon(1e-5).scale(1.0));

  std::vector<float> dw1(w.size(), 0.5f), dw2(w.size(), 0.5f), db1(s.out_channels, 1.0f), db2(s.out_channels, 1.0f);
  serial::conv2d_backward_weight(s, x, dy, dw1, db1);
  parallel::conv2d_backward_weight(s, x, dy, dw2, db2);
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(dw2[i] == doctest::Approx(dw1[i]).epsilon(1e-5).scale(1.0));
  for (int o = 0; o < s.out_channels; ++o) CHECK(db2[o] == doctest::Approx(db1[o]).epsilon(1e-5).scale(1.0));
  // Accumulation: a second pass doubles the gradient increment.
  std::vector<float> dw3(w.size(), 0.0f), db3(s.out_channels, 0.0f);
  parallel::conv2d_backward_weight(s, x, dy, dw3, db3);
  parallel::conv2d_backward_weight(s, x, dy, dw3, db3);
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(dw3[i] == doctest::Approx(2.0 * (dw1[i] - 0.5)).epsilon(1e-4).scale(1.0));
}
