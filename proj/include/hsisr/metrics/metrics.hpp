#pragma once

#include <array>
#include <string>
#include <vector>

#include "hsisr/core/cube.hpp"
#include "hsisr/core/png.hpp"

namespace hsisr::metrics {

// Guard for divisions by spectral norms and band means.
inline constexpr double kEps = 1e-8;

// Inputs are assumed normalized to [0, 1]; the PSNR peak is 1.
double mpsnr(const Cube& ref, const Cube& cand);  // +inf when every band matches exactly
double mssim(const Cube& ref, const Cube& cand);
double sam_deg(const Cube& ref, const Cube& cand);
double cc(const Cube& ref, const Cube& cand);  // throws Error("zero variance band")
double rmse(const Cube& ref, const Cube& cand);
double ergas(const Cube& ref, const Cube& cand, int scale);

// Per-band pieces, exposed for tests and reports.
std::vector<double> band_psnr(const Cube& ref, const Cube& cand);
std::vector<double> band_ssim(const Cube& ref, const Cube& cand);
// Normalized 11x11 Gaussian window with sigma 1.5 as a separable 1-D kernel.
std::array<double, 11> ssim_window();

struct MetricsReport {
  double mpsnr = 0.0;
  double mssim = 0.0;
  double sam = 0.0;
  double cc = 0.0;
  double rmse = 0.0;
  double ergas = 0.0;
  int scale = 1;
};

MetricsReport evaluate(const Cube& ref, const Cube& cand, int scale);

// "inf" for +infinity, otherwise shortest round-trippable decimal.
std::string format_metric(double value);
// key=value lines.
std::string to_key_value(const MetricsReport& report);
MetricsReport parse_key_value(const std::string& text);
std::string csv_header();
std::string csv_row(const std::string& label, const MetricsReport& report);
// One-line summary with the usual up/down arrows.
std::string to_human(const MetricsReport& report);

std::vector<float> spectral_curve(const Cube& cube, int x, int y);

struct ErrorMap {
  int height = 0;
  int width = 0;
  std::vector<float> values;  // per-pixel mean |ref - cand| over the band triplet
};

ErrorMap error_map(const Cube& ref, const Cube& cand, std::array<int, 3> bands);
// Rendered with error_colormap; vmax <= 0 uses the map maximum.
RgbImage render_error_map(const ErrorMap& map, float vmax = 0.0f);

}  // namespace hsisr::metrics
