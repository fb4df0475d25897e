#include "hsisr/metrics/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "hsisr/core/error.hpp"
#include "hsisr/core/resample.hpp"

namespace hsisr::metrics {

namespace {

constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;
constexpr int kRadius = 5;

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Same-size separable filtering with mirror padding.
std::vector<double> gaussian_filter(const std::vector<double>& img, int h, int w) {
  const auto win = ssim_window();
  std::vector<double> tmp(img.size()), out(img.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -kRadius; k <= kRadius; ++k) acc += win[k + kRadius] * img[y * w + reflect_index(x + k, w)];
      tmp[y * w + x] = acc;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -kRadius; k <= kRadius; ++k) acc += win[k + kRadius] * tmp[reflect_index(y + k, h) * w + x];
      out[y * w + x] = acc;
    }
  return out;
}

double ssim_band(std::span<const float> a, std::span<const float> b, int h, int w) {
  const std::size_t n = a.size();
  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = a[i];
    y[i] = b[i];
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = gaussian_filter(x, h, w);
  const auto my = gaussian_filter(y, h, w);
  const auto mxx = gaussian_filter(xx, h, w);
  const auto myy = gaussian_filter(yy, h, w);
  const auto mxy = gaussian_filter(xy, h, w);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double vx = mxx[i] - mx[i] * mx[i];
    const double vy = myy[i] - my[i] * my[i];
    const double cxy = mxy[i] - mx[i] * my[i];
    total += ((2.0 * mx[i] * my[i] + kC1) * (2.0 * cxy + kC2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + kC1) * (vx + vy + kC2));
  }
  return total / static_cast<double>(n);
}

}  // namespace

std::array<double, 11> ssim_window() {
  std::array<double, 11> w{};
  double sum = 0.0;
  for (int k = -kRadius; k <= kRadius; ++k) {
    w[k + kRadius] = std::exp(-(k * k) / (2.0 * 1.5 * 1.5));
    sum += w[k + kRadius];
  }
  for (double& v : w) v /= sum;
  return w;
}

std::vector<double> band_psnr(const Cube& ref, const Cube& cand) {
  require_same_shape(ref, cand, "metrics");
  std::vector<double> out(ref.bands());
#pragma omp parallel for
  for (int b = 0; b < ref.bands(); ++b) {
    const auto r = ref.band(b);
    const auto c = cand.band(b);
    double se = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double d = static_cast<double>(r[i]) - c[i];
      se += d * d;
    }
    const double mse = se / static_cast<double>(r.size());
    out[b] = mse == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(1.0 / mse);
  }
  return out;
}

double mpsnr(const Cube& ref, const Cube& cand) { return mean_of(band_psnr(ref, cand)); }

std::vector<double> band_ssim(const Cube& ref, const Cube& cand) {
  require_same_shape(ref, cand, "metrics");
  std::vector<double> out(ref.bands());
#pragma omp parallel for
  for (int b = 0; b < ref.bands(); ++b) out[b] = ssim_band(ref.band(b), cand.band(b), ref.height(), ref.width());
  return out;
}

double mssim(const Cube& ref, const Cube& cand) { return mean_of(band_ssim(ref, cand)); }

double sam_deg(const Cube& ref, const Cube& cand) {
  require_same_shape(ref, cand, "metrics");
  const int h = ref.height();
  const int w = ref.width();
  std::vector<double> rows(h);
#pragma omp parallel for
  for (int y = 0; y < h; ++y) {
    double acc = 0.0;
    for (int x = 0; x < w; ++x) {
      double dot = 0.0, na = 0.0, nb = 0.0;
      for (int b = 0; b < ref.bands(); ++b) {
        const double p = ref.at(y, x, b);
        const double q = cand.at(y, x, b);
        dot += p * q;
        na += p * p;
        nb += q * q;
      }
      if (na == 0.0 && nb == 0.0) continue;  // two zero spectra: angle 0
      const double la = std::sqrt(na), lb = std::sqrt(nb);
      if (la * lb < kEps) {
        acc += std::acos(std::clamp(dot / kEps, -1.0, 1.0));
        continue;
      }
      // Half-angle form: exact for parallel spectra, unlike arccos of a rounded cosine.
      double diff = 0.0, sum = 0.0;
      for (int b = 0; b < ref.bands(); ++b) {
        const double u = ref.at(y, x, b) / la;
        const double v = cand.at(y, x, b) / lb;
        diff += (u - v) * (u - v);
        sum += (u + v) * (u + v);
      }
      acc += 2.0 * std::atan2(std::sqrt(diff), std::sqrt(sum));
    }
    rows[y] = acc;
  }
  return mean_of(rows) / w * 180.0 / std::numbers::pi;
}

double cc(const Cube& ref, const Cube& cand) {
  require_same_shape(ref, cand, "metrics");
  std::vector<double> out(ref.bands());
  std::vector<char> degenerate(ref.bands(), 0);
#pragma omp parallel for
  for (int b = 0; b < ref.bands(); ++b) {
    const auto r = ref.band(b);
    const auto c = cand.band(b);
    const double n = static_cast<double>(r.size());
    double mr = 0.0, mc = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      mr += r[i];
      mc += c[i];
    }
    mr /= n;
    mc /= n;
    double srr = 0.0, scc = 0.0, src = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double p = r[i] - mr;
      const double q = c[i] - mc;
      srr += p * p;
      scc += q * q;
      src += p * q;
    }
    if (srr == 0.0 || scc == 0.0) {
      degenerate[b] = 1;
      continue;
    }
    out[b] = src / std::sqrt(srr * scc);
  }
  for (int b = 0; b < ref.bands(); ++b)
    if (degenerate[b]) throw Error("zero variance band " + std::to_string(b));
  return mean_of(out);
}

double rmse(const Cube& ref, const Cube& cand) {
  require_same_shape(ref, cand, "metrics");
  const auto r = ref.values();
  const auto c = cand.values();
  double se = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double d = static_cast<double>(r[i]) - c[i];
    se += d * d;
  }
  return std::sqrt(se / static_cast<double>(r.size()));
}

double ergas(const Cube& ref, const Cube& cand, int scale) {
  require_same_shape(ref, cand, "metrics");
  if (scale < 1) throw ConfigError("ergas: scale must be >= 1");
  std::vector<double> terms(ref.bands());
#pragma omp parallel for
  for (int b = 0; b < ref.bands(); ++b) {
    const auto r = ref.band(b);
    const auto c = cand.band(b);
    double se = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double d = static_cast<double>(r[i]) - c[i];
      se += d * d;
      mean += r[i];
    }
    const double n = static_cast<double>(r.size());
    const double ratio = std::sqrt(se / n) / std::max(mean / n, kEps);
    terms[b] = ratio * ratio;
  }
  return 100.0 / scale * std::sqrt(mean_of(terms));
}

MetricsReport evaluate(const Cube& ref, const Cube& cand, int scale) {
  MetricsReport r;
  r.mpsnr = mpsnr(ref, cand);
  r.mssim = mssim(ref, cand);
  r.sam = sam_deg(ref, cand);
  r.cc = cc(ref, cand);
  r.rmse = rmse(ref, cand);
  r.ergas = ergas(ref, cand, scale);
  r.scale = scale;
  return r;
}

std::string format_metric(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

namespace {

double parse_metric(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw IoError("bad metric value '" + s + "'");
  return v;
}

}  // namespace

std::string to_key_value(const MetricsReport& r) {
  std::ostringstream os;
  os << "mpsnr=" << format_metric(r.mpsnr) << "\n"
     << "mssim=" << format_metric(r.mssim) << "\n"
     << "sam=" << format_metric(r.sam) << "\n"
     << "cc=" << format_metric(r.cc) << "\n"
     << "rmse=" << format_metric(r.rmse) << "\n"
     << "ergas=" << format_metric(r.ergas) << "\n"
     << "scale=" << r.scale << "\n";
  return os.str();
}

MetricsReport parse_key_value(const std::string& text) {
  MetricsReport r;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError("bad metrics line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "mpsnr") r.mpsnr = parse_metric(val);
    else if (key == "mssim") r.mssim = parse_metric(val);
    else if (key == "sam") r.sam = parse_metric(val);
    else if (key == "cc") r.cc = parse_metric(val);
    else if (key == "rmse") r.rmse = parse_metric(val);
    else if (key == "ergas") r.ergas = parse_metric(val);
    else if (key == "scale") r.scale = std::stoi(val);
    else throw IoError("unknown metrics key '" + key + "'");
  }
  return r;
}

std::string csv_header() { return "label,mpsnr,mssim,sam,cc,rmse,ergas,scale"; }

std::string csv_row(const std::string& label, const MetricsReport& r) {
  return label + "," + format_metric(r.mpsnr) + "," + format_metric(r.mssim) + "," + format_metric(r.sam) + "," +
         format_metric(r.cc) + "," + format_metric(r.rmse) + "," + format_metric(r.ergas) + "," +
         std::to_string(r.scale);
}

std::string to_human(const MetricsReport& r) {
  char buf[256];
  auto psnr = std::isinf(r.mpsnr) ? std::string("inf") : [&] {
    char b[32];
    std::snprintf(b, sizeof b, "%.3f", r.mpsnr);
    return std::string(b);
  }();
  std::snprintf(buf, sizeof buf, "MPSNR↑ %s  MSSIM↑ %.4f  SAM↓ %.3f  CC↑ %.4f  RMSE↓ %.5f  ERGAS↓ %.3f  (x%d)",
                psnr.c_str(), r.mssim, r.sam, r.cc, r.rmse, r.ergas, r.scale);
  return buf;
}

std::vector<float> spectral_curve(const Cube& cube, int x, int y) {
  if (x < 0 || y < 0 || x >= cube.width() || y >= cube.height()) {
    throw ShapeError("pixel (" + std::to_string(x) + ", " + std::to_string(y) + ") outside " + shape_string(cube));
  }
  std::vector<float> out(cube.bands());
  for (int b = 0; b < cube.bands(); ++b) out[b] = cube.at(y, x, b);
  return out;
}

ErrorMap error_map(const Cube& ref, const Cube& cand, std::array<int, 3> bands) {
  require_same_shape(ref, cand, "error map");
  for (int b : bands)
    if (b < 0 || b >= ref.bands()) throw ShapeError("error map band " + std::to_string(b) + " out of range");
  ErrorMap m{ref.height(), ref.width(), std::vector<float>(static_cast<std::size_t>(ref.height()) * ref.width())};
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) {
      double acc = 0.0;
      for (int b : bands) acc += std::abs(static_cast<double>(ref.at(y, x, b)) - cand.at(y, x, b));
      m.values[static_cast<std::size_t>(y) * m.width + x] = static_cast<float>(acc / 3.0);
    }
  return m;
}

RgbImage render_error_map(const ErrorMap& map, float vmax) {
  if (vmax <= 0.0f) {
    vmax = 0.0f;
    for (float v : map.values) vmax = std::max(vmax, v);
  }
  RgbImage img{map.height, map.width, std::vector<std::uint8_t>(map.values.size() * 3)};
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    const auto rgb = error_colormap(map.values[i], vmax);
    std::copy(rgb.begin(), rgb.end(), img.pixels.begin() + 3 * i);
  }
  return img;
}

}  // namespace hsisr::metrics
