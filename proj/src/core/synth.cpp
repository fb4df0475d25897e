#include "hsisr/core/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "hsisr/core/error.hpp"
#include "hsisr/core/rng.hpp"

namespace hsisr {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr int kFields = 4;
constexpr int kWavesPerField = 4;

double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

struct Wave {
  double fy, fx, phase, amplitude;
};

}  // namespace

Cube synth_cube(int height, int width, int bands, std::uint64_t seed) {
  if (height < 1 || width < 1 || bands < 1) throw ShapeError("synth_cube: dimensions must be positive");
  Rng rng = seed_stream(seed, "synth_cube");

  // Spatial fields: field 0 is a slowly varying background, the others carry
  // progressively finer detail (up to ~0.2 cycles per pixel).
  std::vector<std::vector<Wave>> fields(kFields);
  for (int k = 0; k < kFields; ++k) {
    const double fmax = 0.04 + 0.05 * k;
    for (int j = 0; j < kWavesPerField; ++j) {
      const double freq = uniform(rng, 0.3 * fmax, fmax);
      const double angle = uniform(rng, 0.0, kTwoPi);
      fields[k].push_back(Wave{freq * std::sin(angle), freq * std::cos(angle),
                               uniform(rng, 0.0, kTwoPi), uniform(rng, 0.5, 1.0)});
    }
  }
  // Smooth spectral signatures: broad Gaussian envelopes over the band axis.
  std::vector<std::vector<double>> signature(kFields, std::vector<double>(bands));
  for (int k = 0; k < kFields; ++k) {
    const double centre = uniform(rng, -0.2, 1.2) * bands;
    const double width_b = uniform(rng, 0.5, 0.9) * bands;
    const double gain = uniform(rng, 0.6, 1.0) / (1.0 + 0.4 * k);
    for (int b = 0; b < bands; ++b) {
      const double d = (b - centre) / width_b;
      signature[k][b] = gain * std::exp(-0.5 * d * d);
    }
  }
  std::vector<double> baseline(bands);
  const double tilt = uniform(rng, -0.5, 0.5);
  for (int b = 0; b < bands; ++b) baseline[b] = 1.0 + tilt * (bands > 1 ? double(b) / (bands - 1) : 0.0);

  Cube cube(height, width, bands);
  std::vector<double> field_values(kFields);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int k = 0; k < kFields; ++k) {
        double v = 0.0;
        for (const Wave& wave : fields[k]) {
          v += wave.amplitude * std::sin(kTwoPi * (wave.fy * y + wave.fx * x) + wave.phase);
        }
        field_values[k] = v / kWavesPerField;
      }
      for (int b = 0; b < bands; ++b) {
        double v = baseline[b];
        for (int k = 0; k < kFields; ++k) v += signature[k][b] * field_values[k];
        cube.at(y, x, b) = static_cast<float>(v);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  const double range = hi > lo ? hi - lo : 1.0;
  for (float& v : cube.values()) v = static_cast<float>((v - lo) / range);
  cube.meta["synthetic_seed"] = std::to_string(seed);
  return cube;
}

}  // namespace hsisr
