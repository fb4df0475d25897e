#include "hsisr/core/patches.hpp"

#include <string>

#include "hsisr/core/error.hpp"
#include "hsisr/core/resample.hpp"

namespace hsisr {

int patch_positions(int n, int patch, int stride) {
  if (patch > n) return 0;
  return (n - patch) / stride + 1;
}

Cube dihedral(const Cube& cube, int which) {
  if (cube.height() != cube.width()) throw ShapeError("dihedral: cube must be square");
  const int n = cube.height();
  Cube out(n, n, cube.bands());
  out.meta = cube.meta;
  for (int b = 0; b < cube.bands(); ++b) {
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        int sy = y;
        int sx = which >= 4 ? n - 1 - x : x;
        for (int r = 0; r < which % 4; ++r) {
          const int ty = sx;
          sx = n - 1 - sy;
          sy = ty;
        }
        out.at(y, x, b) = cube.at(sy, sx, b);
      }
    }
  }
  return out;
}

std::vector<ImagePair> extract_patches(const ImagePair& pair, const PatchSpec& spec) {
  const int s = pair.scale;
  const int p = spec.patch_size;
  if (spec.stride < 1) throw ConfigError("extract_patches: stride must be >= 1");
  if (p < s || p % s != 0) {
    throw ConfigError("extract_patches: patch size " + std::to_string(p) + " not a multiple of scale " +
                      std::to_string(s));
  }
  if (spec.stride % s != 0) {
    throw ConfigError("extract_patches: stride " + std::to_string(spec.stride) +
                      " not a multiple of scale " + std::to_string(s));
  }
  const int h = pair.hr.height();
  const int w = pair.hr.width();
  if (p > h || p > w) {
    throw ShapeError("extract_patches: patch " + std::to_string(p) + " larger than image " +
                     shape_string(pair.hr));
  }
  if (pair.lr.height() * s != h || pair.lr.width() * s != w || pair.lr.bands() != pair.hr.bands()) {
    throw ShapeError("extract_patches: inconsistent pair " + shape_string(pair.hr) + " / " +
                     shape_string(pair.lr));
  }
  const int ny = patch_positions(h, p, spec.stride);
  const int nx = patch_positions(w, p, spec.stride);
  const int lp = p / s;
  std::vector<ImagePair> out;
  out.reserve(static_cast<std::size_t>(ny) * nx * (spec.augment ? 8 : 1));
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const int y0 = iy * spec.stride;
      const int x0 = ix * spec.stride;
      ImagePair patch;
      patch.scale = s;
      patch.hr = Cube(p, p, pair.hr.bands());
      patch.lr = Cube(lp, lp, pair.lr.bands());
      for (int b = 0; b < pair.hr.bands(); ++b) {
        for (int y = 0; y < p; ++y)
          for (int x = 0; x < p; ++x) patch.hr.at(y, x, b) = pair.hr.at(y0 + y, x0 + x, b);
        for (int y = 0; y < lp; ++y)
          for (int x = 0; x < lp; ++x) patch.lr.at(y, x, b) = pair.lr.at(y0 / s + y, x0 / s + x, b);
      }
      patch.hr.meta = pair.hr.meta;
      patch.lr.meta = pair.lr.meta;
      patch.hr.meta["patch_origin"] = std::to_string(y0) + "," + std::to_string(x0);
      out.push_back(patch);
      if (spec.augment) {
        for (int k = 1; k < 8; ++k) {
          out.push_back(ImagePair{dihedral(patch.hr, k), dihedral(patch.lr, k), s});
        }
      }
    }
  }
  return out;
}

}  // namespace hsisr
