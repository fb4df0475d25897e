#include "hsisr/grouping/grouping.hpp"

#include <string>

#include "hsisr/core/error.hpp"

namespace hsisr {

void GroupingConfig::validate() const {
  if (n_subs < 1 || n_ovls < 1 || n_ovls >= n_subs) {
    throw ConfigError("grouping: need 1 <= n_ovls < n_subs, got n_subs=" + std::to_string(n_subs) +
                      " n_ovls=" + std::to_string(n_ovls));
  }
}

int group_count(int bands, const GroupingConfig& cfg) {
  const int stride = cfg.n_subs - cfg.n_ovls;
  if (bands <= cfg.n_subs) return 1;
  return (bands - cfg.n_subs + stride - 1) / stride + 1;
}

std::vector<BandRange> plan_groups(int bands, const GroupingConfig& cfg) {
  cfg.validate();
  if (cfg.n_subs > bands) {
    throw ConfigError("grouping: n_subs=" + std::to_string(cfg.n_subs) + " exceeds band count " +
                      std::to_string(bands));
  }
  const int stride = cfg.n_subs - cfg.n_ovls;
  const int count = group_count(bands, cfg);
  std::vector<BandRange> plan;
  plan.reserve(count);
  for (int k = 0; k < count; ++k) {
    const int start = k + 1 == count ? bands - cfg.n_subs : k * stride;
    plan.push_back(BandRange{start, start + cfg.n_subs});
  }
  return plan;
}

GroupList group(const Cube& cube, const GroupingConfig& cfg) {
  GroupList out;
  out.source_bands = cube.bands();
  for (const BandRange& r : plan_groups(cube.bands(), cfg)) {
    out.groups.push_back(Group{r, cube.slice_bands(r.start, r.end)});
  }
  return out;
}

std::vector<int> coverage(const std::vector<BandRange>& plan, int bands) {
  std::vector<int> count(bands, 0);
  for (const BandRange& r : plan) {
    if (r.start < 0 || r.end > bands || r.start >= r.end) {
      throw ShapeError("group range [" + std::to_string(r.start) + "," + std::to_string(r.end) +
                       ") outside " + std::to_string(bands) + " bands");
    }
    for (int b = r.start; b < r.end; ++b) ++count[b];
  }
  for (int b = 0; b < bands; ++b) {
    if (count[b] == 0) throw ShapeError("merge: coverage gap at band " + std::to_string(b));
  }
  return count;
}

Cube merge(const GroupList& groups) {
  if (groups.groups.empty()) throw ShapeError("merge: empty group list");
  std::vector<BandRange> plan;
  for (const Group& g : groups.groups) {
    if (g.data.bands() != g.range.size()) throw ShapeError("merge: group data does not match its band range");
    plan.push_back(g.range);
  }
  const auto count = coverage(plan, groups.source_bands);
  const Cube& first = groups.groups.front().data;
  Cube out(first.height(), first.width(), groups.source_bands);
  out.meta = first.meta;
  // Accumulate in double: k equal floats then sum exactly, so the mean of agreeing slices is exact.
  std::vector<double> acc(out.size(), 0.0);
  for (const Group& g : groups.groups) {
    if (g.data.height() != out.height() || g.data.width() != out.width()) {
      throw ShapeError("merge: groups differ in spatial size");
    }
    for (int b = g.range.start; b < g.range.end; ++b) {
      const auto src = g.data.band(b - g.range.start);
      double* dst = acc.data() + b * out.pixels();
      for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
    }
  }
  for (int b = 0; b < out.bands(); ++b) {
    const double* src = acc.data() + b * out.pixels();
    auto dst = out.band(b);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<float>(src[i] / count[b]);
  }
  return out;
}

}  // namespace hsisr
