#pragma once

#include <vector>

#include "hsisr/core/cube.hpp"

namespace hsisr {

struct GroupingConfig {
  int n_subs = 16;  // bands per group
  int n_ovls = 4;   // bands shared by consecutive groups

  void validate() const;
};

struct BandRange {
  int start = 0;
  int end = 0;  // exclusive

  int size() const { return end - start; }
  friend bool operator==(const BandRange&, const BandRange&) = default;
};

struct Group {
  BandRange range;
  Cube data;  // height x width x n_subs
};

struct GroupList {
  std::vector<Group> groups;
  int source_bands = 0;
};

// Closed-form number of groups for c bands.
int group_count(int bands, const GroupingConfig& cfg);

// Group starts advance by n_subs - n_ovls; the last group is shifted left so
// that it ends exactly at the final band.
std::vector<BandRange> plan_groups(int bands, const GroupingConfig& cfg);

GroupList group(const Cube& cube, const GroupingConfig& cfg);

// Band b of the result is the mean over every group slice that covers b.
Cube merge(const GroupList& groups);

// Per-band number of covering groups; throws on a gap.
std::vector<int> coverage(const std::vector<BandRange>& plan, int bands);

}  // namespace hsisr
