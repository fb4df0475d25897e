#include <doctest.h>

#include <random>

#include "hsisr/core/error.hpp"
#include "hsisr/grouping/grouping.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace hsisr;
using namespace hsisr::oracle;

namespace {

Cube band_constant_cube(int h, int w, int c) {
  Cube cube(h, w, c);
  for (int b = 0; b < c; ++b)
    for (float& v : cube.band(b)) v = static_cast<float>(b);
  return cube;
}

}  // namespace

TEST_CASE("plan_groups on the reference band counts") {
  const GroupingConfig cfg{16, 4};
  CHECK(plan_groups(16, cfg) == Plan{{0, 16}});
  CHECK(plan_groups(28, cfg) == Plan{{0, 16}, {12, 28}});
  CHECK(plan_groups(30, cfg) == Plan{{0, 16}, {12, 28}, {14, 30}});
  CHECK(group_count(30, cfg) == 3);
  CHECK_THROWS_AS(plan_groups(15, cfg), ConfigError);
  CHECK_THROWS_AS((GroupingConfig{4, 4}.validate()), ConfigError);
  CHECK_THROWS_AS((GroupingConfig{4, 0}.validate()), ConfigError);
}

TEST_CASE("plan_groups matches enumeration and closed form for every band count") {
  for (auto [n_subs, n_ovls] : {std::pair{16, 4}, std::pair{8, 2}, std::pair{3, 1}, std::pair{5, 4}, std::pair{2, 1}}) {
    const GroupingConfig cfg{n_subs, n_ovls};
    for (int c = n_subs; c <= 256; ++c) {
      const Plan plan = plan_groups(c, cfg);
      CHECK(plan == brute_force_plan(c, n_subs, n_ovls));
      CHECK(static_cast<int>(plan.size()) == closed_form(c, n_subs, n_ovls));
      CHECK(group_count(c, cfg) == static_cast<int>(plan.size()));
      std::vector<int> covered(c, 0);
      for (std::size_t g = 0; g < plan.size(); ++g) {
        CHECK(plan[g].size() == n_subs);
        if (g > 0) {
          CHECK(plan[g].start > plan[g - 1].start);
          CHECK(plan[g - 1].end - plan[g].start >= n_ovls);
        }
        for (int b = plan[g].start; b < plan[g].end; ++b) ++covered[b];
      }
      for (int b = 0; b < c; ++b) CHECK(covered[b] >= 1);
      CHECK(coverage(plan, c) == covered);
      if (n_subs >= 2 && c > n_subs) CHECK(static_cast<int>(plan.size()) < c);
    }
  }
}

TEST_CASE("group slices contiguous bands") {
  const Cube cube = band_constant_cube(3, 4, 28);
  const GroupList list = group(cube, {16, 4});
  REQUIRE(list.groups.size() == 2);
  CHECK(list.source_bands == 28);
  const Cube& second = list.groups[1].data;
  CHECK(second.bands() == 16);
  for (int b = 0; b < 16; ++b) CHECK(second.at(2, 3, b) == static_cast<float>(12 + b));

  const Cube single = test::random_cube(4, 4, 16, 1);
  const GroupList one = group(single, {16, 4});
  REQUIRE(one.groups.size() == 1);
  CHECK(one.groups[0].data == single);
  CHECK_THROWS_AS(group(single, {17, 4}), ConfigError);
}

TEST_CASE("merge averages overlapping slices") {
  GroupList two;
  two.source_bands = 28;
  two.groups.push_back({{0, 16}, Cube(2, 2, 16, 1.0f)});
  two.groups.push_back({{12, 28}, Cube(2, 2, 16, 3.0f)});
  const Cube m2 = merge(two);
  for (int b = 0; b < 28; ++b) CHECK(m2.at(1, 1, b) == (b < 12 ? 1.0f : b < 16 ? 2.0f : 3.0f));

  GroupList three;
  three.source_bands = 30;
  three.groups.push_back({{0, 16}, Cube(2, 2, 16, 0.0f)});
  three.groups.push_back({{12, 28}, Cube(2, 2, 16, 3.0f)});
  three.groups.push_back({{14, 30}, Cube(2, 2, 16, 6.0f)});
  const Cube m3 = merge(three);
  CHECK(m3.at(0, 0, 14) == 3.0f);
  CHECK(m3.at(0, 0, 15) == 3.0f);
  CHECK(m3.at(0, 0, 13) == 1.5f);
  CHECK(m3.at(0, 0, 29) == 6.0f);

  GroupList gap;
  gap.source_bands = 20;
  gap.groups.push_back({{0, 8}, Cube(2, 2, 8)});
  gap.groups.push_back({{12, 20}, Cube(2, 2, 8)});
  CHECK_THROWS_AS(merge(gap), ShapeError);
}

TEST_CASE("merge inverts group for randomized configurations") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const int n_subs = std::uniform_int_distribution<int>(2, 20)(rng);
    const int n_ovls = std::uniform_int_distribution<int>(1, n_subs - 1)(rng);
    const int c = std::uniform_int_distribution<int>(n_subs, 64)(rng);
    const Cube cube = test::random_cube(5, 3, c, rng());
    const GroupList list = group(cube, {n_subs, n_ovls});
    CHECK(static_cast<int>(list.groups.size()) == closed_form(c, n_subs, n_ovls));
    CHECK(merge(list) == cube);
  }
}
