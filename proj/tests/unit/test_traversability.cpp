#include <cmath>

#include "doctest.h"
#include "map_helpers.hpp"
#include "mrexplore/world.hpp"
#include "support.hpp"

using namespace mrx;

TEST_CASE("flat ground is traversable away from the unknown border") {
  const auto m = test::surface_map(10, {}, {}, 2);
  CHECK(m.size() == 100);
  CHECK(m.traversable_count() == 64);
  CHECK_FALSE(m.has({1, 5}));
  CHECK_FALSE(m.traversable({2, 5}));
  CHECK(m.traversable({3, 5}));
  CHECK(test::surface_map(10).traversable_count() == 100);
  CHECK(m.at({4, 4}).base_cost == doctest::Approx(0.0));
  CHECK(m.at({4, 4}).position.z == doctest::Approx(0.0));
}

TEST_CASE("slope raises the base cost until it becomes an obstacle") {
  const double g = std::tan(15.0 * kPi / 180.0);
  const auto gentle = test::surface_map(10, [g](double x, double) { return g * x; });
  const auto& p = gentle.at({5, 5});
  REQUIRE(p.label == PointLabel::kTraversable);
  CHECK(p.base_cost == doctest::Approx(0.5));

  const double steep = std::tan(35.0 * kPi / 180.0);
  const auto wall = test::surface_map(10, [steep](double x, double) { return steep * x; });
  CHECK(wall.traversable_count() == 0);
}

TEST_CASE("a height step is an obstacle") {
  const auto m = test::surface_map(12, [](double x, double) { return x < 1.5 ? 0.0 : 0.4; });
  CHECK(m.traversable({3, 6}));
  CHECK_FALSE(m.traversable({5, 6}));
  CHECK_FALSE(m.traversable({6, 6}));
  CHECK(m.traversable({9, 6}));
}

TEST_CASE("obstacle hits inflate by the robot radius") {
  auto m = test::surface_map(16);
  m.add_hit(m.cell_center({8, 8}) + Vec3{0, 0, 0.5}, true);
  m.relabel();
  CHECK_FALSE(m.traversable({8, 8}));
  // Gap from a cell center to the obstacle cell: 0.125 for (7,8) and (7,7), 0.375 for (6,8).
  CHECK_FALSE(m.traversable({7, 8}));
  CHECK_FALSE(m.traversable({7, 7}));
  CHECK(m.traversable({6, 8}));
  CHECK(m.traversable({6, 6}));
}

TEST_CASE("teammate inflation") {
  const auto m = test::surface_map(20);
  const PointKey k{10, 10};
  const Vec3 p = m.at(k).position;
  const double base = m.at(k).base_cost;
  std::vector<TeammateFootprint> fps{{2, p + Vec3{0.5, 0, 0}, {}, 0.75}};
  CHECK(m.multi_robot_cost(k, fps) == kInfiniteCost);
  fps[0].position = p + Vec3{1.0, 0, 0};
  CHECK(m.multi_robot_cost(k, fps) == doctest::Approx(base + 2.0 * (1.0 - 1.0 / 1.5)));
  fps[0].position = p + Vec3{2.0, 0, 0};
  CHECK(m.multi_robot_cost(k, fps) == doctest::Approx(base));
  fps[0].path = {p + Vec3{2.0, -1, 0}, p + Vec3{0.5, -1, 0}, p + Vec3{0.5, 1, 0}};
  CHECK(m.multi_robot_cost(k, fps) == kInfiniteCost);
  SurfacePointMap empty(5, 5, {});
  CHECK_THROWS_AS(empty.multi_robot_cost(Vec3{1, 1, 0}, {}), OffMapError);
}

TEST_CASE("nearest traversable point breaks ties by key") {
  const auto m = test::surface_map(10, {}, {}, 2);
  const auto k = m.nearest_traversable({0.0, 0.0, 0.0});
  REQUIRE(k);
  CHECK(*k == PointKey{3, 3});
  const auto side = m.nearest_traversable(m.cell_center({3, 3}) + Vec3{-0.125, -0.125, 0});
  REQUIRE(side);
  CHECK(*side == PointKey{3, 3});
  const auto c = m.cell_center({3, 3});
  const auto mid = m.nearest_traversable({c.x + 0.125, c.y, 0});
  REQUIRE(mid);
  CHECK(*mid == PointKey{3, 3});
  CHECK(nearest_traversable(m, c) == m.at({3, 3}).position);
  CHECK_FALSE(SurfacePointMap(2, 2, {}).nearest_traversable({1, 1, 0}).has_value());
}

TEST_CASE("export and import keep labels and costs") {
  const double g = std::tan(10.0 * kPi / 180.0);
  auto m = test::surface_map(10, [g](double x, double) { return g * x; });
  m.add_hit(m.cell_center({7, 7}), true);
  m.relabel();
  const auto text = m.export_text();
  SurfacePointMap copy(m.nx() * m.params().pitch, m.ny() * m.params().pitch, m.params());
  copy.import_text(text);
  CHECK(copy.size() == m.size());
  CHECK(copy.traversable_keys() == m.traversable_keys());
  for (const auto k : m.keys()) {
    if (m.traversable(k)) CHECK(copy.at(k).base_cost == doctest::Approx(m.at(k).base_cost));
  }
  copy.relabel();
  CHECK(copy.traversable_keys() == m.traversable_keys());
  CHECK(copy.export_text() == text);
  CHECK_THROWS(copy.import_text("1 2 3 lava 0\n"));
  CHECK_THROWS(copy.import_text("1 2\n"));
}

TEST_CASE("scans build a traversable patch around the robot") {
  const auto sc = test::make_scenario(24, 24, 0.5, {{8, 0, -1, 9, 12, 1}}, {{5.5, 6}}, "");
  const auto spec = SensorSpec::from_config(sc.config);
  const auto scan = simulate_scan(sc.world, sc.robots[0], spec, 0);
  const auto m = update_from_scan(SurfacePointMap(12, 12, TraversabilityParams::from_config(sc.config)), scan);
  const auto here = m.key_of(5.6, 6.1);
  REQUIRE(here);
  CHECK(m.traversable(*here));
  std::size_t wall_hits = 0;
  for (const auto k : m.keys()) {
    if (m.at(k).obstacle_hit) {
      ++wall_hits;
      CHECK(m.at(k).position.x == doctest::Approx(8.0).epsilon(0.04));
    }
  }
  CHECK(wall_hits >= 6);
  for (const auto k : m.traversable_keys()) CHECK(m.at(k).position.x < 8.0);
}
