#include "doctest.h"
#include "map_helpers.hpp"
#include "mrexplore/coordination.hpp"

using namespace mrx;

namespace {

Path straight(const Vec3& a, const Vec3& b) {
  Path p;
  p.waypoints = {a, b};
  p.length = distance(a, b);
  p.cost = p.length;
  return p;
}

}  // namespace

TEST_CASE("team model follows the message table") {
  TeamModel tm(1, 50);
  CHECK_FALSE(tm.apply(BroadcastMessage::position(1, 0, {1, 1, 0})));
  CHECK(tm.tuples().empty());

  CHECK(tm.apply(BroadcastMessage::position(2, 3, {1, 2, 0})));
  REQUIRE(tm.find(2));
  CHECK(tm.find(2)->position == Vec3{1, 2, 0});
  CHECK_FALSE(tm.find(2)->has_goal());

  CHECK(tm.apply(BroadcastMessage::selected(2, 4, {5, 5, 0}, straight({1, 2, 0}, {5, 5, 0}), 5.0)));
  CHECK(tm.find(2)->has_goal());
  CHECK(tm.find(2)->cost == 5.0);
  CHECK(tm.find(2)->stamp == 4);

  // Older messages are ignored.
  CHECK_FALSE(tm.apply(BroadcastMessage::goal(MessageType::kAborted, 2, 3, {5, 5, 0})));
  CHECK(tm.find(2)->has_goal());

  CHECK(tm.apply(BroadcastMessage::goal(MessageType::kReached, 2, 6, {5, 5, 0})));
  CHECK_FALSE(tm.find(2)->goal.has_value());
  CHECK_FALSE(tm.find(2)->path.has_value());
  CHECK(tm.find(2)->position == Vec3{1, 2, 0});

  tm.apply(BroadcastMessage::selected(2, 7, {5, 5, 0}, {}, 1.0));
  CHECK(tm.apply(BroadcastMessage::goal(MessageType::kPlanned, 2, 8, {6, 6, 0})));
  CHECK_FALSE(tm.find(2)->has_goal());
  tm.apply(BroadcastMessage::selected(2, 9, {5, 5, 0}, {}, 1.0));
  CHECK(tm.apply(BroadcastMessage::goal(MessageType::kAborted, 2, 9, {5, 5, 0})));
  CHECK_FALSE(tm.find(2)->has_goal());

  CHECK_FALSE(tm.apply(BroadcastMessage::tree(2, 10, {})));
}

TEST_CASE("tuples expire") {
  TeamModel tm(1, 5);
  tm.apply(BroadcastMessage::position(2, 10, {1, 1, 0}));
  CHECK(tm.valid(2, 15));
  CHECK_FALSE(tm.valid(2, 16));
  CHECK_FALSE(tm.valid(3, 0));
  CHECK(tm.footprints(15, 0.75).size() == 1);
  CHECK(tm.footprints(16, 0.75).empty());
  const auto kept = expire(tm, 15);
  CHECK(kept.find(2)->position.has_value());
  const auto gone = expire(tm, 16);
  CHECK_FALSE(gone.find(2)->position.has_value());
  CHECK(apply_message(gone, BroadcastMessage::position(2, 12, {0, 0, 0})).find(2)->position.has_value());
}

TEST_CASE("footprints carry positions, paths and the safety distance") {
  TeamModel tm(2, 50);
  tm.apply(BroadcastMessage::position(1, 0, {1, 1, 0}));
  tm.apply(BroadcastMessage::selected(1, 1, {3, 1, 0}, straight({1, 1, 0}, {3, 1, 0}), 2.0));
  tm.apply(BroadcastMessage::selected(3, 1, {3, 3, 0}, {}, 2.0));
  const auto fps = tm.footprints(2, 0.75);
  REQUIRE(fps.size() == 1);
  CHECK(fps[0].robot_id == 1);
  CHECK(fps[0].path.size() == 2);
  CHECK(fps[0].inflation_radius == 0.75);
}

TEST_CASE("goal-goal conflicts go to the higher-cost robot") {
  const auto m = test::surface_map(40);
  const Vec3 g1 = m.at({20, 20}).position, g2 = m.at({24, 20}).position, far = m.at({35, 35}).position;

  TeamModel tm(1, 50);
  tm.apply(BroadcastMessage::position(2, 0, far));
  tm.apply(BroadcastMessage::selected(2, 0, g2, {}, 3.0));

  auto c = detect_node_conflict(tm, 1, g1, 4.0, m, 1.5, 0.5);
  CHECK(c.kind == ConflictKind::kGoalGoal);
  CHECK(c.teammate == 2);
  CHECK_FALSE(detect_node_conflict(tm, 1, g1, 2.0, m, 1.5, 0.5));
  // Equal cost: the larger id yields.
  CHECK_FALSE(detect_node_conflict(tm, 1, g1, 3.0, m, 1.5, 0.5));
  TeamModel tm3(3, 50);
  tm3.apply(BroadcastMessage::position(2, 0, far));
  tm3.apply(BroadcastMessage::selected(2, 0, g2, {}, 3.0));
  CHECK(detect_node_conflict(tm3, 1, g1, 3.0, m, 1.5, 0.5).kind == ConflictKind::kGoalGoal);
  // Too far apart.
  CHECK_FALSE(detect_node_conflict(tm, 1, g1, 4.0, m, 0.9, 0.5));
  // Stale tuples do not count.
  CHECK_FALSE(detect_node_conflict(tm, 60, g1, 4.0, m, 1.5, 0.5));
}

TEST_CASE("goal-start conflicts ignore priority") {
  const auto m = test::surface_map(40);
  const Vec3 g1 = m.at({20, 20}).position;
  TeamModel tm(1, 50);
  tm.apply(BroadcastMessage::position(2, 0, m.at({22, 20}).position));
  const auto c = detect_node_conflict(tm, 0, g1, 0.0, m, 1.5, 0.5);
  CHECK(c.kind == ConflictKind::kGoalStart);
  CHECK(std::string(to_string(c.kind)) != std::string(to_string(ConflictKind::kNone)));
}

TEST_CASE("conflict distance is measured along traversable paths") {
  auto m = test::surface_map(40);
  for (int iy = 0; iy < 36; ++iy) m.add_hit(m.cell_center({20, iy}) + Vec3{0, 0, 0.5}, true);
  m.relabel();
  TeamModel tm(1, 50);
  tm.apply(BroadcastMessage::selected(2, 0, m.at({24, 10}).position, {}, 1.0));
  // 1.5 m apart in a straight line, but the wall forces a long detour.
  CHECK_FALSE(detect_node_conflict(tm, 0, m.at({16, 10}).position, 5.0, m, 2.0, 0.5));
  CHECK(detect_node_conflict(tm, 0, m.at({16, 10}).position, 5.0, m, 20.0, 0.5).kind == ConflictKind::kGoalGoal);
}
