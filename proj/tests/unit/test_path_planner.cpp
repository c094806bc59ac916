#include <cmath>

#include "doctest.h"
#include "map_helpers.hpp"
#include "mrexplore/path_planner.hpp"

using namespace mrx;

namespace {

// 20 x 20 flat cells with a wall of obstacle hits at ix = 10 for iy < 16.
SurfacePointMap walled() {
  auto m = test::surface_map(20);
  for (int iy = 0; iy < 16; ++iy) m.add_hit(m.cell_center({10, iy}) + Vec3{0, 0, 0.5}, true);
  m.relabel();
  return m;
}

}  // namespace

TEST_CASE("straight path on flat ground") {
  const auto m = test::surface_map(20);
  const Vec3 a = m.at({2, 5}).position, b = m.at({12, 5}).position;
  const auto r = plan(m, {}, a, b, 0.5);
  REQUIRE(r.ok());
  CHECK(r.path->length == doctest::Approx(2.5));
  CHECK(r.path->cost == doctest::Approx(2.5));
  CHECK(r.path->waypoints.front() == a);
  CHECK(r.path->waypoints.back() == b);
  CHECK(r.path->keys.size() == 11);
}

TEST_CASE("diagonal moves are used") {
  const auto m = test::surface_map(20);
  const auto r = plan(m, {}, m.at({2, 2}).position, m.at({6, 6}).position, 0.5);
  REQUIRE(r.ok());
  CHECK(r.path->length == doctest::Approx(4 * 0.25 * std::sqrt(2.0)));
  CHECK(r.path->keys.size() == 5);
}

TEST_CASE("paths go around walls") {
  const auto m = walled();
  const auto r = plan(m, {}, m.at({5, 5}).position, m.at({15, 5}).position, 0.5);
  REQUIRE(r.ok());
  for (const auto& k : r.path->keys) CHECK((k.ix != 10 || k.iy >= 16));
  CHECK(r.path->length > 2.5);
  CHECK(path_min_separation(*r.path, *r.path) == 0.0);
}

TEST_CASE("plan status codes") {
  auto m = test::surface_map(20);
  for (int iy = 0; iy < 20; ++iy) m.add_hit(m.cell_center({10, iy}) + Vec3{0, 0, 0.5}, true);
  m.relabel();
  const Vec3 a = m.at({5, 5}).position;
  CHECK(plan(m, {}, a, m.at({15, 5}).position, 0.5).status == PlanStatus::kGoalUnreachable);
  CHECK(plan(m, {}, a, m.at({10, 5}).position, 0.1).status == PlanStatus::kGoalSnapFailed);
  CHECK(plan(m, {}, a, Vec3{40, 40, 0}, 0.5).status == PlanStatus::kGoalSnapFailed);
  CHECK_THROWS_AS(plan(m, {}, m.at({10, 5}).position, a, 0.1), OffMapError);
  // A goal on the obstacle snaps to the nearest traversable point within the radius.
  const auto snapped = plan(m, {}, a, m.cell_center({10, 5}), 0.5);
  REQUIRE(snapped.ok());
  CHECK(snapped.path->keys.back() == PointKey{8, 5});
}

TEST_CASE("teammates block and inflate") {
  const auto m = test::surface_map(20);
  const Vec3 a = m.at({2, 10}).position, b = m.at({17, 10}).position;
  const auto free = plan(m, {}, a, b, 0.5);
  REQUIRE(free.ok());
  std::vector<TeammateFootprint> fps{{2, m.at({10, 10}).position, {}, 0.75}};
  const auto detour = plan(m, fps, a, b, 0.5);
  REQUIRE(detour.ok());
  CHECK(detour.path->cost > free.path->cost);
  for (const auto& w : detour.path->waypoints) CHECK(distance(w, fps[0].position) > 0.75);

  fps[0].position = b;
  CHECK(plan(m, fps, a, b, 0.5).status == PlanStatus::kGoalUnreachable);

  // The start is exempt so a robot inside a teammate's inflation can still leave.
  fps[0].position = a + Vec3{0.25, 0, 0};
  const CostField field(m, fps, {2, 10});
  CHECK(std::isfinite(field.node_cost({2, 10})));
  CHECK_FALSE(std::isfinite(field.node_cost({3, 10})));
}

TEST_CASE("uniform cost search settles in cost order with key tie breaks") {
  const auto m = test::surface_map(8);
  const CostField field(m, {}, {4, 4});
  const auto sp = uniform_cost_search(field);
  CHECK(sp.cost_to({4, 4}) == 0.0);
  CHECK(sp.cost_to({5, 4}) == doctest::Approx(0.25));
  CHECK(sp.cost_to({7, 7}) == doctest::Approx(3 * 0.25 * std::sqrt(2.0)));
  CHECK(sp.cost_to({0, 4}) == doctest::Approx(1.0));
  const auto p = sp.path_to(m, {4, 0});
  CHECK(p.keys.front() == PointKey{4, 4});
  CHECK(p.keys.back() == PointKey{4, 0});
  CHECK(p.length == doctest::Approx(1.0));
  CHECK(field.edge_weight({4, 4}, {5, 4}) == doctest::Approx(0.25));
}

TEST_CASE("bounded path length query") {
  const auto m = walled();
  const Vec3 a = m.at({5, 5}).position, b = m.at({15, 5}).position;
  const auto full = plan(m, {}, a, b, 0.5);
  REQUIRE(full.ok());
  const auto len = path_length_below(m, a, b, 100.0, 0.5);
  REQUIRE(len);
  CHECK(*len == doctest::Approx(full.path->length));
  CHECK_FALSE(path_length_below(m, a, b, 2.6, 0.5).has_value());
  CHECK(path_length_below(m, a, a, 0.1, 0.5) == 0.0);
}

TEST_CASE("polyline separation") {
  const std::vector<Vec3> a{{0, 0, 0}, {4, 0, 0}};
  const std::vector<Vec3> b{{2, 3, 0}, {2, 1, 0}};
  CHECK(polyline_min_separation(a, b) == doctest::Approx(1.0));
  const std::vector<Vec3> c{{5, 0, 0}};
  CHECK(polyline_min_separation(a, c) == doctest::Approx(1.0));
}

TEST_CASE("planner feedback sequence") {
  const auto m = test::surface_map(20);
  PathPlanner planner(0.5, 0.375);
  CHECK(planner.replan_tick(0, m.at({2, 2}).position, m, {}).kind == PlannerFeedback::Kind::kIdle);

  const Vec3 goal = m.at({12, 2}).position;
  planner.set_goal(goal);
  const auto first = planner.replan_tick(1, m.at({2, 2}).position, m, {});
  CHECK(first.kind == PlannerFeedback::Kind::kPlanned);
  CHECK(first.remaining_length == doctest::Approx(2.5));
  const auto second = planner.replan_tick(2, m.at({6, 2}).position, m, {});
  CHECK(second.kind == PlannerFeedback::Kind::kProgressing);
  CHECK(second.remaining_length == doctest::Approx(1.5));
  const auto done = planner.replan_tick(3, goal + Vec3{0.3, 0, 0}, m, {});
  CHECK(done.kind == PlannerFeedback::Kind::kGoalReached);
  CHECK_FALSE(planner.goal().has_value());
  CHECK(planner.halted());

  planner.set_goal(goal);
  planner.abort();
  CHECK(planner.replan_tick(4, m.at({2, 2}).position, m, {}).kind == PlannerFeedback::Kind::kAborted);
  CHECK(planner.replan_tick(5, m.at({2, 2}).position, m, {}).kind == PlannerFeedback::Kind::kIdle);

  planner.set_goal(Vec3{40, 40, 0});
  CHECK(planner.replan_tick(6, m.at({2, 2}).position, m, {}).kind == PlannerFeedback::Kind::kFailure);
  CHECK(planner.halted());
  CHECK(std::string(to_string(PlannerFeedback::Kind::kFailure)).size() > 0);
}

TEST_CASE("planner falls back to teammate bodies when announced paths block the goal") {
  const auto m = test::surface_map(20);
  const Vec3 start = m.at({2, 10}).position, goal = m.at({10, 10}).position;
  std::vector<TeammateFootprint> fps{{2, m.at({17, 10}).position, {m.at({17, 10}).position, goal}, 0.75}};
  PathPlanner planner(0.5, 0.375);
  planner.set_goal(goal);
  const auto fb = planner.replan_tick(0, start, m, fps);
  CHECK(fb.kind == PlannerFeedback::Kind::kPlanned);
  fps[0].position = goal;
  CHECK(planner.replan_tick(1, start, m, fps).kind == PlannerFeedback::Kind::kFailure);
}

TEST_CASE("planner state restores") {
  const auto m = test::surface_map(20);
  PathPlanner a(0.5, 0.375);
  a.set_goal(m.at({12, 2}).position, 1.0);
  a.replan_tick(1, m.at({2, 2}).position, m, {});
  PathPlanner b(0.5, 0.375);
  b.restore(a.state());
  CHECK(b.goal() == a.goal());
  CHECK(b.goal_yaw() == a.goal_yaw());
  CHECK(b.current_path() == a.current_path());
  CHECK(b.replan_tick(2, m.at({4, 2}).position, m, {}).remaining_length ==
        a.replan_tick(2, m.at({4, 2}).position, m, {}).remaining_length);
}
