#include <cstdio>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "mrexplore/mission.hpp"
#include "support.hpp"

using namespace mrx;

namespace {

Scenario small(const std::string& params = "", int robots = 2) {
  std::vector<test::Start> starts{{1.5, 1.5}, {6.5, 6.5}, {1.5, 6.5}};
  starts.resize(static_cast<std::size_t>(robots));
  return test::make_scenario(16, 16, 0.5, {{3.5, 0, -1, 4, 3, 1.5}}, starts, "max_ticks=400\n" + params);
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("mrx_unit_" + name)).string();
}

}  // namespace

TEST_CASE("a small mission runs to completion") {
  Mission m(small());
  const auto s = m.run();
  CHECK(s.all_completed);
  CHECK(m.finished());
  REQUIRE(s.completion_tick);
  CHECK(*s.completion_tick <= s.ticks);
  CHECK(s.ticks < 400);
  CHECK(m.metrics().size() == static_cast<std::size_t>(s.ticks));
  for (std::size_t i = 1; i < m.metrics().size(); ++i) {
    CHECK(m.metrics()[i].vol_union >= m.metrics()[i - 1].vol_union);
    CHECK(m.metrics()[i].tick == m.metrics()[i - 1].tick + 1);
  }
  CHECK(s.vol_union == doctest::Approx(m.union_volume()));
  for (int id = 1; id <= 2; ++id) {
    CHECK(s.vol[static_cast<std::size_t>(id - 1)] <= s.vol_union + 1e-9);
    CHECK(m.robot(id).agent.completed());
  }
  CHECK(s.trace_digest == m.bus().trace().digest());
}

TEST_CASE("robots stay in valid configurations and within their speed") {
  Mission m(small());
  std::vector<Vec3> last{m.robot(1).state.position, m.robot(2).state.position};
  for (int t = 0; t < 80 && !m.finished(); ++t) {
    m.step();
    for (int id = 1; id <= 2; ++id) {
      const auto& r = m.robot(id);
      CHECK(is_valid_configuration(m.scenario().world, r.state, m.config(), m.now()));
      CHECK(distance_xy(r.state.position, last[static_cast<std::size_t>(id - 1)]) <= m.config().speed + 1e-9);
      last[static_cast<std::size_t>(id - 1)] = r.state.position;
    }
  }
}

TEST_CASE("stop freezes a robot until resume") {
  Mission m(small("", 1));
  for (int t = 0; t < 3; ++t) m.step();
  const Tick at = m.apply(control::Stop{1});
  CHECK(at == m.now());
  const Vec3 p = m.robot(1).state.position;
  for (int t = 0; t < 10; ++t) m.step();
  CHECK(m.robot(1).state.position == p);
  CHECK(m.robot(1).stopped);
  m.apply(control::Resume{1});
  for (int t = 0; t < 10; ++t) m.step();
  CHECK_FALSE(m.robot(1).state.position == p);
}

TEST_CASE("queued commands apply at the next tick boundary") {
  Mission m(small());
  m.step();
  m.enqueue(control::Stop{2});
  CHECK_FALSE(m.robot(2).stopped);
  m.step();
  CHECK(m.robot(2).stopped);
  CHECK_THROWS_AS(m.enqueue(control::Stop{5}), ControlError);
}

TEST_CASE("control validation") {
  Mission m(small());
  CHECK_THROWS_AS(m.apply(control::Stop{0}), ControlError);
  CHECK_THROWS_AS(m.apply(control::Resume{3}), ControlError);
  CHECK_THROWS_AS(m.apply(control::AddPoi{4, {1, 1, 0}, 1.0}), ControlError);
  CHECK_THROWS_AS(m.apply(control::SetFence{Polygon({{0, 0}, {4, 4}, {4, 0}, {0, 4}})}), ControlError);
  CHECK_THROWS_AS(m.apply(control::Save{""}), ControlError);
  m.apply(control::AddPoi{0, {7, 7, 0}, 2.0});
  CHECK(m.robot(1).agent.pois().size() == 1);
  CHECK(m.robot(2).agent.pois().size() == 1);
  m.apply(control::SetFence{Polygon({{0, 0}, {8, 0}, {8, 4}, {0, 4}})});
  REQUIRE(m.fence());
  CHECK(m.robot(1).agent.fence().has_value());
  m.apply(control::SetFence{std::nullopt});
  CHECK_FALSE(m.fence());
}

TEST_CASE("command parsing") {
  const auto poi = parse_command("add_poi", R"({"robot_id":"all","position":[1,2,0],"priority":3})");
  REQUIRE(std::holds_alternative<control::AddPoi>(poi));
  CHECK(std::get<control::AddPoi>(poi).robot_id == 0);
  CHECK(std::get<control::AddPoi>(poi).priority == 3.0);
  const auto fence = parse_command("set_fence", R"({"polygon":[[0,0],[4,0],[4,4]]})");
  REQUIRE(std::get<control::SetFence>(fence).fence);
  CHECK(std::get<control::SetFence>(fence).fence->vertices().size() == 3);
  CHECK_FALSE(std::get<control::SetFence>(parse_command("set_fence", "{}")).fence);
  CHECK(std::get<control::ForceGoal>(parse_command("force_goal", R"({"robot_id":2,"goal":[3,3,0]})")).goal ==
        Vec3{3, 3, 0});

  CHECK_THROWS_AS(parse_command("jump", "{}"), ControlError);
  CHECK_THROWS_AS(parse_command("stop", "{}"), ControlError);
  CHECK_THROWS_AS(parse_command("stop", "[1]"), ControlError);
  CHECK_THROWS_AS(parse_command("stop", "{nope"), ControlError);
  CHECK_THROWS_AS(parse_command("add_poi", R"({"robot_id":0,"position":[1,2,0]})"), ControlError);
  CHECK_THROWS_AS(parse_command("set_fence", R"({"polygon":[[0,0,1]]})"), ControlError);

  for (const ControlCommand& c : {poi, fence, ControlCommand{control::Stop{1}}, ControlCommand{control::Save{"x"}}}) {
    const auto j = nlohmann::json::parse(command_to_json(c));
    const auto back = parse_command(j.at("cmd"), j.at("args").dump());
    CHECK(command_to_json(back) == command_to_json(c));
  }
}

TEST_CASE("commands are recorded in the trace") {
  Mission m(small());
  m.step();
  m.apply(control::Stop{1});
  std::size_t commands = 0;
  for (const auto& line : m.bus().trace().lines()) {
    const auto j = nlohmann::json::parse(line);
    if (j["ev"] == "command") {
      ++commands;
      CHECK(j["cmd"]["cmd"] == "stop");
      CHECK(j["tick"] == 1);
    }
  }
  CHECK(commands == 1);
}

TEST_CASE("a tick observer sees every tick") {
  Mission m(small());
  std::vector<Tick> seen;
  m.set_tick_observer([&](const Mission& mm) { seen.push_back(mm.now()); });
  for (int t = 0; t < 5; ++t) m.step();
  CHECK(seen == std::vector<Tick>{1, 2, 3, 4, 5});
}

TEST_CASE("same seed is bitwise repeatable, another seed is not") {
  auto run = [](const std::string& seed) {
    Mission m(small("mission_seed=" + seed + "\nloss_probability=0.3\n"));
    for (int t = 0; t < 60; ++t) m.step();
    return std::make_pair(m.bus().trace().lines(), m.save());
  };
  const auto a = run("3"), b = run("3"), c = run("4");
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
  CHECK(a.first != c.first);
}

TEST_CASE("snapshot save and load continue identically") {
  Mission a(small("loss_probability=0.3\n"));
  for (int t = 0; t < 25; ++t) a.step();
  a.apply(control::AddPoi{1, {7, 1, 0}, 1.0});
  const auto path = temp_path("snap.bin");
  a.save_file(path);

  Mission b(small("loss_probability=0.3\n"));
  b.load_file(path);
  CHECK(b.now() == a.now());
  CHECK(b.save() == a.save());
  for (int t = 0; t < 40; ++t) {
    a.step();
    b.step();
  }
  CHECK(a.bus().trace().lines() == b.bus().trace().lines());
  CHECK(a.save() == b.save());
  CHECK(metrics_csv(a.metrics(), 2) == metrics_csv(b.metrics(), 2));

  Mission c(small("loss_probability=0.3\n"));
  c.apply(control::Load{path});
  CHECK(c.now() == 25);
  std::filesystem::remove(path);
}

TEST_CASE("snapshot loading rejects bad input") {
  Mission a(small());
  const std::vector<std::uint8_t> junk{1, 2, 3};
  CHECK_THROWS(a.load(junk));
  Mission other(small("sensor_range=2.5\n"));
  CHECK_THROWS(a.load(other.save()));
  Mission single(small("", 1));
  CHECK_THROWS(a.load(single.save()));
  CHECK_THROWS(a.load_file("/nonexistent/dir/snap.bin"));
  CHECK_THROWS(a.save_file("/nonexistent/dir/snap.bin"));
}

TEST_CASE("metrics csv and summary json") {
  Mission m(small());
  for (int t = 0; t < 10; ++t) m.step();
  const auto csv = metrics_csv(m.metrics(), 2);
  std::istringstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "tick,vol_union,vol_r1,vol_r2,dist_r1,dist_r2,conflicts,goal_goal,goal_start,aborts,failures,emitted,drops");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 10);
  const auto j = nlohmann::json::parse(summary_json(m.summary()));
  CHECK(j["ticks"] == 10);
  CHECK(j.contains("vol_union"));
  CHECK(j.contains("trace_digest"));
}

TEST_CASE("mission construction errors") {
  auto bad = small("mode=coverage\n");
  CHECK_THROWS_AS(Mission{bad}, ScenarioError);
  auto blocked = small();
  blocked.robots[0].position = {3.75, 1.0, 0.0};
  CHECK_THROWS_AS(Mission{blocked}, ScenarioError);
}

TEST_CASE("coverage mode keeps the imported point map") {
  Mission survey(small("", 1));
  survey.run();
  const auto map = survey.robot(1).agent.point_map().export_text();
  Mission cover(small("mode=coverage\n", 1), map);
  const auto s = cover.run();
  CHECK(s.all_completed);
  CHECK(cover.robot(1).agent.point_map().export_text() == map);
  CHECK(s.vol_union >= 0.98 * survey.union_volume());
}

TEST_CASE("a fence confines the goals") {
  Mission m(small("fence=0,0;8,0;8,3;0,3\n", 1));
  m.run();
  const auto& a = m.robot(1).agent;
  for (const auto& n : a.exploration_tree().nodes()) {
    CHECK(n.position.y <= 3.0 + m.config().speed);
  }
}
