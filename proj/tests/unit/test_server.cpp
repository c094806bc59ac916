#include <chrono>
#include <thread>

#include "doctest.h"
#include "json.hpp"
#include "line_client.hpp"
#include "mrexplore/server.hpp"
#include "support.hpp"

using namespace mrx;
using nlohmann::json;

namespace {

Scenario arena() {
  return test::make_scenario(16, 16, 0.5, {{3.5, 0, -1, 4, 3, 1.5}}, {{1.5, 1.5}, {6.5, 6.5}}, "max_ticks=400\n");
}

// Pumps until at least one request has been handled.
void pump_one(ControlServer& server, Mission& mission) {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
  while (server.pump(mission) == 0) {
    if (std::chrono::steady_clock::now() > deadline) throw std::runtime_error("no request arrived");
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
}

json request(test::LineClient& c, ControlServer& server, Mission& mission, const json& req) {
  c.send(req.dump());
  pump_one(server, mission);
  const auto line = c.read_line();
  REQUIRE(line);
  return json::parse(*line);
}

void wait_for_client(const ControlServer& server, std::size_t n) {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
  while (server.client_count() < n && std::chrono::steady_clock::now() < deadline) {
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  REQUIRE(server.client_count() == n);
}

// Steps one tick, publishes, and returns the frames of one topic that arrived.
std::vector<json> tick_frames(test::LineClient& c, ControlServer& server, Mission& mission, int expected) {
  mission.step();
  server.publish(mission);
  std::vector<json> out;
  for (int i = 0; i < expected; ++i) {
    const auto line = c.read_line();
    REQUIRE(line);
    out.push_back(json::parse(*line));
  }
  return out;
}

}  // namespace

TEST_CASE("server lists the telemetry topics") {
  const auto& t = ControlServer::topics();
  for (const char* name : {"map", "robots", "trees", "metrics", "messages"}) {
    CHECK(std::find(t.begin(), t.end(), name) != t.end());
  }
}

TEST_CASE("subscribe, acknowledgements and errors") {
  Mission mission(arena());
  ControlServer server(0, 1);
  CHECK(server.port() > 0);
  test::LineClient c(server.port());
  wait_for_client(server, 1);

  auto r = request(c, server, mission, {{"cmd", "subscribe"}, {"args", {{"topics", {"robots"}}}}, {"req_id", 1}});
  CHECK(r["req_id"] == 1);
  CHECK(r["ok"]["tick"] == 0);

  r = request(c, server, mission, {{"cmd", "subscribe"}, {"args", {{"topics", {"weather"}}}}, {"req_id", "x"}});
  CHECK(r["req_id"] == "x");
  CHECK(r.contains("err"));
  CHECK_FALSE(r.contains("ok"));

  c.send("{not json");
  pump_one(server, mission);
  r = json::parse(*c.read_line());
  CHECK(r["req_id"].is_null());
  CHECK(r.contains("err"));

  r = request(c, server, mission, {{"cmd", "stop"}, {"args", {{"robot_id", 9}}}, {"req_id", 3}});
  CHECK(r.contains("err"));
  r = request(c, server, mission, {{"cmd", "warp"}, {"args", json::object()}, {"req_id", 4}});
  CHECK(r.contains("err"));
  r = request(c, server, mission, {{"cmd", "set_fence"}, {"args", {{"polygon", {{0, 0}, {4, 4}, {4, 0}, {0, 4}}}}}, {"req_id", 5}});
  CHECK(r.contains("err"));
  CHECK_FALSE(mission.fence());
  r = request(c, server, mission, {{"args", json::object()}, {"req_id", 6}});
  CHECK(r.contains("err"));

  const auto frames = tick_frames(c, server, mission, 1);
  CHECK(frames[0]["topic"] == "robots");
  CHECK(frames[0]["tick"] == 1);
  CHECK(frames[0]["data"].size() == 2);
}

TEST_CASE("telemetry respects the decimation") {
  Mission mission(arena());
  ControlServer server(0, 5);
  test::LineClient c(server.port());
  wait_for_client(server, 1);
  request(c, server, mission, {{"cmd", "subscribe"}, {"args", {{"topics", {"metrics", "messages"}}}}, {"req_id", 1}});
  std::vector<Tick> ticks;
  for (int t = 0; t < 10; ++t) {
    mission.step();
    server.publish(mission);
  }
  while (const auto line = c.read_line(300)) {
    const auto f = json::parse(*line);
    ticks.push_back(f["tick"].get<Tick>());
    if (f["topic"] == "metrics") CHECK(f["data"]["tick"] == f["tick"]);
  }
  CHECK(ticks == std::vector<Tick>{5, 5, 10, 10});
}

TEST_CASE("console round trip: commands take effect within two frames") {
  Mission mission(arena());
  ControlServer server(0, 1);
  test::LineClient c(server.port());
  wait_for_client(server, 1);
  request(c, server, mission, {{"cmd", "subscribe"}, {"args", {{"topic", "robots"}}}, {"req_id", 0}});
  for (int t = 0; t < 3; ++t) tick_frames(c, server, mission, 1);

  auto robot = [](const json& frame, int id) { return frame["data"][static_cast<std::size_t>(id - 1)]; };

  // stop
  auto r = request(c, server, mission, {{"cmd", "stop"}, {"args", {{"robot_id", 1}}}, {"req_id", 1}});
  REQUIRE(r.contains("ok"));
  CHECK(r["ok"]["tick"] == 3);
  auto f1 = tick_frames(c, server, mission, 1)[0];
  auto f2 = tick_frames(c, server, mission, 1)[0];
  CHECK((robot(f1, 1)["stopped"] == true || robot(f2, 1)["stopped"] == true));
  CHECK(robot(f1, 1)["position"] == robot(f2, 1)["position"]);

  // add_poi
  r = request(c, server, mission,
              {{"cmd", "add_poi"}, {"args", {{"robot_id", 2}, {"position", {7.5, 1.0, 0.0}}, {"priority", 2}}}, {"req_id", 2}});
  REQUIRE(r.contains("ok"));
  f1 = tick_frames(c, server, mission, 1)[0];
  f2 = tick_frames(c, server, mission, 1)[0];
  CHECK((robot(f1, 2)["pois"].size() == 1 || robot(f2, 2)["pois"].size() == 1));
  CHECK(robot(f1, 1)["pois"].empty());

  // set_fence
  r = request(c, server, mission,
              {{"cmd", "set_fence"}, {"args", {{"polygon", {{0, 0}, {8, 0}, {8, 8}, {0, 8}}}}}, {"req_id", 3}});
  REQUIRE(r.contains("ok"));
  CHECK(mission.fence().has_value());
  tick_frames(c, server, mission, 1);

  // resume
  r = request(c, server, mission, {{"cmd", "resume"}, {"args", {{"robot_id", 1}}}, {"req_id", 4}});
  REQUIRE(r.contains("ok"));
  f1 = tick_frames(c, server, mission, 1)[0];
  f2 = tick_frames(c, server, mission, 1)[0];
  CHECK((robot(f1, 1)["stopped"] == false || robot(f2, 1)["stopped"] == false));

  // The trace holds every accepted command exactly once.
  std::map<std::string, int> seen;
  for (const auto& line : mission.bus().trace().lines()) {
    const auto e = json::parse(line);
    if (e["ev"] == "command") seen[e["cmd"]["cmd"].get<std::string>()]++;
  }
  CHECK(seen == std::map<std::string, int>{{"stop", 1}, {"add_poi", 1}, {"set_fence", 1}, {"resume", 1}});
}

TEST_CASE("unsubscribe stops frames and clients may leave") {
  Mission mission(arena());
  ControlServer server(0, 1);
  {
    test::LineClient c(server.port());
    wait_for_client(server, 1);
    request(c, server, mission, {{"cmd", "subscribe"}, {"args", {{"topic", "trees"}}}, {"req_id", 1}});
    const auto f = tick_frames(c, server, mission, 1)[0];
    CHECK(f["topic"] == "trees");
    CHECK(f["data"][0].contains("exploration"));
    request(c, server, mission, {{"cmd", "unsubscribe"}, {"args", {{"topic", "trees"}}}, {"req_id", 2}});
    mission.step();
    server.publish(mission);
    CHECK_FALSE(c.read_line(200).has_value());
  }
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
  while (server.client_count() > 0 && std::chrono::steady_clock::now() < deadline) {
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  CHECK(server.client_count() == 0);
  mission.step();
  server.publish(mission);
  server.stop();
}

TEST_CASE("map frames use the snapshot formats") {
  Mission mission(arena());
  const auto d = json::parse(ControlServer::topic_data(mission, "map"));
  REQUIRE(d.size() == 2);
  const auto grid = VoxelGrid::from_snapshot(d[0]["grid"].get<std::string>());
  CHECK(grid.known_count() == mission.robot(1).agent.grid().known_count());
  CHECK(d[0]["points"] == mission.robot(1).agent.point_map().export_text());
  CHECK(json::parse(ControlServer::topic_data(mission, "metrics")).is_null());
  CHECK_THROWS_AS(ControlServer::topic_data(mission, "nope"), ControlError);
}
