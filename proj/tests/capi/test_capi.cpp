#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <dlfcn.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "mrexplore/mrexplore.h"

namespace {

std::string fixture(const std::string& name) {
  std::ifstream in(std::string(MRX_FIXTURE_DIR) + "/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// open24 with the desk parameters and a short tick budget.
std::string scenario() { return fixture("open24.scn"); }
std::string config() { return fixture("desk.cfg") + "max_ticks=60\n"; }

std::string take(char* s) {
  std::string out = s ? s : "";
  mrx_string_free(s);
  return out;
}

struct Handle {
  mrx_mission* m = nullptr;
  Handle() { REQUIRE(mrx_mission_create(scenario().c_str(), config().c_str(), nullptr, &m) == MRX_OK); }
  ~Handle() { mrx_mission_destroy(m); }
};

}  // namespace

TEST_CASE("the shared library exports the C symbols") {
  void* lib = dlopen(MRX_SHARED_LIB, RTLD_NOW | RTLD_LOCAL);
  REQUIRE(lib != nullptr);
  for (const char* sym : {"mrx_mission_create", "mrx_mission_step", "mrx_mission_control", "mrx_last_error",
                          "mrx_mission_serve", "mrx_string_free"}) {
    CHECK(dlsym(lib, sym) != nullptr);
  }
  CHECK(dlsym(lib, "_ZN3mrx7Mission4stepEv") == nullptr);
  dlclose(lib);
  CHECK(std::string(mrx_version()).size() > 0);
}

TEST_CASE("creation errors map to status codes") {
  mrx_mission* m = reinterpret_cast<mrx_mission*>(0x1);
  CHECK(mrx_mission_create(nullptr, nullptr, nullptr, &m) == MRX_ERR_INVALID_ARGUMENT);
  CHECK(mrx_mission_create("[terrain]\n", nullptr, nullptr, &m) == MRX_ERR_SCENARIO);
  CHECK(m == nullptr);
  CHECK(std::string(mrx_last_error()).size() > 0);
  CHECK(mrx_mission_create(scenario().c_str(), "bogus_key=1\n", nullptr, &m) == MRX_ERR_CONFIG);
  CHECK(mrx_mission_create(scenario().c_str(), "goal_conflict_distance=99\n", nullptr, &m) == MRX_ERR_CONFIG);
  CHECK(mrx_mission_create(scenario().c_str(), "mode=coverage\n", nullptr, &m) == MRX_ERR_SCENARIO);
  CHECK(mrx_mission_step(nullptr, 1, nullptr) == MRX_ERR_INVALID_ARGUMENT);
  mrx_mission_destroy(nullptr);
}

TEST_CASE("stepping and observing") {
  Handle h;
  int count = 0;
  REQUIRE(mrx_mission_robot_count(h.m, &count) == MRX_OK);
  CHECK(count == 2);
  int finished = -1;
  REQUIRE(mrx_mission_step(h.m, 10, &finished) == MRX_OK);
  CHECK(finished == 0);
  int64_t now = 0;
  mrx_mission_now(h.m, &now);
  CHECK(now == 10);
  mrx_robot_info info{};
  REQUIRE(mrx_mission_robot(h.m, 1, &info) == MRX_OK);
  CHECK(info.id == 1);
  CHECK(info.distance > 0.0);
  CHECK(mrx_mission_robot(h.m, 3, &info) == MRX_ERR_INVALID_ARGUMENT);
  double vol = 0;
  mrx_mission_union_volume(h.m, &vol);
  CHECK(vol > 0.0);
  CHECK(mrx_mission_step(h.m, -1, nullptr) == MRX_ERR_INVALID_ARGUMENT);

  REQUIRE(mrx_mission_run(h.m) == MRX_OK);
  mrx_mission_finished(h.m, &finished);
  CHECK(finished == 1);
  mrx_mission_now(h.m, &now);
  CHECK(now <= 60);
}

TEST_CASE("text outputs") {
  Handle h;
  mrx_mission_step(h.m, 5, nullptr);
  char* s = nullptr;
  REQUIRE(mrx_mission_metrics_csv(h.m, &s) == MRX_OK);
  const auto csv = take(s);
  CHECK(csv.rfind("tick,vol_union", 0) == 0);
  REQUIRE(mrx_mission_summary_json(h.m, &s) == MRX_OK);
  CHECK(take(s).find("\"ticks\"") != std::string::npos);
  REQUIRE(mrx_mission_trace(h.m, &s) == MRX_OK);
  CHECK(take(s).find("\"ev\":\"emit\"") != std::string::npos);
  REQUIRE(mrx_mission_export_point_map(h.m, 2, &s) == MRX_OK);
  CHECK(take(s).find("traversable") != std::string::npos);
  REQUIRE(mrx_mission_grid_snapshot(h.m, 1, &s) == MRX_OK);
  CHECK(take(s).rfind("VOXELGRID", 0) == 0);
  CHECK(mrx_mission_export_point_map(h.m, 0, &s) == MRX_ERR_INVALID_ARGUMENT);

  mrx_mission_set_trace_recording(h.m, 0);
  uint64_t d1 = 0, d2 = 0;
  mrx_mission_trace_digest(h.m, &d1);
  mrx_mission_step(h.m, 1, nullptr);
  mrx_mission_trace_digest(h.m, &d2);
  CHECK(d1 != d2);
}

TEST_CASE("control commands through the C API") {
  Handle h;
  int64_t at = -1;
  CHECK(mrx_mission_control(h.m, "stop", "{\"robot_id\":1}", &at) == MRX_OK);
  CHECK(at == 0);
  mrx_mission_step(h.m, 3, nullptr);
  mrx_robot_info info{};
  mrx_mission_robot(h.m, 1, &info);
  CHECK(info.stopped == 1);
  CHECK(info.distance == 0.0);
  CHECK(mrx_mission_control(h.m, "resume", "{\"robot_id\":1}", nullptr) == MRX_OK);
  CHECK(mrx_mission_control(h.m, "add_poi", "{\"robot_id\":\"all\",\"position\":[10,10,0]}", nullptr) == MRX_OK);
  CHECK(mrx_mission_control(h.m, "stop", "{\"robot_id\":7}", nullptr) == MRX_ERR_CONTROL);
  CHECK(mrx_mission_control(h.m, "fly", "{}", nullptr) == MRX_ERR_CONTROL);
  CHECK(mrx_mission_control(h.m, "stop", "{", nullptr) == MRX_ERR_CONTROL);
  CHECK(std::string(mrx_last_error()).size() > 0);
  CHECK(mrx_mission_control(h.m, nullptr, "{}", nullptr) == MRX_ERR_INVALID_ARGUMENT);
}

TEST_CASE("save and load through the C API") {
  const auto path = (std::filesystem::temp_directory_path() / "mrx_capi_snap.bin").string();
  Handle a, b;
  mrx_mission_step(a.m, 12, nullptr);
  REQUIRE(mrx_mission_save(a.m, path.c_str()) == MRX_OK);
  REQUIRE(mrx_mission_load(b.m, path.c_str()) == MRX_OK);
  mrx_mission_step(a.m, 10, nullptr);
  mrx_mission_step(b.m, 10, nullptr);
  uint64_t da = 0, db = 0;
  mrx_mission_trace_digest(a.m, &da);
  mrx_mission_trace_digest(b.m, &db);
  CHECK(da == db);
  CHECK(mrx_mission_load(b.m, "/nonexistent/snap.bin") == MRX_ERR_IO);
  const std::string args = "{\"path\":\"" + path + "\"}";
  CHECK(mrx_mission_control(b.m, "load", args.c_str(), nullptr) == MRX_OK);
  int64_t now = 0;
  mrx_mission_now(b.m, &now);
  CHECK(now == 12);
  std::filesystem::remove(path);
}

TEST_CASE("serving through the C API") {
  Handle h;
  int port = 0;
  REQUIRE(mrx_mission_serve(h.m, 0, 5, &port) == MRX_OK);
  CHECK(port > 0);
  int handled = -1;
  CHECK(mrx_mission_serve_pump(h.m, &handled) == MRX_OK);
  CHECK(handled == 0);
  CHECK(mrx_mission_step(h.m, 5, nullptr) == MRX_OK);
  CHECK(mrx_mission_serve_stop(h.m) == MRX_OK);
}
