#include "mrexplore/mrexplore.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "mrexplore/mission.hpp"
#include "mrexplore/server.hpp"

struct mrx_mission {
  std::unique_ptr<mrx::Mission> mission;
  std::unique_ptr<mrx::ControlServer> server;
};

namespace {

thread_local std::string g_last_error;

mrx_status fail(mrx_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <class F>
mrx_status guard(F&& f) {
  g_last_error.clear();
  try {
    return f();
  } catch (const mrx::ConfigError& e) {
    return fail(MRX_ERR_CONFIG, e.what());
  } catch (const mrx::ScenarioError& e) {
    return fail(MRX_ERR_SCENARIO, e.what());
  } catch (const mrx::ControlError& e) {
    return fail(MRX_ERR_CONTROL, e.what());
  } catch (const std::exception& e) {
    const std::string what = e.what();
    if (what.rfind("cannot ", 0) == 0 || what.rfind("snapshot", 0) == 0) return fail(MRX_ERR_IO, what);
    return fail(MRX_ERR_INTERNAL, what);
  } catch (...) {
    return fail(MRX_ERR_INTERNAL, "unknown error");
  }
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p) std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

mrx_status put(char** out, const std::string& s) {
  *out = dup(s);
  return *out ? MRX_OK : fail(MRX_ERR_INTERNAL, "out of memory");
}

const mrx::RobotRuntime* find_robot(const mrx_mission* m, int id) {
  if (id < 1 || id > static_cast<int>(m->mission->robots().size())) return nullptr;
  return &m->mission->robots()[static_cast<std::size_t>(id - 1)];
}

void after_tick(mrx_mission* m) {
  if (!m->server) return;
  m->server->publish(*m->mission);
  m->server->pump(*m->mission);
}

}  // namespace

#define MRX_REQUIRE(cond, msg) \
  if (!(cond)) return fail(MRX_ERR_INVALID_ARGUMENT, msg)

extern "C" {

const char* mrx_last_error(void) { return g_last_error.c_str(); }
const char* mrx_version(void) { return "1.0.0"; }
void mrx_string_free(char* s) { std::free(s); }

mrx_status mrx_mission_create(const char* scenario_text, const char* config_text, const char* coverage_map,
                              mrx_mission** out) {
  MRX_REQUIRE(scenario_text && out, "scenario_text and out must not be null");
  *out = nullptr;
  return guard([&] {
    mrx::Scenario sc = mrx::parse_scenario(scenario_text);
    if (config_text) sc.config.apply_overrides(config_text);
    std::optional<std::string> map;
    if (coverage_map) map = coverage_map;
    auto h = std::make_unique<mrx_mission>();
    h->mission = std::make_unique<mrx::Mission>(std::move(sc), std::move(map));
    *out = h.release();
    return MRX_OK;
  });
}

void mrx_mission_destroy(mrx_mission* m) { delete m; }

mrx_status mrx_mission_step(mrx_mission* m, int64_t ticks, int* finished) {
  MRX_REQUIRE(m && ticks >= 0, "invalid mission or tick count");
  return guard([&] {
    for (int64_t i = 0; i < ticks && !m->mission->finished(); ++i) {
      m->mission->step();
      after_tick(m);
    }
    if (finished) *finished = m->mission->finished() ? 1 : 0;
    return MRX_OK;
  });
}

mrx_status mrx_mission_run(mrx_mission* m) {
  MRX_REQUIRE(m, "mission is null");
  return guard([&] {
    while (!m->mission->finished()) {
      m->mission->step();
      after_tick(m);
    }
    return MRX_OK;
  });
}

mrx_status mrx_mission_now(const mrx_mission* m, int64_t* tick) {
  MRX_REQUIRE(m && tick, "null argument");
  *tick = m->mission->now();
  return MRX_OK;
}

mrx_status mrx_mission_finished(const mrx_mission* m, int* finished) {
  MRX_REQUIRE(m && finished, "null argument");
  *finished = m->mission->finished() ? 1 : 0;
  return MRX_OK;
}

mrx_status mrx_mission_robot_count(const mrx_mission* m, int* count) {
  MRX_REQUIRE(m && count, "null argument");
  *count = static_cast<int>(m->mission->robots().size());
  return MRX_OK;
}

mrx_status mrx_mission_robot(const mrx_mission* m, int robot_id, mrx_robot_info* info) {
  MRX_REQUIRE(m && info, "null argument");
  const mrx::RobotRuntime* r = find_robot(m, robot_id);
  if (!r) return fail(MRX_ERR_INVALID_ARGUMENT, "unknown robot id " + std::to_string(robot_id));
  *info = mrx_robot_info{};
  info->id = r->state.id;
  info->x = r->state.position.x;
  info->y = r->state.position.y;
  info->z = r->state.position.z;
  info->yaw = r->state.yaw;
  info->distance = r->distance;
  info->stopped = r->stopped ? 1 : 0;
  info->completed = r->agent.completed() ? 1 : 0;
  if (const auto& g = r->agent.goal()) {
    info->has_goal = 1;
    info->goal_x = g->position.x;
    info->goal_y = g->position.y;
    info->goal_z = g->position.z;
  }
  return MRX_OK;
}

mrx_status mrx_mission_union_volume(const mrx_mission* m, double* volume) {
  MRX_REQUIRE(m && volume, "null argument");
  *volume = m->mission->union_volume();
  return MRX_OK;
}

mrx_status mrx_mission_trace_digest(const mrx_mission* m, uint64_t* digest) {
  MRX_REQUIRE(m && digest, "null argument");
  *digest = m->mission->bus().trace().digest();
  return MRX_OK;
}

mrx_status mrx_mission_control(mrx_mission* m, const char* cmd, const char* args_json, int64_t* applied_tick) {
  MRX_REQUIRE(m && cmd, "null argument");
  return guard([&] {
    const mrx::Tick t = m->mission->apply(mrx::parse_command(cmd, args_json ? args_json : ""));
    if (applied_tick) *applied_tick = t;
    return MRX_OK;
  });
}

mrx_status mrx_mission_metrics_csv(const mrx_mission* m, char** out) {
  MRX_REQUIRE(m && out, "null argument");
  return guard([&] {
    return put(out, mrx::metrics_csv(m->mission->metrics(), static_cast<int>(m->mission->robots().size())));
  });
}

mrx_status mrx_mission_summary_json(const mrx_mission* m, char** out) {
  MRX_REQUIRE(m && out, "null argument");
  return guard([&] { return put(out, mrx::summary_json(m->mission->summary())); });
}

mrx_status mrx_mission_set_trace_recording(mrx_mission* m, int enabled) {
  MRX_REQUIRE(m, "mission is null");
  m->mission->mutable_bus().trace().set_recording(enabled != 0);
  return MRX_OK;
}

mrx_status mrx_mission_trace(const mrx_mission* m, char** out) {
  MRX_REQUIRE(m && out, "null argument");
  return guard([&] {
    std::string s;
    for (const auto& l : m->mission->bus().trace().lines()) s += l + "\n";
    return put(out, s);
  });
}

mrx_status mrx_mission_export_point_map(const mrx_mission* m, int robot_id, char** out) {
  MRX_REQUIRE(m && out, "null argument");
  const mrx::RobotRuntime* r = find_robot(m, robot_id);
  if (!r) return fail(MRX_ERR_INVALID_ARGUMENT, "unknown robot id " + std::to_string(robot_id));
  return guard([&] { return put(out, r->agent.point_map().export_text()); });
}

mrx_status mrx_mission_grid_snapshot(const mrx_mission* m, int robot_id, char** out) {
  MRX_REQUIRE(m && out, "null argument");
  const mrx::RobotRuntime* r = find_robot(m, robot_id);
  if (!r) return fail(MRX_ERR_INVALID_ARGUMENT, "unknown robot id " + std::to_string(robot_id));
  return guard([&] { return put(out, r->agent.grid().snapshot()); });
}

mrx_status mrx_mission_save(const mrx_mission* m, const char* path) {
  MRX_REQUIRE(m && path, "null argument");
  return guard([&] {
    m->mission->save_file(path);
    return MRX_OK;
  });
}

mrx_status mrx_mission_load(mrx_mission* m, const char* path) {
  MRX_REQUIRE(m && path, "null argument");
  return guard([&] {
    m->mission->load_file(path);
    return MRX_OK;
  });
}

mrx_status mrx_mission_serve(mrx_mission* m, int port, int64_t decimation, int* bound_port) {
  MRX_REQUIRE(m && port >= 0 && port < 65536, "invalid mission or port");
  g_last_error.clear();
  try {
    m->server = std::make_unique<mrx::ControlServer>(port, decimation > 0 ? decimation : 5);
  } catch (const std::exception& e) {
    return fail(MRX_ERR_NETWORK, e.what());
  }
  if (bound_port) *bound_port = m->server->port();
  return MRX_OK;
}

mrx_status mrx_mission_serve_pump(mrx_mission* m, int* handled) {
  MRX_REQUIRE(m, "mission is null");
  if (!m->server) return fail(MRX_ERR_NETWORK, "not serving");
  return guard([&] {
    const std::size_t n = m->server->pump(*m->mission);
    if (handled) *handled = static_cast<int>(n);
    return MRX_OK;
  });
}

mrx_status mrx_mission_serve_stop(mrx_mission* m) {
  MRX_REQUIRE(m, "mission is null");
  m->server.reset();
  return MRX_OK;
}

}  // extern "C"
