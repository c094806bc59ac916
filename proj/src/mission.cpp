#include "mrexplore/mission.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <sstream>

#include "json.hpp"

namespace mrx {

using nlohmann::json;

namespace {

const RobotState& robot_checked(const std::vector<RobotRuntime>& robots, int id) {
  if (id < 1 || id > static_cast<int>(robots.size())) throw ControlError("unknown robot id " + std::to_string(id));
  return robots[static_cast<std::size_t>(id - 1)].state;
}

Vec3 vec_from(const json& j) {
  if (!j.is_array() || j.size() < 2 || j.size() > 3) throw ControlError("position must be [x, y] or [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j.size() == 3 ? j[2].get<double>() : 0.0};
}

}  // namespace

ControlCommand parse_command(const std::string& cmd, const std::string& args_json) {
  json a;
  try {
    a = args_json.empty() ? json::object() : json::parse(args_json);
    if (!a.is_object()) throw ControlError("args must be an object");
    if (cmd == "add_poi") {
      control::AddPoi c;
      const json& rid = a.at("robot_id");
      c.robot_id = rid.is_string() && rid.get<std::string>() == "all" ? 0 : rid.get<int>();
      if (c.robot_id == 0 && !rid.is_string()) throw ControlError("robot_id must be a positive id or \"all\"");
      c.position = vec_from(a.at("position"));
      c.priority = a.value("priority", 1.0);
      return c;
    }
    if (cmd == "set_fence") {
      control::SetFence c;
      if (a.contains("polygon") && !a["polygon"].is_null()) {
        std::vector<Vec2> v;
        for (const auto& p : a["polygon"]) {
          if (!p.is_array() || p.size() != 2) throw ControlError("polygon vertices must be [x, y]");
          v.push_back({p[0].get<double>(), p[1].get<double>()});
        }
        c.fence = Polygon(std::move(v));
      }
      return c;
    }
    if (cmd == "stop") return control::Stop{a.at("robot_id").get<int>()};
    if (cmd == "resume") return control::Resume{a.at("robot_id").get<int>()};
    if (cmd == "force_goal") return control::ForceGoal{a.at("robot_id").get<int>(), vec_from(a.at("goal"))};
    if (cmd == "save") return control::Save{a.at("path").get<std::string>()};
    if (cmd == "load") return control::Load{a.at("path").get<std::string>()};
  } catch (const json::exception& e) {
    throw ControlError(std::string("malformed arguments: ") + e.what());
  }
  throw ControlError("unknown command '" + cmd + "'");
}

std::string command_to_json(const ControlCommand& c) {
  json j;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, control::AddPoi>) {
          j = {{"cmd", "add_poi"},
               {"args",
                {{"robot_id", v.robot_id == 0 ? json("all") : json(v.robot_id)},
                 {"position", {v.position.x, v.position.y, v.position.z}},
                 {"priority", v.priority}}}};
        } else if constexpr (std::is_same_v<T, control::SetFence>) {
          json poly = nullptr;
          if (v.fence) {
            poly = json::array();
            for (const auto& p : v.fence->vertices()) poly.push_back({p.x, p.y});
          }
          j = {{"cmd", "set_fence"}, {"args", {{"polygon", poly}}}};
        } else if constexpr (std::is_same_v<T, control::Stop>) {
          j = {{"cmd", "stop"}, {"args", {{"robot_id", v.robot_id}}}};
        } else if constexpr (std::is_same_v<T, control::Resume>) {
          j = {{"cmd", "resume"}, {"args", {{"robot_id", v.robot_id}}}};
        } else if constexpr (std::is_same_v<T, control::ForceGoal>) {
          j = {{"cmd", "force_goal"}, {"args", {{"robot_id", v.robot_id}, {"goal", {v.goal.x, v.goal.y, v.goal.z}}}}};
        } else if constexpr (std::is_same_v<T, control::Save>) {
          j = {{"cmd", "save"}, {"args", {{"path", v.path}}}};
        } else {
          j = {{"cmd", "load"}, {"args", {{"path", v.path}}}};
        }
      },
      c);
  return j.dump();
}

Mission::Mission(Scenario scenario, std::optional<std::string> coverage_map) : scenario_(std::move(scenario)) {
  MissionConfig& cfg = scenario_.config;
  cfg.validate();
  const int m = static_cast<int>(scenario_.robots.size());
  if (m < 1) throw ScenarioError("scenario has no robots");
  if (cfg.mode == MissionMode::kCoverage && !coverage_map) throw ScenarioError("coverage mode needs a point map");
  for (int i = 0; i < m; ++i) {
    RobotState& s = scenario_.robots[static_cast<std::size_t>(i)];
    if (s.id != i + 1) throw ScenarioError("robot ids must be 1..m in order");
    if (!is_valid_configuration(scenario_.world, s, cfg, 0)) {
      throw ScenarioError("robot " + std::to_string(s.id) + " starts in an invalid configuration");
    }
  }
  if (cfg.fence && !cfg.fence->is_simple()) throw ScenarioError("fence polygon is not simple");
  fence_ = cfg.fence;

  bus_ = LossyBus(m, cfg.loss_probability, cfg.delivery_delay, Rng::stream(cfg.mission_seed, 0), cfg.lossless_tree);
  const GridGeometry geom = GridGeometry::for_world(scenario_.world, cfg);
  robots_.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    RobotRuntime& r = robots_[static_cast<std::size_t>(i)];
    r.state = scenario_.robots[static_cast<std::size_t>(i)];
    r.planner = PathPlanner(cfg.snap_radius(), cfg.goal_tolerance());
    r.agent = ExplorationAgent(r.state.id, m, cfg, geom, scenario_.world.size_x(), scenario_.world.size_y());
    if (coverage_map) r.agent.import_point_map(*coverage_map, true);
    r.agent.initialize(r.state, 0, take_scan(r, 0));
  }
  for (auto& r : robots_) {
    for (const auto& msg : r.agent.take_outbox()) bus_.submit(msg, 0);
  }
}

const RobotRuntime& Mission::robot(int id) const {
  robot_checked(robots_, id);
  return robots_[static_cast<std::size_t>(id - 1)];
}

ScanPtr Mission::take_scan(RobotRuntime& r, Tick t) {
  Scan s = simulate_scan(scenario_.world, r.state, SensorSpec::from_config(scenario_.config), t);
  s.robot_id = r.state.id;
  s.seq = r.next_seq++;
  return std::make_shared<const Scan>(std::move(s));
}

void Mission::step() {
  const MissionConfig& cfg = scenario_.config;
  const Tick t = now_ + 1;
  auto inboxes = bus_.tick_deliver(t);
  std::vector<BroadcastMessage> out;
  for (auto& r : robots_) {
    const int id = r.state.id;
    PlannerFeedback fb = r.planner.last_feedback();
    if (fb.tick != t - 1) fb = PlannerFeedback{};
    r.agent.update(t, r.state, inboxes[static_cast<std::size_t>(id)], fb, std::move(r.pending_scan));
    r.pending_scan.reset();
    if (!r.stopped) {
      if (r.agent.awake(t)) r.agent.step(t, r.state, r.planner);
      const auto goal = r.planner.goal();
      const auto yaw = r.planner.goal_yaw();
      const PlannerFeedback now_fb = r.planner.replan_tick(t, r.state.position, r.agent.point_map(),
                                                            r.agent.footprints(t));
      const Vec3 before = r.state.position;
      bool arrived = false;
      if (now_fb.kind == PlannerFeedback::Kind::kGoalReached && goal) {
        const Vec3 target[1] = {*goal};
        r.state = advance_robot(scenario_.world, r.state, target, cfg.speed, yaw, cfg.max_yaw_rate);
        arrived = true;
      } else if (!r.planner.halted() && r.planner.current_path()) {
        r.state = advance_robot(scenario_.world, r.state, r.planner.current_path()->waypoints, cfg.speed, yaw,
                                cfg.max_yaw_rate);
      }
      const double moved = distance(before, r.state.position);
      if (moved > 0.0) {
        r.distance += moved;
        r.last_move = t;
      }
      if (arrived) r.pending_scan = take_scan(r, t);
    }
    for (auto& msg : r.agent.take_outbox()) out.push_back(std::move(msg));
    out.push_back(BroadcastMessage::position(id, t, r.state.position));
    if (periodic_tree_broadcast(id, t, cfg.tree_period)) {
      out.push_back(BroadcastMessage::tree(id, t, r.agent.exploration_tree().info()));
    }
  }
  for (const auto& msg : out) bus_.submit(msg, t);
  last_emitted_ = std::move(out);
  now_ = t;
  metrics_.push_back(make_row());
  if (observer_) observer_(*this);
  auto queued = std::move(queue_);
  queue_.clear();
  for (const auto& c : queued) apply(c);
}

bool Mission::finished() const {
  if (now_ >= scenario_.config.max_ticks) return true;
  return std::all_of(robots_.begin(), robots_.end(), [](const RobotRuntime& r) {
    return r.agent.completed() && !r.pending_scan && !r.agent.goal();
  });
}

MissionSummary Mission::run() {
  while (!finished()) step();
  return summary();
}

void Mission::validate(const ControlCommand& c) const {
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, control::AddPoi>) {
          if (v.robot_id != 0) robot_checked(robots_, v.robot_id);
        } else if constexpr (std::is_same_v<T, control::SetFence>) {
          if (v.fence && !v.fence->is_simple()) throw ControlError("malformed polygon: fence must be simple");
        } else if constexpr (std::is_same_v<T, control::Save> || std::is_same_v<T, control::Load>) {
          if (v.path.empty()) throw ControlError("empty path");
        } else {
          robot_checked(robots_, v.robot_id);
        }
      },
      c);
}

void Mission::enqueue(ControlCommand c) {
  validate(c);
  queue_.push_back(std::move(c));
}

Tick Mission::apply(const ControlCommand& c) {
  validate(c);
  bus_.trace().command(now_, command_to_json(c));
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, control::AddPoi>) {
          for (auto& r : robots_) {
            if (v.robot_id == 0 || v.robot_id == r.state.id) r.agent.add_poi(v.position, v.priority, now_);
          }
        } else if constexpr (std::is_same_v<T, control::SetFence>) {
          fence_ = v.fence;
          for (auto& r : robots_) r.agent.set_fence(v.fence);
        } else if constexpr (std::is_same_v<T, control::Stop>) {
          robots_[static_cast<std::size_t>(v.robot_id - 1)].stopped = true;
        } else if constexpr (std::is_same_v<T, control::Resume>) {
          robots_[static_cast<std::size_t>(v.robot_id - 1)].stopped = false;
        } else if constexpr (std::is_same_v<T, control::ForceGoal>) {
          robots_[static_cast<std::size_t>(v.robot_id - 1)].agent.force_goal(v.goal);
        } else if constexpr (std::is_same_v<T, control::Save>) {
          save_file(v.path);
        } else {
          load_file(v.path);
        }
      },
      c);
  return now_;
}

double Mission::union_volume() const {
  if (robots_.empty()) return 0.0;
  const VoxelGrid& g0 = robots_[0].agent.grid();
  const std::size_t n = g0.geometry().size();
  std::size_t known = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& r : robots_) {
      if (r.agent.grid().raw_states()[i] != static_cast<std::uint8_t>(VoxelState::kUnknown)) {
        ++known;
        break;
      }
    }
  }
  return static_cast<double>(known) * g0.geometry().voxel_volume();
}

MetricsRow Mission::make_row() const {
  MetricsRow row;
  row.tick = now_;
  row.vol_union = union_volume();
  for (const auto& r : robots_) {
    row.vol.push_back(r.agent.grid().known_volume());
    row.dist.push_back(r.distance);
    const AgentCounters& c = r.agent.counters();
    row.goal_goal += c.goal_goal_conflicts;
    row.goal_start += c.goal_start_conflicts;
    row.aborts += c.aborts;
    row.failures += c.planner_failures;
  }
  row.conflicts = row.goal_goal + row.goal_start;
  row.emitted = bus_.trace().emitted();
  row.drops = bus_.trace().dropped();
  return row;
}

MissionSummary Mission::summary() const {
  MissionSummary s;
  s.ticks = now_;
  s.all_completed = std::all_of(robots_.begin(), robots_.end(),
                                [](const RobotRuntime& r) { return r.agent.completed(); });
  const MetricsRow row = make_row();
  s.vol_union = row.vol_union;
  s.vol = row.vol;
  s.dist = row.dist;
  s.goal_goal = row.goal_goal;
  s.goal_start = row.goal_start;
  s.aborts = row.aborts;
  s.failures = row.failures;
  s.emitted = row.emitted;
  s.drops = row.drops;
  for (const auto& r : robots_) {
    s.robot_completion.push_back(r.agent.completed() ? r.last_move : std::nullopt);
    if (r.last_move && (!s.completion_tick || *r.last_move > *s.completion_tick)) s.completion_tick = r.last_move;
  }
  s.trace_digest = bus_.trace().digest();
  return s;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows, int robot_count) {
  std::ostringstream os;
  os << "tick,vol_union";
  for (int i = 1; i <= robot_count; ++i) os << ",vol_r" << i;
  for (int i = 1; i <= robot_count; ++i) os << ",dist_r" << i;
  os << ",conflicts,goal_goal,goal_start,aborts,failures,emitted,drops\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  for (const auto& r : rows) {
    os << r.tick << ',' << num(r.vol_union);
    for (double v : r.vol) os << ',' << num(v);
    for (double v : r.dist) os << ',' << num(v);
    os << ',' << r.conflicts << ',' << r.goal_goal << ',' << r.goal_start << ',' << r.aborts << ',' << r.failures
       << ',' << r.emitted << ',' << r.drops << '\n';
  }
  return os.str();
}

std::string summary_json(const MissionSummary& s) {
  json j;
  j["ticks"] = s.ticks;
  j["all_completed"] = s.all_completed;
  j["completion_tick"] = s.completion_tick ? json(*s.completion_tick) : json(nullptr);
  json rc = json::array();
  for (const auto& c : s.robot_completion) rc.push_back(c ? json(*c) : json(nullptr));
  j["robot_completion"] = rc;
  j["vol_union"] = s.vol_union;
  j["vol"] = s.vol;
  j["dist"] = s.dist;
  j["conflicts"] = s.goal_goal + s.goal_start;
  j["goal_goal"] = s.goal_goal;
  j["goal_start"] = s.goal_start;
  j["aborts"] = s.aborts;
  j["failures"] = s.failures;
  j["emitted"] = s.emitted;
  j["drops"] = s.drops;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, s.trace_digest);
  j["trace_digest"] = buf;
  return j.dump(2);
}

}  // namespace mrx
