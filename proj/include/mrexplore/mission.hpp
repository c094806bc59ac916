#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mrexplore/agent.hpp"
#include "mrexplore/network.hpp"
#include "mrexplore/path_planner.hpp"
#include "mrexplore/world.hpp"

namespace mrx {

class ControlError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RobotRuntime {
  RobotState state;
  PathPlanner planner;
  ExplorationAgent agent;
  ScanPtr pending_scan;  // taken at the end of a tick, integrated at the next update
  int next_seq = 0;
  double distance = 0.0;
  bool stopped = false;
  std::optional<Tick> last_move;
};

struct MetricsRow {
  Tick tick = 0;
  double vol_union = 0.0;
  std::vector<double> vol;
  std::vector<double> dist;
  std::size_t conflicts = 0;
  std::size_t goal_goal = 0;
  std::size_t goal_start = 0;
  std::size_t aborts = 0;
  std::size_t failures = 0;
  std::size_t emitted = 0;
  std::size_t drops = 0;
};

struct MissionSummary {
  Tick ticks = 0;
  bool all_completed = false;
  std::optional<Tick> completion_tick;  // last tick any robot moved
  std::vector<std::optional<Tick>> robot_completion;
  double vol_union = 0.0;
  std::vector<double> vol;
  std::vector<double> dist;
  std::size_t goal_goal = 0;
  std::size_t goal_start = 0;
  std::size_t aborts = 0;
  std::size_t failures = 0;
  std::size_t emitted = 0;
  std::size_t drops = 0;
  std::uint64_t trace_digest = 0;
};

namespace control {
struct AddPoi {
  int robot_id = 0;  // 0 = all
  Vec3 position;
  double priority = 1.0;
};
struct SetFence {
  std::optional<Polygon> fence;
};
struct Stop {
  int robot_id = 0;
};
struct Resume {
  int robot_id = 0;
};
struct ForceGoal {
  int robot_id = 0;
  Vec3 goal;
};
struct Save {
  std::string path;
};
struct Load {
  std::string path;
};
}  // namespace control

using ControlCommand =
    std::variant<control::AddPoi, control::SetFence, control::Stop, control::Resume, control::ForceGoal, control::Save,
                 control::Load>;

/// Command encoded as `{"cmd": ..., "args": {...}}`; throws ControlError when malformed.
ControlCommand parse_command(const std::string& cmd, const std::string& args_json);
std::string command_to_json(const ControlCommand& c);

/// Lock-step simulation of m robots sharing a lossy broadcast channel.
class Mission {
 public:
  /// With `coverage_map`, every robot starts from that point map (kept fixed) and
  /// an empty volumetric map.
  explicit Mission(Scenario scenario, std::optional<std::string> coverage_map = std::nullopt);

  /// Runs one tick: deliver, per-robot update/step/replan/advance/scan, collect, then controls.
  void step();
  /// Runs until every robot completed or max_ticks.
  MissionSummary run();
  bool finished() const;

  /// Queues a command for the next tick boundary; validation happens here.
  void enqueue(ControlCommand c);
  /// Applies a command immediately (between ticks); returns the applying tick.
  Tick apply(const ControlCommand& c);

  Tick now() const { return now_; }
  const Scenario& scenario() const { return scenario_; }
  const MissionConfig& config() const { return scenario_.config; }
  const std::vector<RobotRuntime>& robots() const { return robots_; }
  std::vector<RobotRuntime>& mutable_robots() { return robots_; }
  const RobotRuntime& robot(int id) const;
  const LossyBus& bus() const { return bus_; }
  LossyBus& mutable_bus() { return bus_; }
  const std::vector<MetricsRow>& metrics() const { return metrics_; }
  const std::optional<Polygon>& fence() const { return fence_; }
  MissionSummary summary() const;
  double union_volume() const;

  /// Messages emitted during the most recent tick (for telemetry).
  const std::vector<BroadcastMessage>& last_emitted() const { return last_emitted_; }

  /// Invoked after every tick, before queued commands are applied.
  void set_tick_observer(std::function<void(const Mission&)> f) { observer_ = std::move(f); }

  std::vector<std::uint8_t> save() const;
  void load(std::span<const std::uint8_t> bytes);
  void save_file(const std::string& path) const;
  void load_file(const std::string& path);

  friend struct MissionAccess;

 private:
  void validate(const ControlCommand& c) const;
  ScanPtr take_scan(RobotRuntime& r, Tick t);
  MetricsRow make_row() const;

  Scenario scenario_;
  std::vector<RobotRuntime> robots_;
  LossyBus bus_;
  Tick now_ = 0;
  std::optional<Polygon> fence_;
  std::vector<MetricsRow> metrics_;
  std::vector<ControlCommand> queue_;
  std::vector<BroadcastMessage> last_emitted_;
  std::function<void(const Mission&)> observer_;
};

std::string metrics_csv(const std::vector<MetricsRow>& rows, int robot_count);
std::string summary_json(const MissionSummary& s);

}  // namespace mrx
