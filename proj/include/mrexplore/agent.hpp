#pragma once

#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "mrexplore/coordination.hpp"
#include "mrexplore/exploration.hpp"
#include "mrexplore/network.hpp"
#include "mrexplore/path_planner.hpp"

namespace mrx {

enum class GoalSource : std::uint8_t { kNone, kForward, kBacktrack, kForced };

struct ViewGoal {
  Vec3 position;
  double yaw = 0.0;
  GoalSource source = GoalSource::kNone;
};

struct AgentCounters {
  std::size_t goal_goal_conflicts = 0;
  std::size_t goal_start_conflicts = 0;
  std::size_t aborts = 0;
  std::size_t planner_failures = 0;
  std::size_t revalidation_replans = 0;
  std::size_t malformed_messages = 0;
  std::size_t scans_integrated = 0;
  bool operator==(const AgentCounters&) const = default;
};

/// Result of one backtracking evaluation.
struct BacktrackResult {
  std::vector<FrontierCluster> clusters;
  int best = -1;  // index into clusters, -1 if none is usable
};

using ScanKey = std::pair<int, int>;  // (robot_id, seq)

/// Per-robot exploration agent: owns H_j, M_j, T_j, K_j, Y_j and P_j.
class ExplorationAgent {
 public:
  ExplorationAgent() = default;
  ExplorationAgent(int id, int robot_count, const MissionConfig& cfg, const GridGeometry& grid_geometry,
                   double world_size_x, double world_size_y);

  int id() const { return id_; }

  /// Algorithm 1 lines 1-4 plus the first scan taken at q_0.
  void initialize(const RobotState& state, Tick now, ScanPtr first_scan);

  /// Algorithm 2: integrates scans, refreshes the team model, answers tree
  /// messages, consumes POIs and sets the decision flags.
  void update(Tick now, const RobotState& state, std::span<const BroadcastMessage> inbox,
              const PlannerFeedback& feedback, ScanPtr own_scan);

  /// True when the agent loop runs this tick (not sleeping, or an event is pending).
  bool awake(Tick now) const;

  /// Algorithm 1 lines 6-25 for one iteration.
  void step(Tick now, const RobotState& state, PathPlanner& planner);

  /// Algorithm 3; falls back to backtracking and, when that finds nothing, to a
  /// sweep of every reachable map point before declaring completion.
  std::optional<ViewGoal> plan_next_best_view(Tick now, const Vec3& robot_position,
                                              std::span<const Exclusion> exclusions);

  /// Algorithm 5 against the current maps, with costs from `robot_position`.
  BacktrackResult backtracking_strategy(Tick now, const Vec3& robot_position, std::span<const Exclusion> exclusions);

  /// Operator and test hooks.
  void add_poi(const Vec3& position, double priority, Tick now, PoiSource source = PoiSource::kOperator);
  void set_fence(std::optional<Polygon> fence) { fence_ = std::move(fence); }
  void force_goal(const Vec3& goal) { forced_goal_ = goal; }
  /// Replaces M_j; with `freeze` set, own scans no longer modify it.
  void import_point_map(const std::string& text, bool freeze = false);
  bool map_frozen() const { return map_frozen_; }

  std::vector<BroadcastMessage> take_outbox();

  // Observers.
  const VoxelGrid& grid() const { return grid_; }
  const SurfacePointMap& point_map() const { return map_; }
  const TeamModel& team() const { return team_; }
  const ExplorationTree& exploration_tree() const { return tree_; }
  const FrontierTree& frontier_tree() const { return frontier_; }
  const PoiQueue& pois() const { return pois_; }
  const std::optional<Polygon>& fence() const { return fence_; }
  const std::optional<ViewGoal>& goal() const { return goal_; }
  const SearchTree& last_search_tree() const { return last_tree_; }
  bool completed() const { return completed_; }
  const AgentCounters& counters() const { return counters_; }
  const std::set<ScanKey>& integrated_scans() const { return integrated_; }
  const std::map<int, ScanPtr>& own_scans() const { return own_scans_; }
  const std::vector<std::pair<Tick, PoiEntry>>& poi_removals() const { return poi_removals_; }
  std::vector<TeammateFootprint> footprints(Tick now) const;
  int current_node() const { return current_node_; }

  struct Flags {
    bool goal_reached = false;
    bool planning_failure = false;
    NodeConflict conflict;
    bool revalidate_replan = false;
    bool operator==(const Flags&) const = default;
  };
  const Flags& flags() const { return flags_; }

  /// Serializable state not covered by the observers above.
  struct Internal {
    Tick next_wake = 0;
    Tick last_revalidate = 0;
    bool map_dirty = false;
    std::optional<Vec3> forced_goal;
    std::optional<Vec3> aborted_goal;
  };
  Internal internal() const { return {next_wake_, last_revalidate_, map_dirty_, forced_goal_, aborted_goal_}; }

  friend struct AgentAccess;

 private:
  void integrate(const ScanPtr& scan, bool own);
  std::vector<Exclusion> replan_exclusions(Tick now) const;
  void dispatch(Tick now, PathPlanner& planner, std::optional<ViewGoal> g);
  void broadcast(BroadcastMessage msg) { outbox_.push_back(std::move(msg)); }

  int id_ = 0;
  int robot_count_ = 1;
  MissionConfig cfg_;
  SensorSpec spec_;
  VoxelGrid grid_;
  SurfacePointMap map_;
  TeamModel team_;
  ExplorationTree tree_;
  FrontierTree frontier_;
  PoiQueue pois_;
  Rng rng_;
  std::optional<Polygon> fence_;

  std::map<int, ScanPtr> own_scans_;  // by seq
  std::set<ScanKey> integrated_;
  int last_own_seq_ = -1;

  int current_node_ = -1;
  std::optional<ViewGoal> goal_;
  Flags flags_;
  bool completed_ = false;
  bool map_dirty_ = false;
  bool map_frozen_ = false;
  Tick next_wake_ = 0;
  Tick last_revalidate_ = 0;
  std::optional<Vec3> forced_goal_;
  std::optional<Vec3> aborted_goal_;
  double own_cost_ = std::numeric_limits<double>::infinity();
  std::optional<Path> own_path_;

  SearchTree last_tree_;
  AgentCounters counters_;
  std::vector<std::pair<Tick, PoiEntry>> poi_removals_;
  std::vector<BroadcastMessage> outbox_;
};

}  // namespace mrx
