#pragma once

#include <optional>
#include <span>
#include <vector>

#include "mrexplore/config.hpp"
#include "mrexplore/traversability.hpp"

namespace mrx {

struct Path {
  std::vector<Vec3> waypoints;
  std::vector<PointKey> keys;
  double length = 0.0;
  double cost = 0.0;

  bool empty() const { return waypoints.empty(); }
  bool operator==(const Path&) const = default;
};

enum class PlanStatus { kOk, kGoalUnreachable, kGoalSnapFailed };

struct PlanResult {
  PlanStatus status = PlanStatus::kGoalUnreachable;
  std::optional<Path> path;
  bool ok() const { return status == PlanStatus::kOk; }
};

/// Per-node navigation costs for the multi-robot traversable graph. The start
/// node is exempt from teammate inflation so a robot can always leave its spot.
class CostField {
 public:
  CostField(const SurfacePointMap& map, std::span<const TeammateFootprint> footprints, PointKey start);

  double node_cost(PointKey k) const { return node_cost_[index(k)]; }
  /// Edge weight = segment length * (1 + mean of endpoint costs).
  double edge_weight(PointKey a, PointKey b) const;
  const SurfacePointMap& map() const { return *map_; }
  PointKey start() const { return start_; }

 private:
  std::size_t index(PointKey k) const { return static_cast<std::size_t>(k.iy) * map_->nx() + k.ix; }
  const SurfacePointMap* map_;
  PointKey start_;
  std::vector<double> node_cost_;
};

/// Single-source uniform-cost search result over the whole map.
struct ShortestPaths {
  PointKey source;
  std::vector<double> dist;
  std::vector<int> parent;  // flat index, -1 for none
  int nx = 0;

  double cost_to(PointKey k) const { return dist[static_cast<std::size_t>(k.iy) * nx + k.ix]; }
  Path path_to(const SurfacePointMap& map, PointKey k) const;
};

/// Uniform-cost search from `start`; ties pop the lexicographically smaller key
/// first. Stops early once `stop_at` is settled.
ShortestPaths uniform_cost_search(const CostField& field, std::optional<PointKey> stop_at = std::nullopt);

/// Minimum-cost safe path. Throws OffMapError if the start does not snap to a
/// traversable point within the snap radius.
PlanResult plan(const SurfacePointMap& map, std::span<const TeammateFootprint> footprints, const Vec3& start,
                const Vec3& goal, double snap_radius);

/// Geometric length of the shortest traversable path between two points if it
/// is strictly below `limit`; the search stops once it exceeds the limit.
std::optional<double> path_length_below(const SurfacePointMap& map, const Vec3& a, const Vec3& b, double limit,
                                        double snap_radius);

/// Minimum distance between two polylines.
double path_min_separation(const Path& a, const Path& b);
double polyline_min_separation(std::span<const Vec3> a, std::span<const Vec3> b);

struct PlannerFeedback {
  enum class Kind { kIdle, kPlanned, kProgressing, kFailure, kGoalReached, kAborted };
  Kind kind = Kind::kIdle;
  std::optional<Path> path;
  double remaining_cost = 0.0;
  double remaining_length = 0.0;
  Tick tick = 0;
};

const char* to_string(PlannerFeedback::Kind k);

/// Metric-level planner attached to one robot: holds the active goal and
/// re-plans from the robot position every tick.
class PathPlanner {
 public:
  PathPlanner() = default;
  PathPlanner(double snap_radius, double goal_tolerance) : snap_radius_(snap_radius), goal_tolerance_(goal_tolerance) {}

  void set_goal(const Vec3& goal, std::optional<double> yaw = std::nullopt);
  void abort();
  const std::optional<Vec3>& goal() const { return goal_; }
  const std::optional<double>& goal_yaw() const { return goal_yaw_; }
  bool halted() const { return halted_; }
  const std::optional<Path>& current_path() const { return path_; }
  const PlannerFeedback& last_feedback() const { return feedback_; }

  PlannerFeedback replan_tick(Tick now, const Vec3& robot_position, const SurfacePointMap& map,
                              std::span<const TeammateFootprint> footprints);

  /// Marks the goal as reached without planning (arrival detected after motion).
  void mark_reached(Tick now);

  // Persistence access.
  struct State {
    std::optional<Vec3> goal;
    std::optional<double> goal_yaw;
    std::optional<Path> path;
    bool halted = false;
    bool fresh_goal = false;
    bool aborted = false;
    PlannerFeedback feedback;
  };
  State state() const { return {goal_, goal_yaw_, path_, halted_, fresh_goal_, aborted_, feedback_}; }
  void restore(const State& s);

 private:
  double snap_radius_ = 0.5;
  double goal_tolerance_ = 0.375;
  std::optional<Vec3> goal_;
  std::optional<double> goal_yaw_;
  std::optional<Path> path_;
  bool halted_ = false;
  bool fresh_goal_ = false;
  bool aborted_ = false;
  PlannerFeedback feedback_;
};

}  // namespace mrx
