#pragma once

#include <map>
#include <optional>
#include <vector>

#include "mrexplore/messages.hpp"

namespace mrx {

/// What robot j believes about teammate i: (p, g, tau, c, t).
struct TeammateTuple {
  std::optional<Vec3> position;
  std::optional<Vec3> goal;
  std::optional<Path> path;
  std::optional<double> cost;
  std::optional<Tick> stamp;

  bool has_goal() const { return goal.has_value() && cost.has_value(); }
  bool operator==(const TeammateTuple&) const = default;
};

class TeamModel {
 public:
  TeamModel() = default;
  TeamModel(int own_id, Tick expiration) : own_id_(own_id), expiration_(expiration) {}

  int own_id() const { return own_id_; }
  Tick expiration() const { return expiration_; }

  /// Table III semantics. Messages from self, and messages older than the
  /// stored stamp, are ignored. Returns true if the model changed.
  bool apply(const BroadcastMessage& msg);

  /// Resets every tuple whose stamp is more than the expiration time old.
  void expire(Tick now);

  bool valid(int id, Tick now) const;
  const TeammateTuple* find(int id) const;
  const std::map<int, TeammateTuple>& tuples() const { return tuples_; }

  /// Teammate positions and selected paths, inflated by `safety_distance`.
  std::vector<TeammateFootprint> footprints(Tick now, double safety_distance) const;

  bool operator==(const TeamModel&) const = default;

  // Persistence access.
  std::map<int, TeammateTuple>& mutable_tuples() { return tuples_; }

 private:
  int own_id_ = 0;
  Tick expiration_ = 50;
  std::map<int, TeammateTuple> tuples_;
};

TeamModel apply_message(TeamModel model, const BroadcastMessage& msg);
TeamModel expire(TeamModel model, Tick now);

enum class ConflictKind { kNone, kGoalGoal, kGoalStart };

struct NodeConflict {
  ConflictKind kind = ConflictKind::kNone;
  int teammate = 0;
  explicit operator bool() const { return kind != ConflictKind::kNone; }
};

const char* to_string(ConflictKind k);

/// Scans teammates in ascending id order and reports the first node conflict:
/// goal-goal when the goals are joined by a traversable path shorter than D_g and
/// this robot has the higher cost (ids break ties), goal-start when the own goal
/// is joined to a teammate position by such a path. Invalid tuples are skipped.
NodeConflict detect_node_conflict(const TeamModel& model, Tick now, const Vec3& own_goal, double own_cost,
                                  const SurfacePointMap& map, double goal_distance, double snap_radius);

}  // namespace mrx
