#include "mrexplore/coordination.hpp"

namespace mrx {

bool TeamModel::apply(const BroadcastMessage& msg) {
  if (msg.robot_id == own_id_) return false;
  switch (msg.type) {
    case MessageType::kScan:
    case MessageType::kTree:
      return false;
    default:
      break;
  }
  TeammateTuple& t = tuples_[msg.robot_id];
  if (t.stamp && msg.emit_tick < *t.stamp) return false;
  switch (msg.type) {
    case MessageType::kSelected: {
      const auto& p = std::get<SelectedPayload>(msg.payload);
      t.goal = p.goal;
      t.path = p.path;
      t.cost = p.cost;
      break;
    }
    case MessageType::kReached:
    case MessageType::kPlanned:
    case MessageType::kAborted:
      t.goal.reset();
      t.path.reset();
      t.cost.reset();
      break;
    case MessageType::kPosition:
      t.position = std::get<PositionPayload>(msg.payload).position;
      break;
    default:
      break;
  }
  t.stamp = msg.emit_tick;
  return true;
}

void TeamModel::expire(Tick now) {
  for (auto& [id, t] : tuples_) {
    if (t.stamp && now - *t.stamp > expiration_) t = TeammateTuple{};
  }
}

bool TeamModel::valid(int id, Tick now) const {
  const auto* t = find(id);
  return t && t->stamp && now - *t->stamp <= expiration_;
}

const TeammateTuple* TeamModel::find(int id) const {
  const auto it = tuples_.find(id);
  return it == tuples_.end() ? nullptr : &it->second;
}

std::vector<TeammateFootprint> TeamModel::footprints(Tick now, double safety_distance) const {
  std::vector<TeammateFootprint> out;
  for (const auto& [id, t] : tuples_) {
    if (!valid(id, now) || !t.position) continue;
    TeammateFootprint f;
    f.robot_id = id;
    f.position = *t.position;
    if (t.path) f.path = t.path->waypoints;
    f.inflation_radius = safety_distance;
    out.push_back(std::move(f));
  }
  return out;
}

TeamModel apply_message(TeamModel model, const BroadcastMessage& msg) {
  model.apply(msg);
  return model;
}

TeamModel expire(TeamModel model, Tick now) {
  model.expire(now);
  return model;
}

const char* to_string(ConflictKind k) {
  switch (k) {
    case ConflictKind::kNone: return "none";
    case ConflictKind::kGoalGoal: return "goal_goal";
    case ConflictKind::kGoalStart: return "goal_start";
  }
  return "none";
}

NodeConflict detect_node_conflict(const TeamModel& model, Tick now, const Vec3& own_goal, double own_cost,
                                  const SurfacePointMap& map, double goal_distance, double snap_radius) {
  for (const auto& [id, t] : model.tuples()) {
    if (id == model.own_id() || !model.valid(id, now)) continue;
    if (t.has_goal()) {
      const bool lower_priority = own_cost > *t.cost || (own_cost == *t.cost && model.own_id() > id);
      if (lower_priority && path_length_below(map, own_goal, *t.goal, goal_distance, snap_radius)) {
        return {ConflictKind::kGoalGoal, id};
      }
    }
    if (t.position && path_length_below(map, own_goal, *t.position, goal_distance, snap_radius)) {
      return {ConflictKind::kGoalStart, id};
    }
  }
  return {};
}

}  // namespace mrx
