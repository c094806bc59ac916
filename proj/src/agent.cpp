#include "mrexplore/agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mrx {

ExplorationAgent::ExplorationAgent(int id, int robot_count, const MissionConfig& cfg, const GridGeometry& grid_geometry,
                                   double world_size_x, double world_size_y)
    : id_(id),
      robot_count_(robot_count),
      cfg_(cfg),
      spec_(SensorSpec::from_config(cfg)),
      grid_(grid_geometry),
      map_(world_size_x, world_size_y, TraversabilityParams::from_config(cfg)),
      team_(id, cfg.expiration_ticks),
      rng_(Rng::stream(cfg.mission_seed, static_cast<std::uint64_t>(id))),
      fence_(cfg.fence) {}

void ExplorationAgent::initialize(const RobotState& state, Tick now, ScanPtr first_scan) {
  if (first_scan) integrate(first_scan, true);
  current_node_ = tree_.add_root(state.position, state.yaw, now, last_own_seq_);
  goal_.reset();
  flags_ = {};
  flags_.goal_reached = true;
  next_wake_ = now;
}

void ExplorationAgent::integrate(const ScanPtr& scan, bool own) {
  const ScanKey key{scan->robot_id, scan->seq};
  if (!integrated_.insert(key).second) return;
  grid_.integrate(*scan);
  ++counters_.scans_integrated;
  map_dirty_ = true;
  if (own) {
    if (!map_frozen_) map_.update_from_scan(*scan);
    own_scans_[scan->seq] = scan;
    last_own_seq_ = scan->seq;
    const Vec3 view = scan->origin - Vec3{0, 0, spec_.mount_height};
    if (!tree_.empty()) current_node_ = tree_.add(current_node_, view, scan->yaw, scan->timestamp, scan->seq);
    broadcast(BroadcastMessage::scan(id_, scan->timestamp, scan, view));
  }
}

std::vector<TeammateFootprint> ExplorationAgent::footprints(Tick now) const {
  return team_.footprints(now, cfg_.safety());
}

void ExplorationAgent::update(Tick now, const RobotState& state, std::span<const BroadcastMessage> inbox,
                              const PlannerFeedback& feedback, ScanPtr own_scan) {
  if (own_scan) integrate(own_scan, true);
  for (const auto& msg : inbox) {
    if (!msg.well_formed(robot_count_) || msg.robot_id == id_) {
      ++counters_.malformed_messages;
      continue;
    }
    if (msg.type == MessageType::kScan) {
      const auto& p = std::get<ScanPayload>(msg.payload);
      if (p.scan->robot_id != id_) integrate(p.scan, false);
    } else if (msg.type == MessageType::kTree) {
      const auto& remote = std::get<TreePayload>(msg.payload).nodes;
      const auto own = tree_.info();
      for (std::size_t idx : map_overlap_check_and_sync(own, remote, cfg_.sensor_range)) {
        const auto it = own_scans_.find(own[idx].seq);
        if (it == own_scans_.end()) continue;
        broadcast(BroadcastMessage::scan(id_, now, it->second, own[idx].position, msg.robot_id));
      }
    } else {
      team_.apply(msg);
    }
  }
  team_.expire(now);

  for (auto& e : pois_.remove_within(state.position, cfg_.sensor_range)) poi_removals_.emplace_back(now, e);

  if (!goal_) return;
  switch (feedback.kind) {
    case PlannerFeedback::Kind::kGoalReached:
      flags_.goal_reached = true;
      break;
    case PlannerFeedback::Kind::kFailure:
      flags_.planning_failure = true;
      break;
    case PlannerFeedback::Kind::kPlanned:
    case PlannerFeedback::Kind::kProgressing:
      // The priority cost is fixed when the goal is first planned.
      if (!std::isfinite(own_cost_)) own_cost_ = feedback.remaining_length;
      own_path_ = feedback.path;
      break;
    default:
      break;
  }
  if (flags_.goal_reached) {
    flags_.conflict = {};
    return;
  }
  flags_.conflict = detect_node_conflict(team_, now, goal_->position, own_cost_, map_, cfg_.goal_distance(),
                                         cfg_.snap_radius());

  if (goal_->source == GoalSource::kBacktrack && now - last_revalidate_ >= cfg_.revalidate_ticks) {
    last_revalidate_ = now;
    const BacktrackResult bt = backtracking_strategy(now, state.position, {});
    int cur = -1;
    double cur_d = cfg_.cluster_radius;
    for (std::size_t i = 0; i < bt.clusters.size(); ++i) {
      if (!bt.clusters[i].goal_key) continue;
      const double d = distance(bt.clusters[i].goal, goal_->position);
      if (d <= cur_d) {
        cur_d = d;
        cur = static_cast<int>(i);
      }
    }
    bool replan = cur < 0;
    if (!replan && bt.best >= 0 && bt.best != cur) {
      const double u_cur = bt.clusters[static_cast<std::size_t>(cur)].utility;
      const double u_best = bt.clusters[static_cast<std::size_t>(bt.best)].utility;
      replan = u_cur < cfg_.utility_min || u_best >= cfg_.hysteresis * u_cur;
    }
    flags_.revalidate_replan = replan;
  }
}

bool ExplorationAgent::awake(Tick now) const {
  return now >= next_wake_ || flags_.goal_reached || flags_.planning_failure || flags_.conflict ||
         flags_.revalidate_replan || forced_goal_.has_value();
}

std::vector<Exclusion> ExplorationAgent::replan_exclusions(Tick now) const {
  std::vector<Exclusion> out;
  for (const auto& [id, t] : team_.tuples()) {
    if (!team_.valid(id, now)) continue;
    if (t.goal) out.push_back({*t.goal, cfg_.goal_distance()});
    if (t.position) out.push_back({*t.position, cfg_.goal_distance()});
  }
  if (aborted_goal_) out.push_back({*aborted_goal_, cfg_.snap_radius()});
  return out;
}

void ExplorationAgent::dispatch(Tick now, PathPlanner& planner, std::optional<ViewGoal> g) {
  goal_ = std::move(g);
  flags_ = {};
  own_cost_ = std::numeric_limits<double>::infinity();
  own_path_.reset();
  next_wake_ = now + 1;
  if (goal_) {
    completed_ = false;
    if (goal_->source == GoalSource::kBacktrack) last_revalidate_ = now;
    broadcast(BroadcastMessage::goal(MessageType::kPlanned, id_, now, goal_->position));
    planner.set_goal(goal_->position, goal_->yaw);
  } else {
    completed_ = true;
    map_dirty_ = false;
  }
}

void ExplorationAgent::step(Tick now, const RobotState& state, PathPlanner& planner) {
  if (forced_goal_) {
    const auto k = map_.nearest_traversable(*forced_goal_);
    forced_goal_.reset();
    if (k) {
      if (goal_) {
        planner.abort();
        broadcast(BroadcastMessage::goal(MessageType::kAborted, id_, now, goal_->position));
      }
      const Vec3 p = map_.at(*k).position;
      dispatch(now, planner, ViewGoal{p, std::atan2(p.y - state.position.y, p.x - state.position.x),
                                      GoalSource::kForced});
      return;
    }
  }

  if (flags_.goal_reached) {
    const Vec3 reached = goal_ ? goal_->position : tree_.nodes()[static_cast<std::size_t>(current_node_)].position;
    broadcast(BroadcastMessage::goal(MessageType::kReached, id_, now, reached));
    aborted_goal_.reset();
    dispatch(now, planner, plan_next_best_view(now, state.position, {}));
    return;
  }

  if (flags_.planning_failure || flags_.conflict || flags_.revalidate_replan) {
    if (flags_.planning_failure) ++counters_.planner_failures;
    if (flags_.conflict.kind == ConflictKind::kGoalGoal) ++counters_.goal_goal_conflicts;
    if (flags_.conflict.kind == ConflictKind::kGoalStart) ++counters_.goal_start_conflicts;
    if (flags_.revalidate_replan) ++counters_.revalidation_replans;
    ++counters_.aborts;
    const bool keep_clear = flags_.planning_failure || flags_.conflict;
    planner.abort();
    if (goal_) {
      broadcast(BroadcastMessage::goal(MessageType::kAborted, id_, now, goal_->position));
      aborted_goal_ = goal_->position;
    }
    std::optional<ViewGoal> next;
    if (keep_clear) {
      const auto excl = replan_exclusions(now);
      next = plan_next_best_view(now, state.position, excl);
    }
    if (!next) next = plan_next_best_view(now, state.position, {});
    dispatch(now, planner, next);
    return;
  }

  if (goal_) {
    if (own_path_) {
      broadcast(BroadcastMessage::selected(id_, now, goal_->position, *own_path_, own_cost_));
    }
  } else if (completed_ && map_dirty_) {
    map_dirty_ = false;
    if (auto g = plan_next_best_view(now, state.position, {})) {
      dispatch(now, planner, g);
      return;
    }
  }
  next_wake_ = now + std::max<Tick>(1, cfg_.sleep_ticks);
}

std::optional<ViewGoal> ExplorationAgent::plan_next_best_view(Tick now, const Vec3& robot_position,
                                                              std::span<const Exclusion> exclusions) {
  const Polygon* fence = fence_ ? &*fence_ : nullptr;
  GainCache gains(map_, grid_, spec_, fence);
  const auto fps = footprints(now);
  const PoiEntry* poi = pois_.top();
  const auto& root = tree_.nodes()[static_cast<std::size_t>(current_node_)];

  SearchContext ctx;
  ctx.map = &map_;
  ctx.footprints = fps;
  ctx.fence = fence;
  ctx.exclusions = exclusions;
  if (poi) ctx.poi = poi->position;
  ctx.gains = &gains;
  ctx.rng = &rng_;
  const SearchTreeParams params = SearchTreeParams::from_config(cfg_);

  for (double side : cfg_.box_sizes) {
    SearchTree t = build_search_tree(root.position, root.yaw, SearchBox{root.position, side}, params, ctx, &frontier_);
    const int best = t.best();
    const bool found = best >= 0 && t.nodes[static_cast<std::size_t>(best)].utility > cfg_.utility_min;
    last_tree_ = std::move(t);
    if (found) {
      const auto br = last_tree_.branch(best);
      const std::size_t depth = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, cfg_.forward_depth)),
                                                       br.size() - 1);
      const auto& n = last_tree_.nodes[static_cast<std::size_t>(br[depth])];
      return ViewGoal{n.position, n.yaw, GoalSource::kForward};
    }
  }

  auto from_backtracking = [&]() -> std::optional<ViewGoal> {
    const BacktrackResult bt = backtracking_strategy(now, robot_position, exclusions);
    if (bt.best < 0) return std::nullopt;
    const auto& c = bt.clusters[static_cast<std::size_t>(bt.best)];
    return ViewGoal{c.goal, std::atan2(c.goal.y - robot_position.y, c.goal.x - robot_position.x),
                    GoalSource::kBacktrack};
  };
  if (auto g = from_backtracking()) return g;

  // Nothing informative among the sampled candidates: check every reachable point.
  const auto start = map_.nearest_traversable(robot_position);
  if (!start || distance(map_.at(*start).position, robot_position) > cfg_.snap_radius()) return std::nullopt;
  const CostField field(map_, fps, *start);
  const ShortestPaths sp = uniform_cost_search(field);
  bool inserted = false;
  for (const PointKey k : map_.traversable_keys()) {
    if (!std::isfinite(sp.cost_to(k))) continue;
    const Vec3& p = map_.at(k).position;
    if (fence && !fence->contains(p.x, p.y)) continue;
    const double g = gains.gain(k, 0.0);
    if (g > cfg_.gain_min) {
      frontier_.insert(k, p, g);
      inserted = true;
    }
  }
  if (!inserted) return std::nullopt;
  return from_backtracking();
}

BacktrackResult ExplorationAgent::backtracking_strategy(Tick now, const Vec3& robot_position,
                                                        std::span<const Exclusion> exclusions) {
  const Polygon* fence = fence_ ? &*fence_ : nullptr;
  GainCache gains(map_, grid_, spec_, fence);
  for (auto& n : frontier_.mutable_nodes()) {
    n.gain = map_.traversable(n.key) ? gains.gain(n.key, 0.0) : 0.0;
  }
  BacktrackResult out;
  out.clusters = cluster_frontier(frontier_, cfg_.cluster_radius, cfg_.gain_min);
  if (out.clusters.empty()) return out;

  const auto start = map_.nearest_traversable(robot_position);
  if (!start || distance(map_.at(*start).position, robot_position) > cfg_.snap_radius()) return out;
  const auto fps = footprints(now);
  const CostField field(map_, fps, *start);
  const ShortestPaths sp = uniform_cost_search(field);

  auto usable = [&](PointKey k) {
    if (!map_.traversable(k) || !std::isfinite(sp.cost_to(k))) return false;
    const Vec3& p = map_.at(k).position;
    if (distance(p, robot_position) < 1e-6) return false;
    if (fence && !fence->contains(p.x, p.y)) return false;
    for (const auto& e : exclusions) {
      if (distance_xy(p, e.center) < e.radius) return false;
    }
    return true;
  };

  double best_u = -1.0;
  for (std::size_t i = 0; i < out.clusters.size(); ++i) {
    auto& c = out.clusters[i];
    std::optional<PointKey> k = map_.nearest_traversable(c.centroid);
    if (k && !usable(*k)) k.reset();
    if (!k) {
      std::vector<int> order = c.members;
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return frontier_.nodes()[static_cast<std::size_t>(a)].gain > frontier_.nodes()[static_cast<std::size_t>(b)].gain;
      });
      for (int m : order) {
        const PointKey mk = frontier_.nodes()[static_cast<std::size_t>(m)].key;
        if (usable(mk)) {
          k = mk;
          break;
        }
      }
    }
    if (!k) continue;
    c.goal_key = *k;
    c.goal = map_.at(*k).position;
    c.cost_to_go = sp.cost_to(*k);
    c.utility = cluster_utility(c.total_gain, c.cost_to_go, cfg_.lambda);
    if (c.utility > best_u) {
      best_u = c.utility;
      out.best = static_cast<int>(i);
    }
  }
  return out;
}

void ExplorationAgent::add_poi(const Vec3& position, double priority, Tick now, PoiSource source) {
  pois_.push(position, priority, now, source);
}

void ExplorationAgent::import_point_map(const std::string& text, bool freeze) {
  map_.import_text(text);
  map_frozen_ = freeze;
  map_dirty_ = true;
}

std::vector<BroadcastMessage> ExplorationAgent::take_outbox() {
  std::vector<BroadcastMessage> out;
  out.swap(outbox_);
  return out;
}

}  // namespace mrx
