#include "mrexplore/path_planner.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <tuple>

namespace mrx {
namespace {

constexpr int kNeighbors[8][2] = {{-1, -1}, {0, -1}, {1, -1}, {-1, 0}, {1, 0}, {-1, 1}, {0, 1}, {1, 1}};

struct QueueEntry {
  double dist;
  int ix;
  int iy;
  bool operator>(const QueueEntry& o) const { return std::tie(dist, ix, iy) > std::tie(o.dist, o.ix, o.iy); }
};

template <typename Passable, typename Weight>
ShortestPaths run_ucs(const SurfacePointMap& map, PointKey source, Passable passable, Weight weight,
                      std::optional<PointKey> stop_at, double limit) {
  ShortestPaths sp;
  sp.source = source;
  sp.nx = map.nx();
  const std::size_t n = static_cast<std::size_t>(map.nx()) * map.ny();
  sp.dist.assign(n, kInfiniteCost);
  sp.parent.assign(n, -1);
  std::vector<char> settled(n, 0);
  auto flat = [&](PointKey k) { return static_cast<std::size_t>(k.iy) * map.nx() + k.ix; };
  std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>> open;
  sp.dist[flat(source)] = 0.0;
  open.push({0.0, source.ix, source.iy});
  while (!open.empty()) {
    const QueueEntry top = open.top();
    open.pop();
    const PointKey k{top.ix, top.iy};
    const std::size_t fk = flat(k);
    if (settled[fk]) continue;
    if (top.dist >= limit) break;
    settled[fk] = 1;
    if (stop_at && k == *stop_at) break;
    for (const auto& d : kNeighbors) {
      const PointKey nb{k.ix + d[0], k.iy + d[1]};
      if (!map.in_range(nb) || !passable(nb)) continue;
      const std::size_t fn = flat(nb);
      if (settled[fn]) continue;
      const double w = weight(k, nb);
      if (!std::isfinite(w)) continue;
      const double nd = top.dist + w;
      if (nd < sp.dist[fn]) {
        sp.dist[fn] = nd;
        sp.parent[fn] = static_cast<int>(fk);
        open.push({nd, nb.ix, nb.iy});
      }
    }
  }
  // Entries beyond the limit or never settled are not final.
  for (std::size_t i = 0; i < n; ++i) {
    if (!settled[i]) sp.dist[i] = kInfiniteCost;
  }
  return sp;
}

std::optional<PointKey> snap(const SurfacePointMap& map, const Vec3& p, double radius) {
  const auto k = map.nearest_traversable(p);
  if (!k || distance(map.at(*k).position, p) > radius) return std::nullopt;
  return k;
}

}  // namespace

CostField::CostField(const SurfacePointMap& map, std::span<const TeammateFootprint> footprints, PointKey start)
    : map_(&map), start_(start), node_cost_(static_cast<std::size_t>(map.nx()) * map.ny(), kInfiniteCost) {
  for (int iy = 0; iy < map.ny(); ++iy) {
    for (int ix = 0; ix < map.nx(); ++ix) {
      const PointKey k{ix, iy};
      if (!map.traversable(k)) continue;
      node_cost_[index(k)] = k == start ? map.at(k).base_cost : map.multi_robot_cost(k, footprints);
    }
  }
}

double CostField::edge_weight(PointKey a, PointKey b) const {
  const double ca = node_cost(a), cb = node_cost(b);
  if (!std::isfinite(ca) || !std::isfinite(cb)) return kInfiniteCost;
  return distance(map_->at(a).position, map_->at(b).position) * (1.0 + 0.5 * (ca + cb));
}

Path ShortestPaths::path_to(const SurfacePointMap& map, PointKey k) const {
  Path p;
  if (!std::isfinite(cost_to(k))) return p;
  int cur = k.iy * nx + k.ix;
  while (cur >= 0) {
    p.keys.push_back({cur % nx, cur / nx});
    cur = parent[static_cast<std::size_t>(cur)];
  }
  std::reverse(p.keys.begin(), p.keys.end());
  for (const auto& key : p.keys) p.waypoints.push_back(map.at(key).position);
  for (std::size_t i = 1; i < p.waypoints.size(); ++i) p.length += distance(p.waypoints[i - 1], p.waypoints[i]);
  p.cost = cost_to(k);
  return p;
}

ShortestPaths uniform_cost_search(const CostField& field, std::optional<PointKey> stop_at) {
  const auto& map = field.map();
  return run_ucs(
      map, field.start(), [&](PointKey k) { return std::isfinite(field.node_cost(k)); },
      [&](PointKey a, PointKey b) { return field.edge_weight(a, b); }, stop_at, kInfiniteCost);
}

PlanResult plan(const SurfacePointMap& map, std::span<const TeammateFootprint> footprints, const Vec3& start,
                const Vec3& goal, double snap_radius) {
  const auto s = snap(map, start, snap_radius);
  if (!s) throw OffMapError("plan: start does not snap to a traversable point");
  PlanResult r;
  const auto g = snap(map, goal, snap_radius);
  if (!g) {
    r.status = PlanStatus::kGoalSnapFailed;
    return r;
  }
  const CostField field(map, footprints, *s);
  if (!std::isfinite(field.node_cost(*g))) return r;
  const ShortestPaths sp = uniform_cost_search(field, *g);
  if (!std::isfinite(sp.cost_to(*g))) return r;
  r.status = PlanStatus::kOk;
  r.path = sp.path_to(map, *g);
  return r;
}

std::optional<double> path_length_below(const SurfacePointMap& map, const Vec3& a, const Vec3& b, double limit,
                                        double snap_radius) {
  const auto s = snap(map, a, snap_radius);
  const auto g = snap(map, b, snap_radius);
  if (!s || !g) return std::nullopt;
  if (*s == *g) return 0.0 < limit ? std::optional<double>(0.0) : std::nullopt;
  const ShortestPaths sp = run_ucs(
      map, *s, [&](PointKey k) { return map.traversable(k); },
      [&](PointKey x, PointKey y) { return distance(map.at(x).position, map.at(y).position); }, *g, limit);
  const double d = sp.cost_to(*g);
  if (std::isfinite(d) && d < limit) return d;
  return std::nullopt;
}

double polyline_min_separation(std::span<const Vec3> a, std::span<const Vec3> b) {
  if (a.empty() || b.empty()) return kInfiniteCost;
  auto seg = [](std::span<const Vec3> p, std::size_t i) {
    return std::pair{p[i], p[std::min(i + 1, p.size() - 1)]};
  };
  const std::size_t na = std::max<std::size_t>(1, a.size() - 1);
  const std::size_t nb = std::max<std::size_t>(1, b.size() - 1);
  double best = kInfiniteCost;
  for (std::size_t i = 0; i < na; ++i) {
    const auto [a0, a1] = seg(a, i);
    for (std::size_t j = 0; j < nb; ++j) {
      const auto [b0, b1] = seg(b, j);
      best = std::min(best, segment_segment_distance(a0, a1, b0, b1));
    }
  }
  return best;
}

double path_min_separation(const Path& a, const Path& b) { return polyline_min_separation(a.waypoints, b.waypoints); }

const char* to_string(PlannerFeedback::Kind k) {
  switch (k) {
    case PlannerFeedback::Kind::kIdle: return "idle";
    case PlannerFeedback::Kind::kPlanned: return "planned";
    case PlannerFeedback::Kind::kProgressing: return "progressing";
    case PlannerFeedback::Kind::kFailure: return "failure";
    case PlannerFeedback::Kind::kGoalReached: return "goal_reached";
    case PlannerFeedback::Kind::kAborted: return "aborted";
  }
  return "unknown";
}

void PathPlanner::set_goal(const Vec3& goal, std::optional<double> yaw) {
  goal_ = goal;
  goal_yaw_ = yaw;
  path_.reset();
  halted_ = false;
  fresh_goal_ = true;
  aborted_ = false;
}

void PathPlanner::abort() {
  goal_.reset();
  goal_yaw_.reset();
  path_.reset();
  halted_ = true;
  aborted_ = true;
}

void PathPlanner::mark_reached(Tick now) {
  feedback_ = PlannerFeedback{PlannerFeedback::Kind::kGoalReached, std::nullopt, 0.0, 0.0, now};
  path_.reset();
  halted_ = true;
}

PlannerFeedback PathPlanner::replan_tick(Tick now, const Vec3& robot_position, const SurfacePointMap& map,
                                         std::span<const TeammateFootprint> footprints) {
  PlannerFeedback fb;
  fb.tick = now;
  if (!goal_) {
    fb.kind = aborted_ ? PlannerFeedback::Kind::kAborted : PlannerFeedback::Kind::kIdle;
    aborted_ = false;
    feedback_ = fb;
    return fb;
  }
  if (distance(robot_position, *goal_) <= goal_tolerance_) {
    fb.kind = PlannerFeedback::Kind::kGoalReached;
    path_.reset();
    goal_.reset();
    goal_yaw_.reset();
    halted_ = true;
    feedback_ = fb;
    return fb;
  }
  auto attempt = [&](std::span<const TeammateFootprint> fps) {
    try {
      return plan(map, fps, robot_position, *goal_, snap_radius_);
    } catch (const OffMapError&) {
      return PlanResult{};
    }
  };
  PlanResult r = attempt(footprints);
  if (!r.ok() && std::any_of(footprints.begin(), footprints.end(), [](const auto& f) { return !f.path.empty(); })) {
    // Retry with teammate bodies only.
    std::vector<TeammateFootprint> bodies(footprints.begin(), footprints.end());
    for (auto& f : bodies) f.path.clear();
    r = attempt(bodies);
  }
  if (!r.ok()) {
    fb.kind = PlannerFeedback::Kind::kFailure;
    path_.reset();
    halted_ = true;
    feedback_ = fb;
    return fb;
  }
  halted_ = false;
  path_ = r.path;
  fb.kind = fresh_goal_ ? PlannerFeedback::Kind::kPlanned : PlannerFeedback::Kind::kProgressing;
  fresh_goal_ = false;
  fb.path = r.path;
  fb.remaining_cost = r.path->cost;
  fb.remaining_length = r.path->length;
  feedback_ = fb;
  return fb;
}

void PathPlanner::restore(const State& s) {
  goal_ = s.goal;
  goal_yaw_ = s.goal_yaw;
  path_ = s.path;
  halted_ = s.halted;
  fresh_goal_ = s.fresh_goal;
  aborted_ = s.aborted;
  feedback_ = s.feedback;
}

}  // namespace mrx
