#include <fstream>
#include <iterator>
#include <map>

#include "json.hpp"
#include "mrexplore/mission.hpp"

namespace mrx {

using nlohmann::json;

namespace {

constexpr int kSnapshotVersion = 1;

json vec_j(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
Vec3 j_vec(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

template <class T, class F>
json opt_j(const std::optional<T>& o, F f) {
  return o ? f(*o) : json(nullptr);
}
template <class T, class F>
std::optional<T> j_opt(const json& j, F f) {
  if (j.is_null()) return std::nullopt;
  return f(j);
}

json key_j(PointKey k) { return json::array({k.ix, k.iy}); }
PointKey j_key(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>()}; }

json path_j(const Path& p) {
  json w = json::array();
  for (const auto& v : p.waypoints) w.push_back(vec_j(v));
  json k = json::array();
  for (const auto& v : p.keys) k.push_back(key_j(v));
  return {{"w", w}, {"k", k}, {"len", p.length}, {"cost", p.cost}};
}
Path j_path(const json& j) {
  Path p;
  for (const auto& v : j.at("w")) p.waypoints.push_back(j_vec(v));
  for (const auto& v : j.at("k")) p.keys.push_back(j_key(v));
  p.length = j.at("len").get<double>();
  p.cost = j.at("cost").get<double>();
  return p;
}

json polygon_j(const Polygon& p) {
  json a = json::array();
  for (const auto& v : p.vertices()) a.push_back({v.x, v.y});
  return a;
}
Polygon j_polygon(const json& j) {
  std::vector<Vec2> v;
  for (const auto& p : j) v.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return Polygon(std::move(v));
}

/// Scans are stored once and referenced by (robot, seq); ray directions are rebuilt.
class ScanTable {
 public:
  explicit ScanTable(SensorSpec spec) : spec_(spec) {}

  json ref(const ScanPtr& s) {
    const ScanKey k{s->robot_id, s->seq};
    scans_.emplace(k, s);
    return json::array({k.first, k.second});
  }

  json dump() const {
    json a = json::array();
    for (const auto& [k, s] : scans_) {
      std::vector<double> d;
      std::vector<int> kinds;
      d.reserve(s->rays.size());
      for (const auto& r : s->rays) {
        d.push_back(r.distance);
        kinds.push_back(static_cast<int>(r.kind));
      }
      a.push_back({{"robot", s->robot_id},
                   {"seq", s->seq},
                   {"origin", vec_j(s->origin)},
                   {"yaw", s->yaw},
                   {"t", s->timestamp},
                   {"range", s->range},
                   {"d", d},
                   {"kind", kinds}});
    }
    return a;
  }

  void load(const json& a) {
    for (const auto& j : a) {
      auto s = std::make_shared<Scan>();
      s->robot_id = j.at("robot").get<int>();
      s->seq = j.at("seq").get<int>();
      s->origin = j_vec(j.at("origin"));
      s->yaw = j.at("yaw").get<double>();
      s->timestamp = j.at("t").get<Tick>();
      s->range = j.at("range").get<double>();
      const auto dirs = scan_directions(spec_, s->yaw);
      const auto d = j.at("d").get<std::vector<double>>();
      const auto kinds = j.at("kind").get<std::vector<int>>();
      if (d.size() != dirs.size() || kinds.size() != dirs.size()) throw std::runtime_error("snapshot: scan ray count mismatch");
      s->rays.resize(dirs.size());
      for (std::size_t i = 0; i < dirs.size(); ++i) s->rays[i] = {dirs[i], d[i], static_cast<HitKind>(kinds[i])};
      scans_.emplace(ScanKey{s->robot_id, s->seq}, std::move(s));
    }
  }

  ScanPtr get(const json& ref) const {
    const auto it = scans_.find({ref.at(0).get<int>(), ref.at(1).get<int>()});
    if (it == scans_.end()) throw std::runtime_error("snapshot: dangling scan reference");
    return it->second;
  }

 private:
  SensorSpec spec_;
  std::map<ScanKey, ScanPtr> scans_;
};

json message_j(const BroadcastMessage& m, ScanTable& scans) {
  json j = {{"from", m.robot_id}, {"type", to_string(m.type)}, {"emit", m.emit_tick}, {"to", m.recipient}};
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GoalPayload>) {
          j["goal"] = vec_j(p.goal);
        } else if constexpr (std::is_same_v<T, SelectedPayload>) {
          j["goal"] = vec_j(p.goal);
          j["path"] = path_j(p.path);
          j["cost"] = p.cost;
        } else if constexpr (std::is_same_v<T, PositionPayload>) {
          j["position"] = vec_j(p.position);
        } else if constexpr (std::is_same_v<T, ScanPayload>) {
          j["scan"] = scans.ref(p.scan);
          j["view"] = vec_j(p.view);
        } else {
          json n = json::array();
          for (const auto& i : p.nodes) n.push_back({i.seq, vec_j(i.position)});
          j["nodes"] = n;
        }
      },
      m.payload);
  return j;
}

BroadcastMessage j_message(const json& j, const ScanTable& scans) {
  BroadcastMessage m;
  m.robot_id = j.at("from").get<int>();
  const auto t = message_type_from_string(j.at("type").get<std::string>());
  if (!t) throw std::runtime_error("snapshot: unknown message type");
  m.type = *t;
  m.emit_tick = j.at("emit").get<Tick>();
  m.recipient = j.at("to").get<int>();
  switch (m.type) {
    case MessageType::kSelected:
      m.payload = SelectedPayload{j_vec(j.at("goal")), j_path(j.at("path")), j.at("cost").get<double>()};
      break;
    case MessageType::kPosition:
      m.payload = PositionPayload{j_vec(j.at("position"))};
      break;
    case MessageType::kScan:
      m.payload = ScanPayload{scans.get(j.at("scan")), j_vec(j.at("view"))};
      break;
    case MessageType::kTree: {
      TreePayload p;
      for (const auto& n : j.at("nodes")) p.nodes.push_back({n.at(0).get<int>(), j_vec(n.at(1))});
      m.payload = std::move(p);
      break;
    }
    default:
      m.payload = GoalPayload{j_vec(j.at("goal"))};
  }
  return m;
}

json feedback_j(const PlannerFeedback& f) {
  return {{"kind", static_cast<int>(f.kind)},
          {"path", opt_j(f.path, path_j)},
          {"rc", f.remaining_cost},
          {"rl", f.remaining_length},
          {"tick", f.tick}};
}
PlannerFeedback j_feedback(const json& j) {
  PlannerFeedback f;
  f.kind = static_cast<PlannerFeedback::Kind>(j.at("kind").get<int>());
  f.path = j_opt<Path>(j.at("path"), j_path);
  f.remaining_cost = j.at("rc").get<double>();
  f.remaining_length = j.at("rl").get<double>();
  f.tick = j.at("tick").get<Tick>();
  return f;
}

json poi_j(const PoiEntry& e) {
  return {vec_j(e.position), e.priority, e.tick, e.order, static_cast<int>(e.source)};
}
PoiEntry j_poi(const json& j) {
  return {j_vec(j.at(0)), j.at(1).get<double>(), j.at(2).get<Tick>(), j.at(3).get<std::uint64_t>(),
          static_cast<PoiSource>(j.at(4).get<int>())};
}

double j_double(const json& j) { return j.get<double>(); }
Tick j_tick(const json& j) { return j.get<Tick>(); }
json id_j(double v) { return v; }
json tick_j(Tick v) { return v; }

}  // namespace

struct AgentAccess {
  static json save(const ExplorationAgent& a, ScanTable& scans) {
    json j;
    const VoxelGrid& g = a.grid_;
    j["grid_states"] = json::binary(std::vector<std::uint8_t>(g.raw_states().begin(), g.raw_states().end()));
    std::vector<std::uint8_t> lo(g.raw_log_odds().size() * sizeof(float));
    std::memcpy(lo.data(), g.raw_log_odds().data(), lo.size());
    j["grid_log_odds"] = json::binary(std::move(lo));

    json pts = json::array();
    for (const auto& p : a.map_.raw()) {
      if (!p.present) {
        pts.push_back(nullptr);
        continue;
      }
      pts.push_back({p.obstacle_hit, p.imported, static_cast<int>(p.label), p.base_cost, vec_j(p.position), p.sx,
                     p.sy, p.sz, p.hits});
    }
    j["points"] = pts;

    json team = json::array();
    for (const auto& [id, t] : a.team_.tuples()) {
      team.push_back({id, opt_j(t.position, vec_j), opt_j(t.goal, vec_j), opt_j(t.path, path_j), opt_j(t.cost, id_j),
                      opt_j(t.stamp, tick_j)});
    }
    j["team"] = team;

    json tree = json::array();
    for (const auto& n : a.tree_.nodes()) tree.push_back({vec_j(n.position), n.yaw, n.tick, n.parent, n.scan_seq});
    j["tree"] = tree;

    json fr = json::array();
    for (const auto& n : a.frontier_.nodes()) fr.push_back({key_j(n.key), vec_j(n.position), n.gain, n.parent});
    j["frontier"] = fr;

    json pois = json::array();
    for (const auto& e : a.pois_.entries()) pois.push_back(poi_j(e));
    j["pois"] = pois;
    j["poi_next"] = a.pois_.next_order();
    json rem = json::array();
    for (const auto& [t, e] : a.poi_removals_) rem.push_back({t, poi_j(e)});
    j["poi_removals"] = rem;

    j["rng"] = a.rng_.state();
    j["fence"] = opt_j(a.fence_, polygon_j);
    json own = json::array();
    for (const auto& [seq, s] : a.own_scans_) own.push_back(scans.ref(s));
    j["own_scans"] = own;
    json integ = json::array();
    for (const auto& k : a.integrated_) integ.push_back({k.first, k.second});
    j["integrated"] = integ;
    j["last_own_seq"] = a.last_own_seq_;
    j["current_node"] = a.current_node_;
    j["goal"] = a.goal_ ? json{vec_j(a.goal_->position), a.goal_->yaw, static_cast<int>(a.goal_->source)}
                        : json(nullptr);
    j["flags"] = {a.flags_.goal_reached, a.flags_.planning_failure, static_cast<int>(a.flags_.conflict.kind),
                  a.flags_.conflict.teammate, a.flags_.revalidate_replan};
    j["completed"] = a.completed_;
    j["map_dirty"] = a.map_dirty_;
    j["map_frozen"] = a.map_frozen_;
    j["next_wake"] = a.next_wake_;
    j["last_revalidate"] = a.last_revalidate_;
    j["forced_goal"] = opt_j(a.forced_goal_, vec_j);
    j["aborted_goal"] = opt_j(a.aborted_goal_, vec_j);
    j["own_cost"] = a.own_cost_;
    j["own_path"] = opt_j(a.own_path_, path_j);
    const AgentCounters& c = a.counters_;
    j["counters"] = {c.goal_goal_conflicts, c.goal_start_conflicts, c.aborts,           c.planner_failures,
                     c.revalidation_replans, c.malformed_messages,  c.scans_integrated};
    return j;
  }

  static void load(ExplorationAgent& a, const json& j, const ScanTable& scans) {
    const GridGeometry geom = a.grid_.geometry();
    auto states = j.at("grid_states").get_binary();
    const auto& lob = j.at("grid_log_odds").get_binary();
    if (states.size() != geom.size() || lob.size() != geom.size() * sizeof(float)) {
      throw std::runtime_error("snapshot: grid size mismatch");
    }
    std::vector<float> lo(geom.size());
    std::memcpy(lo.data(), lob.data(), lob.size());
    a.grid_ = VoxelGrid::from_raw(geom, std::vector<std::uint8_t>(states.begin(), states.end()), std::move(lo));

    std::vector<SurfacePointMap::Point> pts;
    for (const auto& p : j.at("points")) {
      SurfacePointMap::Point q;
      if (!p.is_null()) {
        q.present = true;
        q.obstacle_hit = p.at(0).get<bool>();
        q.imported = p.at(1).get<bool>();
        q.label = static_cast<PointLabel>(p.at(2).get<int>());
        q.base_cost = p.at(3).get<double>();
        q.position = j_vec(p.at(4));
        q.sx = p.at(5).get<double>();
        q.sy = p.at(6).get<double>();
        q.sz = p.at(7).get<double>();
        q.hits = p.at(8).get<std::int64_t>();
      }
      pts.push_back(q);
    }
    if (pts.size() != a.map_.raw().size()) throw std::runtime_error("snapshot: point map size mismatch");
    const double sx = a.map_.nx() * a.map_.params().pitch;
    const double sy = a.map_.ny() * a.map_.params().pitch;
    a.map_ = SurfacePointMap::from_raw(sx, sy, a.map_.params(), std::move(pts));

    auto& tuples = a.team_.mutable_tuples();
    tuples.clear();
    for (const auto& t : j.at("team")) {
      TeammateTuple tt;
      tt.position = j_opt<Vec3>(t.at(1), j_vec);
      tt.goal = j_opt<Vec3>(t.at(2), j_vec);
      tt.path = j_opt<Path>(t.at(3), j_path);
      tt.cost = j_opt<double>(t.at(4), j_double);
      tt.stamp = j_opt<Tick>(t.at(5), j_tick);
      tuples[t.at(0).get<int>()] = std::move(tt);
    }

    auto& tn = a.tree_.mutable_nodes();
    tn.clear();
    for (const auto& n : j.at("tree")) {
      tn.push_back({j_vec(n.at(0)), n.at(1).get<double>(), n.at(2).get<Tick>(), n.at(3).get<int>(), n.at(4).get<int>()});
    }
    auto& fn = a.frontier_.mutable_nodes();
    fn.clear();
    for (const auto& n : j.at("frontier")) {
      fn.push_back({j_key(n.at(0)), j_vec(n.at(1)), n.at(2).get<double>(), n.at(3).get<int>()});
    }
    a.frontier_.rebuild_index();

    std::vector<PoiEntry> pois;
    for (const auto& e : j.at("pois")) pois.push_back(j_poi(e));
    a.pois_.restore(std::move(pois), j.at("poi_next").get<std::uint64_t>());
    a.poi_removals_.clear();
    for (const auto& r : j.at("poi_removals")) a.poi_removals_.emplace_back(r.at(0).get<Tick>(), j_poi(r.at(1)));

    a.rng_.set_state(j.at("rng").get<std::string>());
    a.fence_ = j_opt<Polygon>(j.at("fence"), j_polygon);
    a.own_scans_.clear();
    for (const auto& r : j.at("own_scans")) {
      ScanPtr s = scans.get(r);
      a.own_scans_[s->seq] = s;
    }
    a.integrated_.clear();
    for (const auto& k : j.at("integrated")) a.integrated_.insert({k.at(0).get<int>(), k.at(1).get<int>()});
    a.last_own_seq_ = j.at("last_own_seq").get<int>();
    a.current_node_ = j.at("current_node").get<int>();
    a.goal_.reset();
    if (const auto& g = j.at("goal"); !g.is_null()) {
      a.goal_ = ViewGoal{j_vec(g.at(0)), g.at(1).get<double>(), static_cast<GoalSource>(g.at(2).get<int>())};
    }
    const auto& f = j.at("flags");
    a.flags_.goal_reached = f.at(0).get<bool>();
    a.flags_.planning_failure = f.at(1).get<bool>();
    a.flags_.conflict.kind = static_cast<ConflictKind>(f.at(2).get<int>());
    a.flags_.conflict.teammate = f.at(3).get<int>();
    a.flags_.revalidate_replan = f.at(4).get<bool>();
    a.completed_ = j.at("completed").get<bool>();
    a.map_dirty_ = j.at("map_dirty").get<bool>();
    a.map_frozen_ = j.at("map_frozen").get<bool>();
    a.next_wake_ = j.at("next_wake").get<Tick>();
    a.last_revalidate_ = j.at("last_revalidate").get<Tick>();
    a.forced_goal_ = j_opt<Vec3>(j.at("forced_goal"), j_vec);
    a.aborted_goal_ = j_opt<Vec3>(j.at("aborted_goal"), j_vec);
    a.own_cost_ = j.at("own_cost").get<double>();
    a.own_path_ = j_opt<Path>(j.at("own_path"), j_path);
    const auto& c = j.at("counters");
    a.counters_ = {c.at(0).get<std::size_t>(), c.at(1).get<std::size_t>(), c.at(2).get<std::size_t>(),
                   c.at(3).get<std::size_t>(), c.at(4).get<std::size_t>(), c.at(5).get<std::size_t>(),
                   c.at(6).get<std::size_t>()};
    a.last_tree_ = SearchTree{};
    a.outbox_.clear();
  }
};

struct MissionAccess {
  static json save(const Mission& m) {
    ScanTable scans(SensorSpec::from_config(m.scenario_.config));
    json j;
    j["version"] = kSnapshotVersion;
    j["config"] = m.scenario_.config.to_text();
    j["now"] = m.now_;
    j["fence"] = opt_j(m.fence_, polygon_j);
    json robots = json::array();
    for (const auto& r : m.robots_) {
      const PathPlanner::State ps = r.planner.state();
      json pj = {{"goal", opt_j(ps.goal, vec_j)},
                 {"yaw", opt_j(ps.goal_yaw, id_j)},
                 {"path", opt_j(ps.path, path_j)},
                 {"halted", ps.halted},
                 {"fresh", ps.fresh_goal},
                 {"aborted", ps.aborted},
                 {"feedback", feedback_j(ps.feedback)}};
      robots.push_back({{"position", vec_j(r.state.position)},
                        {"yaw", r.state.yaw},
                        {"planner", pj},
                        {"pending_scan", r.pending_scan ? scans.ref(r.pending_scan) : json(nullptr)},
                        {"next_seq", r.next_seq},
                        {"distance", r.distance},
                        {"stopped", r.stopped},
                        {"last_move", opt_j(r.last_move, tick_j)},
                        {"agent", AgentAccess::save(r.agent, scans)}});
    }
    j["robots"] = robots;
    json pend = json::array();
    for (const auto& p : m.bus_.pending()) pend.push_back({p.due, p.recipient, p.order, message_j(p.msg, scans)});
    const Trace::Counters tc = m.bus_.trace().counters();
    j["bus"] = {{"pending", pend},
                {"rng", m.bus_.rng().state()},
                {"order", m.bus_.order_counter()},
                {"trace", {tc.digest, tc.emitted, tc.dropped, tc.delivered}},
                {"lines", m.bus_.trace().lines()}};
    json metrics = json::array();
    for (const auto& r : m.metrics_) {
      metrics.push_back({r.tick, r.vol_union, r.vol, r.dist, r.conflicts, r.goal_goal, r.goal_start, r.aborts,
                         r.failures, r.emitted, r.drops});
    }
    j["metrics"] = metrics;
    json queue = json::array();
    for (const auto& c : m.queue_) queue.push_back(command_to_json(c));
    j["queue"] = queue;
    j["scans"] = scans.dump();
    return j;
  }

  static void load(Mission& m, const json& j) {
    if (j.at("version").get<int>() != kSnapshotVersion) throw std::runtime_error("snapshot: unsupported version");
    if (j.at("config").get<std::string>() != m.scenario_.config.to_text()) {
      throw std::runtime_error("snapshot: configuration differs from the running mission");
    }
    if (j.at("robots").size() != m.robots_.size()) throw std::runtime_error("snapshot: robot count differs");
    ScanTable scans(SensorSpec::from_config(m.scenario_.config));
    scans.load(j.at("scans"));

    m.now_ = j.at("now").get<Tick>();
    m.fence_ = j_opt<Polygon>(j.at("fence"), j_polygon);
    for (std::size_t i = 0; i < m.robots_.size(); ++i) {
      const json& rj = j.at("robots")[i];
      RobotRuntime& r = m.robots_[i];
      r.state.position = j_vec(rj.at("position"));
      r.state.yaw = rj.at("yaw").get<double>();
      const json& pj = rj.at("planner");
      PathPlanner::State ps;
      ps.goal = j_opt<Vec3>(pj.at("goal"), j_vec);
      ps.goal_yaw = j_opt<double>(pj.at("yaw"), j_double);
      ps.path = j_opt<Path>(pj.at("path"), j_path);
      ps.halted = pj.at("halted").get<bool>();
      ps.fresh_goal = pj.at("fresh").get<bool>();
      ps.aborted = pj.at("aborted").get<bool>();
      ps.feedback = j_feedback(pj.at("feedback"));
      r.planner.restore(ps);
      r.pending_scan = rj.at("pending_scan").is_null() ? nullptr : scans.get(rj.at("pending_scan"));
      r.next_seq = rj.at("next_seq").get<int>();
      r.distance = rj.at("distance").get<double>();
      r.stopped = rj.at("stopped").get<bool>();
      r.last_move = j_opt<Tick>(rj.at("last_move"), j_tick);
      AgentAccess::load(r.agent, rj.at("agent"), scans);
    }

    const json& b = j.at("bus");
    std::vector<PendingDelivery> pend;
    for (const auto& p : b.at("pending")) {
      pend.push_back({p.at(0).get<Tick>(), p.at(1).get<int>(), p.at(2).get<std::uint64_t>(), j_message(p.at(3), scans)});
    }
    Rng rng;
    rng.set_state(b.at("rng").get<std::string>());
    m.bus_.restore(std::move(pend), std::move(rng), b.at("order").get<std::uint64_t>());
    const auto& tc = b.at("trace");
    m.bus_.trace().restore({tc.at(0).get<std::uint64_t>(), tc.at(1).get<std::size_t>(), tc.at(2).get<std::size_t>(),
                            tc.at(3).get<std::size_t>()},
                           b.at("lines").get<std::vector<std::string>>());

    m.metrics_.clear();
    for (const auto& r : j.at("metrics")) {
      MetricsRow row;
      row.tick = r.at(0).get<Tick>();
      row.vol_union = r.at(1).get<double>();
      row.vol = r.at(2).get<std::vector<double>>();
      row.dist = r.at(3).get<std::vector<double>>();
      row.conflicts = r.at(4).get<std::size_t>();
      row.goal_goal = r.at(5).get<std::size_t>();
      row.goal_start = r.at(6).get<std::size_t>();
      row.aborts = r.at(7).get<std::size_t>();
      row.failures = r.at(8).get<std::size_t>();
      row.emitted = r.at(9).get<std::size_t>();
      row.drops = r.at(10).get<std::size_t>();
      m.metrics_.push_back(std::move(row));
    }
    m.queue_.clear();
    for (const auto& q : j.at("queue")) {
      const json c = json::parse(q.get<std::string>());
      m.queue_.push_back(parse_command(c.at("cmd").get<std::string>(), c.at("args").dump()));
    }
    m.last_emitted_.clear();
  }
};

std::vector<std::uint8_t> Mission::save() const { return json::to_cbor(MissionAccess::save(*this)); }

void Mission::load(std::span<const std::uint8_t> bytes) {
  json j;
  try {
    j = json::from_cbor(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("snapshot: not a valid snapshot: ") + e.what());
  }
  try {
    MissionAccess::load(*this, j);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("snapshot: malformed: ") + e.what());
  }
}

void Mission::save_file(const std::string& path) const {
  const auto bytes = save();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write snapshot '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("cannot write snapshot '" + path + "'");
}

void Mission::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read snapshot '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  load(bytes);
}

}  // namespace mrx
