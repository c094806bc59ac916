#include "mrexplore/exploration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mrx {

int ExplorationTree::add_root(const Vec3& position, double yaw, Tick tick, int scan_seq) {
  nodes_.clear();
  nodes_.push_back({position, yaw, tick, -1, scan_seq});
  return 0;
}

int ExplorationTree::add(int parent, const Vec3& position, double yaw, Tick tick, int scan_seq) {
  nodes_.push_back({position, yaw, tick, parent, scan_seq});
  return static_cast<int>(nodes_.size()) - 1;
}

std::vector<TreeNodeInfo> ExplorationTree::info() const {
  std::vector<TreeNodeInfo> out;
  out.reserve(nodes_.size());
  for (const auto& n : nodes_) out.push_back({n.scan_seq, n.position});
  return out;
}

int SearchTree::best() const {
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < nodes.size(); ++i) top = std::max(top, nodes[i].utility);
  // Utilities within a relative 1e-12 of the maximum count as tied.
  const double floor = top - 1e-12 * std::abs(top);
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (nodes[i].utility >= floor) return static_cast<int>(i);
  }
  return -1;
}

std::vector<int> SearchTree::branch(int idx) const {
  std::vector<int> out;
  for (int i = idx; i >= 0; i = nodes[static_cast<std::size_t>(i)].parent) out.push_back(i);
  std::reverse(out.begin(), out.end());
  return out;
}

void compute_utilities(SearchTree& tree, double lambda) {
  if (tree.nodes.empty()) return;
  tree.nodes[0].sigma = 0.0;
  tree.nodes[0].utility = 0.0;
  for (std::size_t i = 1; i < tree.nodes.size(); ++i) {
    auto& n = tree.nodes[i];
    const auto& p = tree.nodes[static_cast<std::size_t>(n.parent)];
    n.sigma = p.sigma + distance(n.position, p.position);
    n.utility = node_utility(p.utility, n.gain, n.sigma, lambda);
  }
}

int FrontierTree::insert(PointKey key, const Vec3& position, double gain) {
  if (const auto it = by_key_.find(key); it != by_key_.end()) {
    nodes_[static_cast<std::size_t>(it->second)].gain = gain;
    return it->second;
  }
  const int parent = nearest(position);
  nodes_.push_back({key, position, gain, parent});
  const int idx = static_cast<int>(nodes_.size()) - 1;
  by_key_[key] = idx;
  return idx;
}

int FrontierTree::nearest(const Vec3& p) const {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const double d = distance(nodes_[i].position, p);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

bool FrontierTree::connected() const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    int cur = static_cast<int>(i);
    std::size_t hops = 0;
    while (cur > 0) {
      const int parent = nodes_[static_cast<std::size_t>(cur)].parent;
      if (parent < 0 || parent >= cur || ++hops > nodes_.size()) return false;
      cur = parent;
    }
  }
  return true;
}

void FrontierTree::rebuild_index() {
  by_key_.clear();
  for (std::size_t i = 0; i < nodes_.size(); ++i) by_key_[nodes_[i].key] = static_cast<int>(i);
}

std::vector<FrontierCluster> cluster_frontier(const FrontierTree& tree, double radius, double gain_min) {
  const auto& nodes = tree.nodes();
  std::vector<int> cand;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].gain > gain_min) cand.push_back(static_cast<int>(i));
  }
  std::vector<int> parent(cand.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&parent](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (std::size_t a = 0; a < cand.size(); ++a) {
    for (std::size_t b = a + 1; b < cand.size(); ++b) {
      const auto& na = nodes[static_cast<std::size_t>(cand[a])];
      const auto& nb = nodes[static_cast<std::size_t>(cand[b])];
      if (distance(na.position, nb.position) <= radius) {
        const int ra = find(static_cast<int>(a)), rb = find(static_cast<int>(b));
        if (ra != rb) parent[static_cast<std::size_t>(std::max(ra, rb))] = std::min(ra, rb);
      }
    }
  }
  std::vector<FrontierCluster> out;
  std::vector<int> slot(cand.size(), -1);
  for (std::size_t a = 0; a < cand.size(); ++a) {
    const int r = find(static_cast<int>(a));
    if (slot[static_cast<std::size_t>(r)] < 0) {
      slot[static_cast<std::size_t>(r)] = static_cast<int>(out.size());
      out.emplace_back();
    }
    auto& c = out[static_cast<std::size_t>(slot[static_cast<std::size_t>(r)])];
    const auto& n = nodes[static_cast<std::size_t>(cand[a])];
    c.members.push_back(cand[a]);
    c.centroid = c.centroid + n.position;
    c.total_gain += n.gain;
  }
  for (auto& c : out) c.centroid = c.centroid * (1.0 / static_cast<double>(c.members.size()));
  return out;
}

void PoiQueue::push(const Vec3& position, double priority, Tick tick, PoiSource source) {
  entries_.push_back({position, priority, tick, next_order_++, source});
}

const PoiEntry* PoiQueue::top() const {
  const PoiEntry* best = nullptr;
  for (const auto& e : entries_) {
    if (!best || e.priority > best->priority ||
        (e.priority == best->priority && (e.tick < best->tick || (e.tick == best->tick && e.order < best->order)))) {
      best = &e;
    }
  }
  return best;
}

std::vector<PoiEntry> PoiQueue::remove_within(const Vec3& robot, double radius) {
  std::vector<PoiEntry> removed;
  std::vector<PoiEntry> kept;
  for (auto& e : entries_) (distance(robot, e.position) < radius ? removed : kept).push_back(e);
  entries_ = std::move(kept);
  return removed;
}

GainCache::GainCache(const SurfacePointMap& map, const VoxelGrid& grid, const SensorSpec& spec, const Polygon* fence)
    : map_(&map), grid_(&grid), spec_(spec), fence_(fence), yaw_free_(spec.horizontal_fov >= 2.0 * kPi - 1e-12),
      cache_(static_cast<std::size_t>(map.nx()) * map.ny(), std::numeric_limits<double>::quiet_NaN()) {}

double GainCache::gain_at(const Vec3& position, double yaw) const {
  return grid_->information_gain({spec_.center(position), yaw, spec_, fence_});
}

double GainCache::gain(PointKey k, double yaw) {
  const std::size_t idx = static_cast<std::size_t>(k.iy) * map_->nx() + k.ix;
  if (yaw_free_ && !std::isnan(cache_[idx])) return cache_[idx];
  const double g = gain_at(map_->at(k).position, yaw);
  if (yaw_free_) cache_[idx] = g;
  return g;
}

SearchTreeParams SearchTreeParams::from_config(const MissionConfig& cfg) {
  SearchTreeParams p;
  p.max_nodes = cfg.max_tree_nodes;
  p.edge_min = cfg.edge_min;
  p.edge_max = cfg.edge_max;
  p.samples_per_expansion = cfg.samples_per_expansion;
  p.lambda = cfg.lambda;
  p.gain_min = cfg.gain_min;
  p.poi_bias_probability = cfg.poi_bias_probability;
  return p;
}

SearchTree build_search_tree(const Vec3& root_position, double root_yaw, const SearchBox& box,
                             const SearchTreeParams& params, const SearchContext& ctx, FrontierTree* frontier) {
  const SurfacePointMap& map = *ctx.map;
  SearchTree tree;
  tree.box = box;
  const auto root_key = map.key_of(root_position.x, root_position.y);
  tree.nodes.push_back({root_key.value_or(PointKey{-1, -1}), root_position, root_yaw, -1, 0, 0.0, 0.0, 0.0});
  if (!root_key || params.max_nodes <= 1) return tree;

  const double pitch = map.params().pitch;
  std::vector<PointKey> offsets;
  const int reach = static_cast<int>(std::ceil(params.edge_max / pitch));
  for (int dy = -reach; dy <= reach; ++dy) {
    for (int dx = -reach; dx <= reach; ++dx) {
      const double d = pitch * std::hypot(dx, dy);
      if (d >= params.edge_min - 1e-9 && d <= params.edge_max + 1e-9) offsets.push_back({dx, dy});
    }
  }

  // 0 = unknown, 1 = passable, 2 = blocked.
  std::vector<std::uint8_t> pass(static_cast<std::size_t>(map.nx()) * map.ny(), 0);
  auto passable = [&](PointKey k) {
    if (!map.in_range(k)) return false;
    if (k == *root_key) return true;
    auto& s = pass[static_cast<std::size_t>(k.iy) * map.nx() + k.ix];
    if (s == 0) {
      s = map.traversable(k) && std::isfinite(map.multi_robot_cost(k, ctx.footprints)) ? 1 : 2;
    }
    return s == 1;
  };
  auto eligible = [&](PointKey k) {
    if (!passable(k) || !map.traversable(k)) return false;
    const Vec3& p = map.at(k).position;
    if (!box.contains(p)) return false;
    if (ctx.fence && !ctx.fence->contains(p.x, p.y)) return false;
    for (const auto& e : ctx.exclusions) {
      if (distance_xy(p, e.center) < e.radius) return false;
    }
    return true;
  };
  auto segment_ok = [&](const Vec3& a, const Vec3& b) {
    const int n = std::max(1, static_cast<int>(std::ceil(distance_xy(a, b) / (0.25 * pitch))));
    for (int i = 1; i < n; ++i) {
      const Vec3 p = a + (b - a) * (static_cast<double>(i) / n);
      const auto k = map.key_of(p.x, p.y);
      if (!k || !passable(*k)) return false;
    }
    return true;
  };

  std::vector<char> expanded(1, 0);
  std::size_t fifo = 0;
  std::vector<PointKey> cand;
  while (static_cast<int>(tree.nodes.size()) < params.max_nodes) {
    int pick = -1;
    if (ctx.poi && ctx.rng->coin(params.poi_bias_probability)) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        if (expanded[i]) continue;
        const double h = distance(tree.nodes[i].position, *ctx.poi);
        if (h < best) {
          best = h;
          pick = static_cast<int>(i);
        }
      }
    } else {
      while (fifo < tree.nodes.size() && expanded[fifo]) ++fifo;
      if (fifo < tree.nodes.size()) pick = static_cast<int>(fifo);
    }
    if (pick < 0) break;
    expanded[static_cast<std::size_t>(pick)] = 1;
    const SearchNode parent = tree.nodes[static_cast<std::size_t>(pick)];

    cand.clear();
    for (const auto& off : offsets) {
      const PointKey k{parent.key.ix + off.ix, parent.key.iy + off.iy};
      if (eligible(k) && segment_ok(parent.position, map.at(k).position)) cand.push_back(k);
    }
    const std::size_t take = std::min(cand.size(), static_cast<std::size_t>(params.samples_per_expansion));
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(ctx.rng->below(cand.size() - i));
      std::swap(cand[i], cand[j]);
    }
    for (std::size_t i = 0; i < take && static_cast<int>(tree.nodes.size()) < params.max_nodes; ++i) {
      const PointKey k = cand[i];
      const Vec3& pos = map.at(k).position;
      SearchNode n;
      n.key = k;
      n.position = pos;
      n.yaw = std::atan2(pos.y - parent.position.y, pos.x - parent.position.x);
      n.parent = pick;
      n.depth = parent.depth + 1;
      n.gain = ctx.gains->gain(k, n.yaw);
      n.sigma = parent.sigma + distance(pos, parent.position);
      n.utility = node_utility(parent.utility, n.gain, n.sigma, params.lambda);
      tree.nodes.push_back(n);
      expanded.push_back(0);
      if (frontier && n.gain > params.gain_min) frontier->insert(k, pos, n.gain);
    }
  }
  return tree;
}

}  // namespace mrx
