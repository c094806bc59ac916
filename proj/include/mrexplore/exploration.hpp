#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "mrexplore/messages.hpp"
#include "mrexplore/rng.hpp"
#include "mrexplore/voxel_grid.hpp"

namespace mrx {

/// History of view configurations K_j; node i owns the scan with sequence `scan_seq`.
class ExplorationTree {
 public:
  struct Node {
    Vec3 position;
    double yaw = 0.0;
    Tick tick = 0;
    int parent = -1;
    int scan_seq = -1;
    bool operator==(const Node&) const = default;
  };

  int add_root(const Vec3& position, double yaw, Tick tick, int scan_seq);
  int add(int parent, const Vec3& position, double yaw, Tick tick, int scan_seq);

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  std::vector<TreeNodeInfo> info() const;

  bool operator==(const ExplorationTree&) const = default;
  std::vector<Node>& mutable_nodes() { return nodes_; }

 private:
  std::vector<Node> nodes_;
};

/// Axis-aligned cube of side `side` centered at `center`.
struct SearchBox {
  Vec3 center;
  double side = 0.0;
  bool contains(const Vec3& p) const {
    const double h = 0.5 * side;
    return std::abs(p.x - center.x) <= h && std::abs(p.y - center.y) <= h && std::abs(p.z - center.z) <= h;
  }
};

struct SearchNode {
  PointKey key;
  Vec3 position;
  double yaw = 0.0;
  int parent = -1;
  int depth = 0;
  double gain = 0.0;     // I
  double sigma = 0.0;    // path length from the root
  double utility = 0.0;  // U
};

struct SearchTree {
  SearchBox box;
  std::vector<SearchNode> nodes;  // nodes[0] is the root

  /// Index of the non-root node with the largest utility, or -1. Utilities within a
  /// relative 1e-12 of the maximum are ties and go to the lowest index.
  int best() const;
  /// Node indices from the root to `idx` inclusive.
  std::vector<int> branch(int idx) const;
};

/// U(n_h) = U(n_{h-1}) + I(n_h) exp(-lambda sigma(n_h)).
inline double node_utility(double parent_utility, double gain, double sigma, double lambda) {
  return parent_utility + gain * std::exp(-lambda * sigma);
}

/// Recomputes sigma and U for every node from the positions and gains.
void compute_utilities(SearchTree& tree, double lambda);

/// U_j = I_j exp(-lambda c_j).
inline double cluster_utility(double total_gain, double cost, double lambda) {
  return total_gain * std::exp(-lambda * cost);
}

/// Archive of frontier candidates Y_j; each new node hangs off its nearest neighbor.
class FrontierTree {
 public:
  struct Node {
    PointKey key;
    Vec3 position;
    double gain = 0.0;
    int parent = -1;
    bool operator==(const Node&) const = default;
  };

  /// Inserts a candidate or refreshes the gain of the node already at that key.
  int insert(PointKey key, const Vec3& position, double gain);
  int nearest(const Vec3& p) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  std::vector<Node>& mutable_nodes() { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  /// Every node reaches the first one through parent links.
  bool connected() const;
  void rebuild_index();

  bool operator==(const FrontierTree& o) const { return nodes_ == o.nodes_; }

 private:
  std::vector<Node> nodes_;
  std::map<PointKey, int> by_key_;
};

struct FrontierCluster {
  std::vector<int> members;
  Vec3 centroid;
  double total_gain = 0.0;
  double cost_to_go = 0.0;
  double utility = 0.0;
  std::optional<PointKey> goal_key;
  Vec3 goal;
};

/// Euclidean single-linkage clusters of the frontier nodes whose gain exceeds `gain_min`.
std::vector<FrontierCluster> cluster_frontier(const FrontierTree& tree, double radius, double gain_min);

enum class PoiSource : std::uint8_t { kOperator, kDetector };

struct PoiEntry {
  Vec3 position;
  double priority = 0.0;
  Tick tick = 0;
  std::uint64_t order = 0;
  PoiSource source = PoiSource::kOperator;
  bool operator==(const PoiEntry&) const = default;
};

/// Points of interest P_j; highest priority first, earlier insertion on ties.
class PoiQueue {
 public:
  void push(const Vec3& position, double priority, Tick tick, PoiSource source = PoiSource::kOperator);
  const PoiEntry* top() const;
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  /// Removes every entry strictly closer than `radius` to `robot`; returns them.
  std::vector<PoiEntry> remove_within(const Vec3& robot, double radius);
  const std::vector<PoiEntry>& entries() const { return entries_; }

  bool operator==(const PoiQueue&) const = default;
  void restore(std::vector<PoiEntry> entries, std::uint64_t next_order) {
    entries_ = std::move(entries);
    next_order_ = next_order;
  }
  std::uint64_t next_order() const { return next_order_; }

 private:
  std::vector<PoiEntry> entries_;
  std::uint64_t next_order_ = 0;
};

/// A disc (in xy) where candidate goals are not allowed.
struct Exclusion {
  Vec3 center;
  double radius = 0.0;
};

/// Per-call cache of view gains, keyed by map cell.
class GainCache {
 public:
  GainCache(const SurfacePointMap& map, const VoxelGrid& grid, const SensorSpec& spec, const Polygon* fence);
  double gain(PointKey k, double yaw);
  double gain_at(const Vec3& position, double yaw) const;

 private:
  const SurfacePointMap* map_;
  const VoxelGrid* grid_;
  SensorSpec spec_;
  const Polygon* fence_;
  bool yaw_free_;
  std::vector<double> cache_;
};

struct SearchTreeParams {
  int max_nodes = 200;
  double edge_min = 0.5;
  double edge_max = 1.0;
  int samples_per_expansion = 8;
  double lambda = 0.5;
  double gain_min = 0.02;
  double poi_bias_probability = 0.5;

  static SearchTreeParams from_config(const MissionConfig& cfg);
};

struct SearchContext {
  const SurfacePointMap* map = nullptr;
  std::span<const TeammateFootprint> footprints;
  const Polygon* fence = nullptr;
  std::span<const Exclusion> exclusions;
  std::optional<Vec3> poi;  // p*, biases the expansion when set
  GainCache* gains = nullptr;
  Rng* rng = nullptr;
};

/// Breadth-first sampling tree over traversable points inside box and fence.
/// With a POI, each expansion step tosses a coin to pick the open node closest
/// to the POI instead of the oldest one. Nodes with gain above the threshold
/// are inserted into `frontier` when given.
SearchTree build_search_tree(const Vec3& root_position, double root_yaw, const SearchBox& box,
                             const SearchTreeParams& params, const SearchContext& ctx, FrontierTree* frontier);

}  // namespace mrx
