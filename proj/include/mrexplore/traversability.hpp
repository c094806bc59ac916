#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mrexplore/config.hpp"
#include "mrexplore/geometry.hpp"
#include "mrexplore/world.hpp"

namespace mrx {

inline constexpr double kInfiniteCost = std::numeric_limits<double>::infinity();

class OffMapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PointLabel : std::uint8_t { kTraversable = 0, kObstacle = 1 };

/// Horizontal cell index of the point map.
struct PointKey {
  int ix = 0;
  int iy = 0;
  auto operator<=>(const PointKey&) const = default;
};

struct TeammateFootprint {
  int robot_id = 0;
  Vec3 position;
  std::vector<Vec3> path;
  double inflation_radius = 0.0;
};

struct TraversabilityParams {
  double pitch = 0.25;
  double max_slope = 30.0 * kPi / 180.0;
  double max_step = 0.15;
  double robot_radius = 0.3;
  double w_slope = 1.0;
  double w_rough = 0.5;
  double w_prox = 2.0;
  double cost_max = 10.0;

  static TraversabilityParams from_config(const MissionConfig& cfg);
};

/// Point cloud map: one surface point per horizontal cell, each labeled traversable
/// or obstacle with a base traversal cost.
class SurfacePointMap {
 public:
  struct Point {
    bool present = false;
    bool obstacle_hit = false;
    bool imported = false;  // label fixed by an imported map until scanned
    PointLabel label = PointLabel::kObstacle;
    double base_cost = kInfiniteCost;
    Vec3 position;
    // Running sums of the hits that landed in this cell.
    double sx = 0, sy = 0, sz = 0;
    std::int64_t hits = 0;
    bool operator==(const Point&) const = default;
  };

  SurfacePointMap() = default;
  /// Map over a world of size_x by size_y meters.
  SurfacePointMap(double size_x, double size_y, TraversabilityParams params);

  const TraversabilityParams& params() const { return params_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  bool in_range(PointKey k) const { return k.ix >= 0 && k.iy >= 0 && k.ix < nx_ && k.iy < ny_; }
  std::optional<PointKey> key_of(double x, double y) const;
  const Point& at(PointKey k) const { return points_[index(k)]; }
  bool has(PointKey k) const { return in_range(k) && at(k).present; }
  bool traversable(PointKey k) const { return has(k) && at(k).label == PointLabel::kTraversable; }
  std::size_t size() const;
  std::size_t traversable_count() const;
  std::vector<PointKey> keys() const;
  std::vector<PointKey> traversable_keys() const;
  Vec3 cell_center(PointKey k) const { return {(k.ix + 0.5) * params_.pitch, (k.iy + 0.5) * params_.pitch, 0.0}; }

  /// Inserts the scan's hits and relabels the map.
  void update_from_scan(const Scan& scan);

  /// Recomputes every label and cost from the stored hits.
  void relabel();

  /// Base cost plus teammate inflation; throws OffMapError for an absent point.
  double multi_robot_cost(PointKey k, std::span<const TeammateFootprint> footprints) const;
  double multi_robot_cost(const Vec3& point, std::span<const TeammateFootprint> footprints) const;

  /// Closest traversable point; ties go to the lexicographically smaller key.
  std::optional<PointKey> nearest_traversable(const Vec3& query) const;

  /// `x y z label cost` per line.
  std::string export_text() const;
  /// Loads an exported map; imported labels hold until a scan touches the cell.
  void import_text(const std::string& text);

  /// Inserts a synthetic hit directly (tests and fixtures).
  void add_hit(const Vec3& p, bool obstacle);

  std::span<const Point> raw() const { return points_; }
  static SurfacePointMap from_raw(double size_x, double size_y, TraversabilityParams params, std::vector<Point> points);

  bool operator==(const SurfacePointMap& o) const { return nx_ == o.nx_ && ny_ == o.ny_ && points_ == o.points_; }

 private:
  std::size_t index(PointKey k) const { return static_cast<std::size_t>(k.iy) * nx_ + k.ix; }
  void label_point(PointKey k);

  TraversabilityParams params_;
  int nx_ = 0;
  int ny_ = 0;
  std::vector<Point> points_;
};

SurfacePointMap update_from_scan(SurfacePointMap map, const Scan& scan);
double multi_robot_cost(const SurfacePointMap& map, const Vec3& point, std::span<const TeammateFootprint> footprints);
std::optional<Vec3> nearest_traversable(const SurfacePointMap& map, const Vec3& query);

}  // namespace mrx
