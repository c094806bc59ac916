#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mrexplore/config.hpp"
#include "mrexplore/geometry.hpp"

namespace mrx {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Axis-aligned obstacle box, optionally present only during [appear, disappear).
struct ObstacleBox {
  Vec3 min;
  Vec3 max;
  std::optional<Tick> appear;
  std::optional<Tick> disappear;

  bool active(Tick t) const {
    return (!appear || t >= *appear) && (!disappear || t < *disappear);
  }
  bool contains(const Vec3& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z && p.z <= max.z;
  }
  /// Squared distance from p to the box (0 inside).
  double distance2(const Vec3& p) const;
};

/// 2.5D terrain: per-cell elevations, bilinear between cell centers, plus obstacle boxes.
class Heightmap {
 public:
  Heightmap() = default;
  Heightmap(int width, int depth, double cell_size, std::vector<double> heights,
            std::vector<ObstacleBox> obstacles = {});

  int width() const { return width_; }
  int depth() const { return depth_; }
  double cell_size() const { return cell_size_; }
  double size_x() const { return width_ * cell_size_; }
  double size_y() const { return depth_ * cell_size_; }
  const std::vector<double>& heights() const { return heights_; }
  const std::vector<ObstacleBox>& obstacles() const { return obstacles_; }
  std::vector<ObstacleBox>& mutable_obstacles() { return obstacles_; }

  double cell_height(int ix, int iy) const { return heights_[static_cast<std::size_t>(iy) * width_ + ix]; }
  Vec3 cell_center(int ix, int iy) const {
    return {(ix + 0.5) * cell_size_, (iy + 0.5) * cell_size_, cell_height(ix, iy)};
  }
  bool in_bounds(double x, double y) const { return x >= 0 && y >= 0 && x <= size_x() && y <= size_y(); }

  /// Surface elevation at (x, y); clamped to the border outside the grid.
  double surface_height(double x, double y) const;

  double min_height() const;
  double max_height() const;

  /// True if p is strictly below the terrain or inside an obstacle active at tick t.
  bool occupied(const Vec3& p, Tick t) const;

 private:
  int width_ = 0;
  int depth_ = 0;
  double cell_size_ = 1.0;
  std::vector<double> heights_;
  std::vector<ObstacleBox> obstacles_;
};

struct RobotState {
  int id = 1;
  Vec3 position;
  double yaw = 0.0;
  double bounding_radius = 0.3;
  double body_clearance = 0.3;

  bool operator==(const RobotState&) const = default;
};

struct SensorSpec {
  double range = 5.0;
  double horizontal_fov = 2.0 * kPi;
  double vertical_fov = kPi;
  int rays_azimuth = 180;
  int rays_elevation = 90;
  double mount_height = 0.5;

  static SensorSpec from_config(const MissionConfig& cfg);
  /// Sensor center for a robot standing at `position`.
  Vec3 center(const Vec3& position) const { return position + Vec3{0, 0, mount_height}; }
  /// True if the direction (relative to the robot yaw) lies inside the field of view.
  bool in_fov(const Vec3& offset, double yaw) const;
};

enum class HitKind : std::uint8_t { kTerrain = 0, kObstacle = 1, kMaxRange = 2 };

struct ScanRay {
  Vec3 direction;
  double distance = 0.0;
  HitKind kind = HitKind::kMaxRange;

  Vec3 end(const Vec3& origin) const { return origin + direction * distance; }
};

/// One range scan. Identified by (robot_id, seq); `origin` is the sensor center.
struct Scan {
  int robot_id = 0;
  int seq = 0;
  Vec3 origin;
  double yaw = 0.0;
  Tick timestamp = 0;
  double range = 0.0;
  std::vector<ScanRay> rays;
};

using ScanPtr = std::shared_ptr<const Scan>;

/// Ray directions for a sensor with the given yaw, elevation-major order.
std::vector<Vec3> scan_directions(const SensorSpec& spec, double yaw);

/// Placement checks: footprint slope, height discontinuity, and sphere/box clearance.
bool is_valid_configuration(const Heightmap& world, const RobotState& state, const MissionConfig& cfg,
                            Tick t = 0);

/// Marches every ray from the sensor center until terrain, an active obstacle, or max range.
Scan simulate_scan(const Heightmap& world, const RobotState& state, const SensorSpec& spec, Tick t);

/// Moves the robot up to `speed` meters along `path`; once at the end, turns toward
/// `goal_yaw` at no more than `max_yaw_rate`.
RobotState advance_robot(const Heightmap& world, const RobotState& state, std::span<const Vec3> path,
                         double speed, std::optional<double> goal_yaw, double max_yaw_rate);

struct Scenario {
  Heightmap world;
  std::vector<RobotState> robots;
  MissionConfig config;  // defaults with the scenario's [params] applied
  std::string params_text;
};

Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);
std::string format_scenario(const Scenario& scenario);

}  // namespace mrx
