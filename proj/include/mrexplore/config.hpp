#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mrexplore/geometry.hpp"

namespace mrx {

using Tick = std::int64_t;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class MissionMode { kExploration, kCoverage };

/// Every tunable of the mission. Defaults are the documented desk-scale values;
/// any of them can be overridden with `key=value` lines.
struct MissionConfig {
  std::uint64_t mission_seed = 1;
  double tick_length = 1.0;
  MissionMode mode = MissionMode::kExploration;
  Tick max_ticks = 2000;

  // Robot body and motion.
  double bounding_radius = 0.3;
  double body_clearance = 0.3;
  double max_slope_deg = 30.0;
  double speed = 0.5;          // meters per tick
  double max_yaw_rate = 1.57;  // radians per tick

  // Range sensor.
  double sensor_range = 5.0;
  double horizontal_fov = 2.0 * kPi;
  double vertical_fov = kPi;
  int rays_azimuth = 180;
  int rays_elevation = 90;
  double mount_height = 0.5;

  // Volumetric and point map.
  double resolution = 0.25;
  double map_headroom = 2.0;  // grid extends this far above the highest terrain

  // Traversability costs.
  double w_slope = 1.0;
  double w_rough = 0.5;
  double w_prox = 2.0;
  double cost_max = 10.0;

  // Coordination.
  std::optional<double> goal_conflict_distance;  // D_g, defaults to sensor_range
  std::optional<double> safety_distance;         // D_s, defaults to 2.5 * bounding_radius
  Tick expiration_ticks = 50;

  // Network.
  double loss_probability = 0.1;
  Tick delivery_delay = 1;
  Tick tree_period = 10;
  bool lossless_tree = false;

  // Exploration agent.
  std::vector<double> box_sizes{4.0, 8.0, 16.0};
  int forward_depth = 1;
  int max_tree_nodes = 200;
  double edge_min = 0.5;
  double edge_max = 1.0;
  int samples_per_expansion = 8;
  double lambda = 0.5;
  double utility_min = 0.05;
  double gain_min = 0.02;
  double cluster_radius = 2.0;
  Tick sleep_ticks = 2;
  Tick revalidate_ticks = 5;
  double hysteresis = 1.2;
  double poi_bias_probability = 0.5;

  std::optional<Polygon> fence;

  // Derived quantities.
  double max_slope_rad() const { return max_slope_deg * kPi / 180.0; }
  double max_step() const { return 0.5 * body_clearance; }
  double goal_distance() const { return goal_conflict_distance.value_or(sensor_range); }
  double safety() const { return safety_distance.value_or(2.5 * bounding_radius); }
  double trav_pitch() const { return resolution; }
  double snap_radius() const { return 2.0 * resolution; }
  double goal_tolerance() const { return 1.5 * resolution; }

  /// Applies a single override; unknown keys and malformed values throw ConfigError.
  void set(const std::string& key, const std::string& value);

  /// Applies `key=value` lines; blank lines and `#` comments are skipped.
  void apply_overrides(const std::string& text);

  /// Enforces cross-parameter constraints (D_g <= R_s, D_s >= 2 R_b, ...).
  void validate() const;

  /// Canonical `key=value` dump in a stable order.
  std::string to_text() const;
};

MissionConfig load_config_file(const std::string& path);

/// Parses "x1,y1;x2,y2;..." into a polygon.
Polygon parse_polygon(const std::string& text);
std::string format_polygon(const Polygon& polygon);

}  // namespace mrx
