#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mrexplore/geometry.hpp"
#include "mrexplore/world.hpp"

namespace mrx {

enum class VoxelState : std::uint8_t { kUnknown = 0, kFree = 1, kOccupied = 2 };

/// Log-odds model constants.
struct LogOdds {
  static constexpr float kHit = 0.85f;
  static constexpr float kMiss = -0.4f;
  static constexpr float kMin = -2.0f;
  static constexpr float kMax = 3.5f;
  static constexpr float kOccupiedAbove = 0.1f;
  static constexpr float kFreeBelow = -0.1f;
};

struct GridGeometry {
  Vec3 origin;
  double resolution = 0.25;
  int nx = 0;
  int ny = 0;
  int nz = 0;

  std::size_t size() const { return static_cast<std::size_t>(nx) * ny * nz; }
  std::size_t index(int ix, int iy, int iz) const {
    return (static_cast<std::size_t>(iz) * ny + iy) * nx + ix;
  }
  std::array<int, 3> coords(std::size_t idx) const {
    const int ix = static_cast<int>(idx % nx);
    const int iy = static_cast<int>((idx / nx) % ny);
    const int iz = static_cast<int>(idx / (static_cast<std::size_t>(nx) * ny));
    return {ix, iy, iz};
  }
  Vec3 center(int ix, int iy, int iz) const {
    return origin + Vec3{(ix + 0.5) * resolution, (iy + 0.5) * resolution, (iz + 0.5) * resolution};
  }
  Vec3 center(std::size_t idx) const {
    const auto c = coords(idx);
    return center(c[0], c[1], c[2]);
  }
  Vec3 upper() const { return origin + Vec3{nx * resolution, ny * resolution, nz * resolution}; }
  bool contains(const Vec3& p) const;
  std::optional<std::size_t> voxel_of(const Vec3& p) const;
  double voxel_volume() const { return resolution * resolution * resolution; }
  bool operator==(const GridGeometry&) const = default;

  /// Grid covering the world footprint, from just below the lowest terrain to
  /// `map_headroom` above the highest.
  static GridGeometry for_world(const Heightmap& world, const MissionConfig& cfg);
};

/// Visits, in order, every voxel whose interior the segment a->b crosses (clipped
/// to the grid). Where the segment passes exactly through an edge or corner the
/// touching voxels are skipped. Returning false from `visit` stops the walk.
void traverse_segment(const GridGeometry& g, const Vec3& a, const Vec3& b,
                      const std::function<bool(std::size_t)>& visit);

struct GainQuery {
  Vec3 viewpoint;  // sensor center
  double yaw = 0.0;
  SensorSpec spec;
  const Polygon* fence = nullptr;
};

/// Dense probabilistic occupancy grid.
class VoxelGrid {
 public:
  VoxelGrid() = default;
  explicit VoxelGrid(GridGeometry g);

  const GridGeometry& geometry() const { return geom_; }
  VoxelState state(std::size_t idx) const { return static_cast<VoxelState>(states_[idx]); }
  float log_odds(std::size_t idx) const { return log_odds_[idx]; }
  std::span<const std::uint8_t> raw_states() const { return states_; }
  std::span<const float> raw_log_odds() const { return log_odds_; }
  std::size_t known_count() const { return known_count_; }

  /// Applies one scan: voxels crossed before a hit get a miss update, the hit
  /// voxel a hit update; each voxel is updated at most once per scan.
  void integrate(const Scan& scan);

  double known_volume() const { return static_cast<double>(known_count_) * geom_.voxel_volume(); }

  /// Volume of unknown voxels inside the field of view (and fence) whose
  /// center is visible from the sensor through non-occupied voxels.
  double information_gain(const GainQuery& query) const;

  /// Restores a grid from raw storage (persistence).
  static VoxelGrid from_raw(GridGeometry g, std::vector<std::uint8_t> states, std::vector<float> log_odds);

  bool operator==(const VoxelGrid& o) const {
    return geom_ == o.geom_ && states_ == o.states_ && log_odds_ == o.log_odds_;
  }

  /// Text snapshot: header plus run-length-encoded states (U/F/O).
  std::string snapshot() const;
  /// Parses a snapshot; log-odds are reset to the representative value of each state.
  static VoxelGrid from_snapshot(const std::string& text);

 private:
  GridGeometry geom_;
  std::vector<std::uint8_t> states_;
  std::vector<float> log_odds_;
  std::size_t known_count_ = 0;
  // Per-scan dedup scratch, not part of the map state.
  std::vector<std::uint32_t> mark_;
  std::uint32_t epoch_ = 0;
};

VoxelGrid integrate_scan(VoxelGrid grid, const Scan& scan);
double information_gain(const VoxelGrid& grid, const GainQuery& query);
double known_volume(const VoxelGrid& grid);

/// Folds integrate_scan over the scans in (timestamp, robot, seq) order.
VoxelGrid merge_missing(VoxelGrid grid, std::vector<ScanPtr> scans);

}  // namespace mrx
