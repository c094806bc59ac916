#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace mrx {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  bool operator==(const Vec3&) const = default;

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
  double norm_xy() const { return std::hypot(x, y); }
};

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }
inline double distance_xy(const Vec3& a, const Vec3& b) { return (a - b).norm_xy(); }

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2&) const = default;
};

/// Distance from point p to the closed segment [a, b].
double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b);

/// Minimum distance between closed segments [p0, p1] and [q0, q1].
double segment_segment_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1);

/// Distance from p to a polyline; a single vertex is treated as a point.
double point_polyline_distance(const Vec3& p, std::span<const Vec3> polyline);

/// Simple planar polygon in the world xy plane.
class Polygon {
 public:
  Polygon() = default;
  explicit Polygon(std::vector<Vec2> vertices) : vertices_(std::move(vertices)) {}

  const std::vector<Vec2>& vertices() const { return vertices_; }
  bool empty() const { return vertices_.empty(); }

  /// Even-odd containment test; points exactly on an edge count as inside.
  bool contains(double x, double y) const;

  /// At least three vertices, non-zero area and no two non-adjacent edges touch.
  bool is_simple() const;

 private:
  std::vector<Vec2> vertices_;
};

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

constexpr double kPi = 3.14159265358979323846;


/// Least-squares plane z = a x + b y + c through a point set.
struct PlaneFit {
  double slope = 0.0;         // radians, angle between plane normal and vertical
  double roughness = 0.0;     // RMS residual
  double max_residual = 0.0;  // largest absolute residual
  double gx = 0.0;            // dz/dx
  double gy = 0.0;            // dz/dy
  double c = 0.0;
  bool degenerate = false;    // fewer than 3 points or collinear support

  double height_at(double x, double y) const { return gx * x + gy * y + c; }
};

PlaneFit fit_plane(std::span<const Vec3> points);

}  // namespace mrx
