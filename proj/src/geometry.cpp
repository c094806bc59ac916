#include "mrexplore/geometry.hpp"

#include <algorithm>
#include <limits>

namespace mrx {

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.dot(ab);
  if (len2 <= 0.0) return distance(p, a);
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return distance(p, a + ab * t);
}

double segment_segment_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1) {
  // Closest points of two segments (Ericson, Real-Time Collision Detection 5.1.9).
  const Vec3 d1 = p1 - p0;
  const Vec3 d2 = q1 - q0;
  const Vec3 r = p0 - q0;
  const double a = d1.dot(d1);
  const double e = d2.dot(d2);
  const double f = d2.dot(r);
  constexpr double kEps = 1e-18;
  double s = 0.0;
  double t = 0.0;
  if (a <= kEps && e <= kEps) return distance(p0, q0);
  if (a <= kEps) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= kEps) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      s = denom > kEps ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return distance(p0 + d1 * s, q0 + d2 * t);
}

double point_polyline_distance(const Vec3& p, std::span<const Vec3> polyline) {
  if (polyline.empty()) return std::numeric_limits<double>::infinity();
  if (polyline.size() == 1) return distance(p, polyline.front());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
    best = std::min(best, point_segment_distance(p, polyline[i], polyline[i + 1]));
  }
  return best;
}

namespace {

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool on_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool segments_touch(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double d1 = cross(c, d, a);
  const double d2 = cross(c, d, b);
  const double d3 = cross(a, b, c);
  const double d4 = cross(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  if (d1 == 0 && on_segment(a, c, d)) return true;
  if (d2 == 0 && on_segment(b, c, d)) return true;
  if (d3 == 0 && on_segment(c, a, b)) return true;
  if (d4 == 0 && on_segment(d, a, b)) return true;
  return false;
}

}  // namespace

bool Polygon::contains(double x, double y) const {
  const std::size_t n = vertices_.size();
  if (n < 3) return false;
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = vertices_[i];
    const Vec2& b = vertices_[j];
    if (cross(a, b, {x, y}) == 0.0 && on_segment({x, y}, a, b)) return true;
    if ((a.y > y) != (b.y > y)) {
      const double xi = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (x < xi) inside = !inside;
    }
  }
  return inside;
}

bool Polygon::is_simple() const {
  const std::size_t n = vertices_.size();
  if (n < 3) return false;
  double area2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = vertices_[i];
    const Vec2& b = vertices_[(i + 1) % n];
    area2 += a.x * b.y - b.x * a.y;
  }
  if (std::abs(area2) <= 1e-12) return false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_touch(vertices_[i], vertices_[(i + 1) % n], vertices_[j], vertices_[(j + 1) % n])) {
        return false;
      }
    }
  }
  return true;
}

double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a <= 0.0) a += 2.0 * kPi;
  return a - kPi;
}


PlaneFit fit_plane(std::span<const Vec3> points) {
  PlaneFit fit;
  const std::size_t n = points.size();
  if (n == 0) {
    fit.degenerate = true;
    return fit;
  }
  // Center the data for conditioning.
  double mx = 0, my = 0, mz = 0;
  for (const auto& p : points) {
    mx += p.x;
    my += p.y;
    mz += p.z;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  mz /= static_cast<double>(n);
  double sxx = 0, sxy = 0, syy = 0, sxz = 0, syz = 0;
  for (const auto& p : points) {
    const double dx = p.x - mx, dy = p.y - my, dz = p.z - mz;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
    sxz += dx * dz;
    syz += dy * dz;
  }
  const double det = sxx * syy - sxy * sxy;
  const double scale = std::max(sxx * syy, 1e-300);
  if (n < 3 || det <= 1e-12 * scale) {
    fit.degenerate = true;
    fit.c = mz;
  } else {
    fit.gx = (sxz * syy - syz * sxy) / det;
    fit.gy = (syz * sxx - sxz * sxy) / det;
    fit.c = mz - fit.gx * mx - fit.gy * my;
  }
  fit.slope = std::atan(std::hypot(fit.gx, fit.gy));
  double ss = 0.0;
  for (const auto& p : points) {
    const double r = p.z - fit.height_at(p.x, p.y);
    ss += r * r;
    fit.max_residual = std::max(fit.max_residual, std::abs(r));
  }
  fit.roughness = std::sqrt(ss / static_cast<double>(n));
  return fit;
}

}  // namespace mrx
