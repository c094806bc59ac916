#include "mrexplore/traversability.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mrx {

TraversabilityParams TraversabilityParams::from_config(const MissionConfig& cfg) {
  TraversabilityParams p;
  p.pitch = cfg.trav_pitch();
  p.max_slope = cfg.max_slope_rad();
  p.max_step = cfg.max_step();
  p.robot_radius = cfg.bounding_radius;
  p.w_slope = cfg.w_slope;
  p.w_rough = cfg.w_rough;
  p.w_prox = cfg.w_prox;
  p.cost_max = cfg.cost_max;
  return p;
}

SurfacePointMap::SurfacePointMap(double size_x, double size_y, TraversabilityParams params)
    : params_(params),
      nx_(std::max(1, static_cast<int>(std::ceil(size_x / params.pitch - 1e-9)))),
      ny_(std::max(1, static_cast<int>(std::ceil(size_y / params.pitch - 1e-9)))),
      points_(static_cast<std::size_t>(nx_) * ny_) {}

std::optional<PointKey> SurfacePointMap::key_of(double x, double y) const {
  const PointKey k{static_cast<int>(std::floor(x / params_.pitch)), static_cast<int>(std::floor(y / params_.pitch))};
  // Points on the far world border belong to the last cell.
  PointKey c{std::min(k.ix, nx_ - 1), std::min(k.iy, ny_ - 1)};
  if (x < 0 || y < 0 || k.ix > nx_ || k.iy > ny_) return std::nullopt;
  return c;
}

std::size_t SurfacePointMap::size() const {
  return static_cast<std::size_t>(std::count_if(points_.begin(), points_.end(), [](const Point& p) { return p.present; }));
}

std::size_t SurfacePointMap::traversable_count() const {
  return static_cast<std::size_t>(std::count_if(points_.begin(), points_.end(), [](const Point& p) {
    return p.present && p.label == PointLabel::kTraversable;
  }));
}

std::vector<PointKey> SurfacePointMap::keys() const {
  std::vector<PointKey> out;
  for (int ix = 0; ix < nx_; ++ix)
    for (int iy = 0; iy < ny_; ++iy)
      if (at({ix, iy}).present) out.push_back({ix, iy});
  return out;
}

std::vector<PointKey> SurfacePointMap::traversable_keys() const {
  std::vector<PointKey> out;
  for (int ix = 0; ix < nx_; ++ix)
    for (int iy = 0; iy < ny_; ++iy)
      if (traversable({ix, iy})) out.push_back({ix, iy});
  return out;
}

void SurfacePointMap::add_hit(const Vec3& p, bool obstacle) {
  const auto k = key_of(p.x, p.y);
  if (!k) return;
  Point& pt = points_[index(*k)];
  if (pt.imported) {
    pt = Point{};
  }
  pt.present = true;
  pt.sx += p.x;
  pt.sy += p.y;
  pt.sz += p.z;
  ++pt.hits;
  if (obstacle) pt.obstacle_hit = true;
}

void SurfacePointMap::update_from_scan(const Scan& scan) {
  for (const auto& ray : scan.rays) {
    if (ray.kind == HitKind::kMaxRange) continue;
    add_hit(ray.end(scan.origin), ray.kind == HitKind::kObstacle);
  }
  relabel();
}

void SurfacePointMap::relabel() {
  for (int iy = 0; iy < ny_; ++iy)
    for (int ix = 0; ix < nx_; ++ix)
      if (at({ix, iy}).present) label_point({ix, iy});
}

void SurfacePointMap::label_point(PointKey k) {
  Point& pt = points_[index(k)];
  if (pt.imported) return;
  const double mean_z = pt.sz / static_cast<double>(pt.hits);
  const Vec3 center = cell_center(k);
  pt.position = {center.x, center.y, mean_z};
  auto obstacle = [&pt] {
    pt.label = PointLabel::kObstacle;
    pt.base_cost = kInfiniteCost;
  };
  if (pt.obstacle_hit) return obstacle();

  std::vector<Vec3> support{{pt.sx / pt.hits, pt.sy / pt.hits, mean_z}};
  bool complete = true;
  const double r = params_.robot_radius;
  const int ring = std::max(1, static_cast<int>(std::ceil(r / params_.pitch)));
  bool inflated = false;
  for (int dy = -ring; dy <= ring; ++dy) {
    for (int dx = -ring; dx <= ring; ++dx) {
      if (dx == 0 && dy == 0) continue;
      const PointKey n{k.ix + dx, k.iy + dy};
      if (!in_range(n)) continue;
      const Point& np = at(n);
      const bool adjacent = std::abs(dx) <= 1 && std::abs(dy) <= 1;
      if (!np.present) {
        if (adjacent) complete = false;
        continue;
      }
      if (np.obstacle_hit) {
        // Distance from this cell center to the obstacle cell square.
        const double h = 0.5 * params_.pitch;
        const Vec3 c = cell_center(n);
        const double ddx = std::max(0.0, std::abs(center.x - c.x) - h);
        const double ddy = std::max(0.0, std::abs(center.y - c.y) - h);
        if (ddx * ddx + ddy * ddy < r * r) inflated = true;
        continue;
      }
      if (adjacent) {
        support.push_back(np.imported ? np.position : Vec3{np.sx / np.hits, np.sy / np.hits, np.sz / np.hits});
      }
    }
  }
  const PlaneFit fit = fit_plane(support);
  if (!fit.degenerate) pt.position.z = fit.height_at(center.x, center.y);
  if (!complete || inflated) return obstacle();
  if (fit.slope > params_.max_slope + 1e-12 || fit.max_residual > params_.max_step + 1e-12) return obstacle();
  pt.label = PointLabel::kTraversable;
  const double cost = params_.w_slope * (fit.slope / params_.max_slope) + params_.w_rough * fit.roughness;
  pt.base_cost = std::clamp(cost, 0.0, params_.cost_max);
}

double SurfacePointMap::multi_robot_cost(PointKey k, std::span<const TeammateFootprint> footprints) const {
  if (!has(k)) throw OffMapError("multi_robot_cost: no map point at the queried location");
  const Point& pt = at(k);
  double cost = pt.base_cost;
  if (!std::isfinite(cost)) return cost;
  for (const auto& f : footprints) {
    const double ds = f.inflation_radius;
    double d = distance(pt.position, f.position);
    if (!f.path.empty()) d = std::min(d, point_polyline_distance(pt.position, f.path));
    if (d <= ds) return kInfiniteCost;
    if (d < 2.0 * ds) cost += params_.w_prox * (1.0 - d / (2.0 * ds));
  }
  return cost;
}

double SurfacePointMap::multi_robot_cost(const Vec3& point, std::span<const TeammateFootprint> footprints) const {
  const auto k = key_of(point.x, point.y);
  if (!k || !has(*k)) throw OffMapError("multi_robot_cost: no map point at the queried location");
  return multi_robot_cost(*k, footprints);
}

std::optional<PointKey> SurfacePointMap::nearest_traversable(const Vec3& query) const {
  std::optional<PointKey> best;
  double best_d = kInfiniteCost;
  for (int ix = 0; ix < nx_; ++ix) {
    for (int iy = 0; iy < ny_; ++iy) {
      if (!traversable({ix, iy})) continue;
      const double d = distance(at({ix, iy}).position, query);
      // Iteration is in key order, so strict comparison keeps the smaller key on ties.
      if (d < best_d) {
        best_d = d;
        best = PointKey{ix, iy};
      }
    }
  }
  return best;
}

std::string SurfacePointMap::export_text() const {
  std::ostringstream os;
  os.precision(17);
  for (int iy = 0; iy < ny_; ++iy) {
    for (int ix = 0; ix < nx_; ++ix) {
      const Point& p = at({ix, iy});
      if (!p.present) continue;
      os << p.position.x << " " << p.position.y << " " << p.position.z << " "
         << (p.label == PointLabel::kTraversable ? "traversable" : "obstacle") << " ";
      if (std::isfinite(p.base_cost)) os << p.base_cost;
      else os << "inf";
      os << "\n";
    }
  }
  return os.str();
}

void SurfacePointMap::import_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    double x, y, z;
    std::string label, cost_s;
    if (!(ls >> x >> y >> z >> label >> cost_s)) {
      throw std::runtime_error("point map line " + std::to_string(lineno) + ": expected 'x y z label cost'");
    }
    if (label != "traversable" && label != "obstacle") {
      throw std::runtime_error("point map line " + std::to_string(lineno) + ": bad label '" + label + "'");
    }
    const auto k = key_of(x, y);
    if (!k) continue;
    Point& p = points_[index(*k)];
    p = Point{};
    p.present = true;
    p.imported = true;
    p.position = {x, y, z};
    p.sx = x;
    p.sy = y;
    p.sz = z;
    p.hits = 1;
    p.label = label == "traversable" ? PointLabel::kTraversable : PointLabel::kObstacle;
    p.obstacle_hit = p.label == PointLabel::kObstacle;
    p.base_cost = cost_s == "inf" ? kInfiniteCost : std::stod(cost_s);
  }
}

SurfacePointMap SurfacePointMap::from_raw(double size_x, double size_y, TraversabilityParams params,
                                          std::vector<Point> points) {
  SurfacePointMap m(size_x, size_y, params);
  if (points.size() != m.points_.size()) throw std::invalid_argument("SurfacePointMap: raw size mismatch");
  m.points_ = std::move(points);
  return m;
}

SurfacePointMap update_from_scan(SurfacePointMap map, const Scan& scan) {
  map.update_from_scan(scan);
  return map;
}

double multi_robot_cost(const SurfacePointMap& map, const Vec3& point, std::span<const TeammateFootprint> footprints) {
  return map.multi_robot_cost(point, footprints);
}

std::optional<Vec3> nearest_traversable(const SurfacePointMap& map, const Vec3& query) {
  const auto k = map.nearest_traversable(query);
  if (!k) return std::nullopt;
  return map.at(*k).position;
}

}  // namespace mrx
