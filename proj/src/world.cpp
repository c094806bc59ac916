#include "mrexplore/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace mrx {

double ObstacleBox::distance2(const Vec3& p) const {
  auto axis = [](double v, double lo, double hi) {
    if (v < lo) return lo - v;
    if (v > hi) return v - hi;
    return 0.0;
  };
  const double dx = axis(p.x, min.x, max.x);
  const double dy = axis(p.y, min.y, max.y);
  const double dz = axis(p.z, min.z, max.z);
  return dx * dx + dy * dy + dz * dz;
}

Heightmap::Heightmap(int width, int depth, double cell_size, std::vector<double> heights,
                     std::vector<ObstacleBox> obstacles)
    : width_(width), depth_(depth), cell_size_(cell_size), heights_(std::move(heights)),
      obstacles_(std::move(obstacles)) {
  if (width_ < 1 || depth_ < 1) throw ScenarioError("terrain: width and depth must be >= 1");
  if (!(cell_size_ > 0.0)) throw ScenarioError("terrain: cell_size must be positive");
  if (heights_.size() != static_cast<std::size_t>(width_) * depth_) {
    throw ScenarioError("terrain: expected " + std::to_string(width_ * depth_) + " heights, got " +
                        std::to_string(heights_.size()));
  }
  for (double h : heights_) {
    if (!std::isfinite(h)) throw ScenarioError("terrain: heights must be finite");
  }
  for (const auto& b : obstacles_) {
    if (!(b.min.x < b.max.x && b.min.y < b.max.y && b.min.z < b.max.z)) {
      throw ScenarioError("obstacles: box must have positive extent on every axis");
    }
    if (b.min.x < 0 || b.min.y < 0 || b.max.x > size_x() + 1e-9 || b.max.y > size_y() + 1e-9) {
      throw ScenarioError("obstacles: box outside world bounds");
    }
  }
}

double Heightmap::surface_height(double x, double y) const {
  const double fx = std::clamp(x / cell_size_ - 0.5, 0.0, static_cast<double>(width_ - 1));
  const double fy = std::clamp(y / cell_size_ - 0.5, 0.0, static_cast<double>(depth_ - 1));
  const int x0 = std::min(static_cast<int>(fx), width_ - 1);
  const int y0 = std::min(static_cast<int>(fy), depth_ - 1);
  const int x1 = std::min(x0 + 1, width_ - 1);
  const int y1 = std::min(y0 + 1, depth_ - 1);
  const double tx = fx - x0;
  const double ty = fy - y0;
  const double h00 = cell_height(x0, y0), h10 = cell_height(x1, y0);
  const double h01 = cell_height(x0, y1), h11 = cell_height(x1, y1);
  return (h00 * (1 - tx) + h10 * tx) * (1 - ty) + (h01 * (1 - tx) + h11 * tx) * ty;
}

double Heightmap::min_height() const { return *std::min_element(heights_.begin(), heights_.end()); }
double Heightmap::max_height() const { return *std::max_element(heights_.begin(), heights_.end()); }

bool Heightmap::occupied(const Vec3& p, Tick t) const {
  if (p.z <= surface_height(p.x, p.y)) return true;
  for (const auto& b : obstacles_) {
    if (b.active(t) && b.contains(p)) return true;
  }
  return false;
}

SensorSpec SensorSpec::from_config(const MissionConfig& cfg) {
  SensorSpec s;
  s.range = cfg.sensor_range;
  s.horizontal_fov = cfg.horizontal_fov;
  s.vertical_fov = cfg.vertical_fov;
  s.rays_azimuth = cfg.rays_azimuth;
  s.rays_elevation = cfg.rays_elevation;
  s.mount_height = cfg.mount_height;
  return s;
}

bool SensorSpec::in_fov(const Vec3& offset, double yaw) const {
  if (vertical_fov < kPi) {
    const double elevation = std::atan2(offset.z, offset.norm_xy());
    if (std::abs(elevation) > 0.5 * vertical_fov) return false;
  }
  if (horizontal_fov < 2.0 * kPi) {
    if (offset.x == 0.0 && offset.y == 0.0) return true;
    const double rel = wrap_angle(std::atan2(offset.y, offset.x) - yaw);
    if (std::abs(rel) > 0.5 * horizontal_fov) return false;
  }
  return true;
}

std::vector<Vec3> scan_directions(const SensorSpec& spec, double yaw) {
  std::vector<Vec3> dirs;
  dirs.reserve(static_cast<std::size_t>(spec.rays_azimuth) * spec.rays_elevation);
  const double vfov = std::min(spec.vertical_fov, kPi);
  const bool full_circle = spec.horizontal_fov >= 2.0 * kPi;
  for (int i = 0; i < spec.rays_elevation; ++i) {
    const double el = -0.5 * vfov + (i + 0.5) * vfov / spec.rays_elevation;
    const double ce = std::cos(el), se = std::sin(el);
    for (int j = 0; j < spec.rays_azimuth; ++j) {
      const double az = full_circle ? yaw + j * 2.0 * kPi / spec.rays_azimuth
                                    : yaw - 0.5 * spec.horizontal_fov + (j + 0.5) * spec.horizontal_fov / spec.rays_azimuth;
      dirs.push_back({ce * std::cos(az), ce * std::sin(az), se});
    }
  }
  return dirs;
}

bool is_valid_configuration(const Heightmap& world, const RobotState& state, const MissionConfig& cfg, Tick t) {
  const Vec3& p = state.position;
  if (!world.in_bounds(p.x, p.y)) return false;
  const int cx = std::clamp(static_cast<int>(p.x / world.cell_size()), 0, world.width() - 1);
  const int cy = std::clamp(static_cast<int>(p.y / world.cell_size()), 0, world.depth() - 1);
  std::vector<Vec3> footprint;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      const int ix = cx + dx, iy = cy + dy;
      if (ix < 0 || iy < 0 || ix >= world.width() || iy >= world.depth()) continue;
      footprint.push_back(world.cell_center(ix, iy));
    }
  }
  const PlaneFit fit = fit_plane(footprint);
  const double max_step = 0.5 * state.body_clearance;
  if (fit.slope > cfg.max_slope_rad() + 1e-12) return false;
  if (fit.max_residual > max_step + 1e-12) return false;
  const double r2 = state.bounding_radius * state.bounding_radius;
  for (const auto& b : world.obstacles()) {
    if (b.active(t) && b.distance2(p) < r2) return false;
  }
  return true;
}

namespace {

double world_top(const Heightmap& world) {
  double top = world.max_height();
  for (const auto& b : world.obstacles()) top = std::max(top, b.max.z);
  return top;
}

}  // namespace

Scan simulate_scan(const Heightmap& world, const RobotState& state, const SensorSpec& spec, Tick t) {
  Scan scan;
  scan.robot_id = state.id;
  scan.origin = spec.center(state.position);
  scan.yaw = state.yaw;
  scan.timestamp = t;
  scan.range = spec.range;
  const double step = 0.5 * world.cell_size();
  const double top = world_top(world);
  const auto dirs = scan_directions(spec, state.yaw);
  scan.rays.reserve(dirs.size());
  for (const Vec3& d : dirs) {
    ScanRay ray{d, spec.range, HitKind::kMaxRange};
    double prev = 0.0;
    double s = 0.0;
    while (s < spec.range) {
      s = std::min(s + step, spec.range);
      const Vec3 p = scan.origin + d * s;
      if (!world.in_bounds(p.x, p.y)) break;
      if (p.z > top && d.z >= 0.0) break;
      if (world.occupied(p, t)) {
        double lo = prev, hi = s;
        for (int k = 0; k < 40; ++k) {
          const double mid = 0.5 * (lo + hi);
          if (world.occupied(scan.origin + d * mid, t)) hi = mid;
          else lo = mid;
        }
        const Vec3 h = scan.origin + d * hi;
        ray.distance = std::max(hi, 1e-9);
        ray.kind = h.z <= world.surface_height(h.x, h.y) ? HitKind::kTerrain : HitKind::kObstacle;
        break;
      }
      prev = s;
    }
    scan.rays.push_back(ray);
  }
  return scan;
}

RobotState advance_robot(const Heightmap& world, const RobotState& state, std::span<const Vec3> path, double speed,
                         std::optional<double> goal_yaw, double max_yaw_rate) {
  RobotState next = state;
  if (speed <= 0.0 && !goal_yaw) return next;
  Vec3 cur = state.position;
  double budget = speed;
  std::size_t idx = 0;
  // Skip leading waypoints the robot has already passed.
  while (idx + 1 < path.size() && distance_xy(cur, path[idx + 1]) <= distance_xy(path[idx], path[idx + 1])) ++idx;
  for (std::size_t k = path.size(); k-- > idx + 1;) {
    const Vec3 a{path[k - 1].x, path[k - 1].y, 0.0}, b{path[k].x, path[k].y, 0.0};
    if (point_segment_distance({cur.x, cur.y, 0.0}, a, b) <= 1e-9) {
      idx = k;
      break;
    }
  }
  bool moved = false;
  while (idx < path.size() && budget > 0.0) {
    const Vec3 target{path[idx].x, path[idx].y, cur.z};
    const double d = distance_xy(cur, target);
    if (d <= budget) {
      if (d > 0.0) {
        next.yaw = std::atan2(target.y - cur.y, target.x - cur.x);
        moved = true;
      }
      cur = target;
      budget -= d;
      ++idx;
    } else {
      const Vec3 dir = (target - cur) * (1.0 / d);
      cur = cur + dir * budget;
      next.yaw = std::atan2(dir.y, dir.x);
      budget = 0.0;
      moved = true;
    }
  }
  cur.x = std::clamp(cur.x, 0.0, world.size_x());
  cur.y = std::clamp(cur.y, 0.0, world.size_y());
  cur.z = world.surface_height(cur.x, cur.y);
  next.position = cur;
  const bool at_end = idx >= path.size();
  if (at_end && goal_yaw && speed > 0.0) {
    // Rotation only happens with whatever part of the tick is left after moving.
    const double err = wrap_angle(*goal_yaw - next.yaw);
    const double max_turn = moved ? max_yaw_rate * (budget / speed) : max_yaw_rate;
    next.yaw = wrap_angle(next.yaw + std::clamp(err, -max_turn, max_turn));
  } else if (at_end && goal_yaw) {
    const double err = wrap_angle(*goal_yaw - next.yaw);
    next.yaw = wrap_angle(next.yaw + std::clamp(err, -max_yaw_rate, max_yaw_rate));
  }
  return next;
}

namespace {

std::string strip(const std::string& s) {
  auto line = s;
  const auto hash = line.find('#');
  if (hash != std::string::npos) line.resize(hash);
  const auto b = line.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = line.find_last_not_of(" \t\r\n");
  return line.substr(b, e - b + 1);
}

std::vector<double> numbers(const std::string& line, int lineno) {
  std::istringstream is(line);
  std::vector<double> out;
  std::string tok;
  while (is >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ScenarioError("scenario line " + std::to_string(lineno) + ": bad number '" + tok + "'");
    }
  }
  return out;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int lineno = 0;
  int width = 0, depth = 0;
  double cell = 0.0;
  bool have_dims = false;
  std::vector<double> heights;
  std::vector<ObstacleBox> boxes;
  struct RobotLine {
    int id;
    double x, y, yaw;
  };
  std::vector<RobotLine> robots;
  std::string params;
  std::set<std::string> seen;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = strip(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ScenarioError("scenario line " + std::to_string(lineno) + ": bad section header");
      section = line.substr(1, line.size() - 2);
      if (section != "terrain" && section != "obstacles" && section != "robots" && section != "params") {
        throw ScenarioError("scenario line " + std::to_string(lineno) + ": unknown section '" + section + "'");
      }
      if (!seen.insert(section).second) throw ScenarioError("scenario: duplicate section [" + section + "]");
      continue;
    }
    if (section == "terrain") {
      const auto v = numbers(line, lineno);
      if (!have_dims) {
        if (v.size() != 3) throw ScenarioError("scenario line " + std::to_string(lineno) + ": expected 'width depth cell_size'");
        width = static_cast<int>(v[0]);
        depth = static_cast<int>(v[1]);
        cell = v[2];
        if (width != v[0] || depth != v[1] || width < 1 || depth < 1) {
          throw ScenarioError("scenario: width and depth must be positive integers");
        }
        have_dims = true;
      } else {
        if (static_cast<int>(v.size()) != width) {
          throw ScenarioError("scenario line " + std::to_string(lineno) + ": expected " + std::to_string(width) + " heights");
        }
        heights.insert(heights.end(), v.begin(), v.end());
      }
    } else if (section == "obstacles") {
      const auto v = numbers(line, lineno);
      if (v.size() != 6 && v.size() != 8) {
        throw ScenarioError("scenario line " + std::to_string(lineno) + ": obstacle needs 6 or 8 numbers");
      }
      ObstacleBox b{{v[0], v[1], v[2]}, {v[3], v[4], v[5]}, std::nullopt, std::nullopt};
      if (v.size() == 8) {
        b.appear = static_cast<Tick>(v[6]);
        b.disappear = static_cast<Tick>(v[7]);
      }
      boxes.push_back(b);
    } else if (section == "robots") {
      const auto v = numbers(line, lineno);
      if (v.size() != 4) throw ScenarioError("scenario line " + std::to_string(lineno) + ": robot needs 'id x y yaw'");
      robots.push_back({static_cast<int>(v[0]), v[1], v[2], v[3]});
    } else if (section == "params") {
      params += line + "\n";
    } else {
      throw ScenarioError("scenario line " + std::to_string(lineno) + ": content outside a section");
    }
  }
  if (!have_dims) throw ScenarioError("scenario: missing [terrain] section");
  if (static_cast<int>(heights.size()) != width * depth) {
    throw ScenarioError("scenario: expected " + std::to_string(depth) + " terrain rows");
  }
  Scenario sc;
  sc.world = Heightmap(width, depth, cell, std::move(heights), std::move(boxes));
  try {
    sc.config.apply_overrides(params);
  } catch (const ConfigError& e) {
    throw ScenarioError(std::string("scenario [params]: ") + e.what());
  }
  sc.params_text = params;
  if (robots.empty()) throw ScenarioError("scenario: no robots");
  std::sort(robots.begin(), robots.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < robots.size(); ++i) {
    const auto& r = robots[i];
    if (r.id != static_cast<int>(i) + 1) throw ScenarioError("scenario: robot ids must be 1..m without gaps");
    RobotState st;
    st.id = r.id;
    st.yaw = r.yaw;
    st.bounding_radius = sc.config.bounding_radius;
    st.body_clearance = sc.config.body_clearance;
    if (!sc.world.in_bounds(r.x, r.y)) throw ScenarioError("scenario: robot " + std::to_string(r.id) + " off terrain");
    st.position = {r.x, r.y, sc.world.surface_height(r.x, r.y)};
    if (!is_valid_configuration(sc.world, st, sc.config, 0)) {
      throw ScenarioError("scenario: robot " + std::to_string(r.id) + " spawned in an invalid configuration");
    }
    sc.robots.push_back(st);
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("scenario: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string format_scenario(const Scenario& sc) {
  std::ostringstream os;
  os.precision(17);
  const auto& w = sc.world;
  os << "[terrain]\n" << w.width() << " " << w.depth() << " " << w.cell_size() << "\n";
  for (int y = 0; y < w.depth(); ++y) {
    for (int x = 0; x < w.width(); ++x) os << (x ? " " : "") << w.cell_height(x, y);
    os << "\n";
  }
  os << "[obstacles]\n";
  for (const auto& b : w.obstacles()) {
    os << b.min.x << " " << b.min.y << " " << b.min.z << " " << b.max.x << " " << b.max.y << " " << b.max.z;
    if (b.appear || b.disappear) {
      os << " " << b.appear.value_or(0) << " " << b.disappear.value_or(std::numeric_limits<Tick>::max());
    }
    os << "\n";
  }
  os << "[robots]\n";
  for (const auto& r : sc.robots) os << r.id << " " << r.position.x << " " << r.position.y << " " << r.yaw << "\n";
  os << "[params]\n" << sc.params_text;
  return os.str();
}

}  // namespace mrx
