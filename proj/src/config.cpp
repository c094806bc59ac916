#include "mrexplore/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace mrx {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: '" + key + "' expects true/false, got '" + v + "'");
}

std::string fmt(double d) {
  std::ostringstream os;
  os.precision(17);
  os << d;
  return os.str();
}

}  // namespace

Polygon parse_polygon(const std::string& text) {
  std::vector<Vec2> pts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto comma = item.find(',');
    if (comma == std::string::npos) throw ConfigError("polygon: vertex '" + item + "' lacks a comma");
    pts.push_back({to_double("fence", trim(item.substr(0, comma))),
                   to_double("fence", trim(item.substr(comma + 1)))});
  }
  return Polygon(std::move(pts));
}

std::string format_polygon(const Polygon& polygon) {
  std::string out;
  for (const auto& v : polygon.vertices()) {
    if (!out.empty()) out += ';';
    out += fmt(v.x) + "," + fmt(v.y);
  }
  return out;
}

void MissionConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  using Setter = std::function<void(const std::string&)>;
  auto dbl = [&](double& field) -> Setter { return [&field, key](const std::string& s) { field = to_double(key, s); }; };
  auto integer = [&](auto& field) -> Setter {
    return [&field, key](const std::string& s) { field = static_cast<std::decay_t<decltype(field)>>(to_int(key, s)); };
  };
  const std::map<std::string, Setter> table = {
      {"mission_seed", [this, key](const std::string& s) { mission_seed = static_cast<std::uint64_t>(to_int(key, s)); }},
      {"tick_length", dbl(tick_length)},
      {"mode",
       [this, key](const std::string& s) {
         if (s == "exploration") mode = MissionMode::kExploration;
         else if (s == "coverage") mode = MissionMode::kCoverage;
         else throw ConfigError("config: mode must be exploration|coverage");
       }},
      {"max_ticks", integer(max_ticks)},
      {"bounding_radius", dbl(bounding_radius)},
      {"body_clearance", dbl(body_clearance)},
      {"max_slope_deg", dbl(max_slope_deg)},
      {"speed", dbl(speed)},
      {"max_yaw_rate", dbl(max_yaw_rate)},
      {"sensor_range", dbl(sensor_range)},
      {"horizontal_fov", dbl(horizontal_fov)},
      {"vertical_fov", dbl(vertical_fov)},
      {"rays_azimuth", integer(rays_azimuth)},
      {"rays_elevation", integer(rays_elevation)},
      {"mount_height", dbl(mount_height)},
      {"resolution", dbl(resolution)},
      {"map_headroom", dbl(map_headroom)},
      {"w_slope", dbl(w_slope)},
      {"w_rough", dbl(w_rough)},
      {"w_prox", dbl(w_prox)},
      {"cost_max", dbl(cost_max)},
      {"goal_conflict_distance", [this, key](const std::string& s) { goal_conflict_distance = to_double(key, s); }},
      {"safety_distance", [this, key](const std::string& s) { safety_distance = to_double(key, s); }},
      {"expiration_ticks", integer(expiration_ticks)},
      {"loss_probability", dbl(loss_probability)},
      {"delivery_delay", integer(delivery_delay)},
      {"tree_period", integer(tree_period)},
      {"lossless_tree", [this, key](const std::string& s) { lossless_tree = to_bool(key, s); }},
      {"box_sizes",
       [this, key](const std::string& s) {
         box_sizes.clear();
         std::stringstream ss(s);
         std::string item;
         while (std::getline(ss, item, ',')) box_sizes.push_back(to_double(key, trim(item)));
       }},
      {"forward_depth", integer(forward_depth)},
      {"max_tree_nodes", integer(max_tree_nodes)},
      {"edge_min", dbl(edge_min)},
      {"edge_max", dbl(edge_max)},
      {"samples_per_expansion", integer(samples_per_expansion)},
      {"lambda", dbl(lambda)},
      {"utility_min", dbl(utility_min)},
      {"gain_min", dbl(gain_min)},
      {"cluster_radius", dbl(cluster_radius)},
      {"sleep_ticks", integer(sleep_ticks)},
      {"revalidate_ticks", integer(revalidate_ticks)},
      {"hysteresis", dbl(hysteresis)},
      {"poi_bias_probability", dbl(poi_bias_probability)},
      {"fence",
       [this](const std::string& s) {
         if (s.empty() || s == "none") fence.reset();
         else fence = parse_polygon(s);
       }},
  };
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("config: unknown key '" + key + "'");
  it->second(v);
}

void MissionConfig::apply_overrides(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

void MissionConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("config: " + what);
  };
  require(sensor_range > 0, "sensor_range must be positive");
  require(horizontal_fov > 0 && horizontal_fov <= 2 * kPi + 1e-12, "horizontal_fov must be in (0, 2pi]");
  require(vertical_fov > 0 && vertical_fov <= 2 * kPi + 1e-12, "vertical_fov must be in (0, 2pi]");
  require(rays_azimuth >= 1 && rays_elevation >= 1, "ray counts must be >= 1");
  require(resolution > 0, "resolution must be positive");
  require(bounding_radius > 0, "bounding_radius must be positive");
  require(goal_distance() <= sensor_range, "goal_conflict_distance (D_g) must not exceed sensor_range (R_s)");
  require(safety() >= 2.0 * bounding_radius, "safety_distance (D_s) must be at least 2 * bounding_radius");
  require(loss_probability >= 0.0 && loss_probability <= 1.0, "loss_probability must be in [0, 1]");
  require(delivery_delay >= 0, "delivery_delay must be >= 0");
  require(tree_period >= 1, "tree_period must be >= 1");
  require(expiration_ticks >= 0, "expiration_ticks must be >= 0");
  require(!box_sizes.empty(), "box_sizes must not be empty");
  for (std::size_t i = 1; i < box_sizes.size(); ++i) {
    require(box_sizes[i] > box_sizes[i - 1], "box_sizes must be strictly increasing");
  }
  require(forward_depth >= 1, "forward_depth must be >= 1");
  require(max_tree_nodes >= 1, "max_tree_nodes must be >= 1");
  require(edge_min > 0 && edge_max >= edge_min, "edge lengths must satisfy 0 < edge_min <= edge_max");
  require(samples_per_expansion >= 1, "samples_per_expansion must be >= 1");
  require(lambda >= 0, "lambda must be >= 0");
  require(speed >= 0, "speed must be >= 0");
  require(max_ticks >= 0, "max_ticks must be >= 0");
  require(hysteresis >= 1.0, "hysteresis must be >= 1");
  require(poi_bias_probability >= 0 && poi_bias_probability <= 1, "poi_bias_probability must be in [0, 1]");
  if (fence) require(fence->is_simple(), "fence polygon must be simple");
}

std::string MissionConfig::to_text() const {
  std::ostringstream os;
  os << "mission_seed=" << mission_seed << "\n";
  os << "tick_length=" << fmt(tick_length) << "\n";
  os << "mode=" << (mode == MissionMode::kExploration ? "exploration" : "coverage") << "\n";
  os << "max_ticks=" << max_ticks << "\n";
  os << "bounding_radius=" << fmt(bounding_radius) << "\n";
  os << "body_clearance=" << fmt(body_clearance) << "\n";
  os << "max_slope_deg=" << fmt(max_slope_deg) << "\n";
  os << "speed=" << fmt(speed) << "\n";
  os << "max_yaw_rate=" << fmt(max_yaw_rate) << "\n";
  os << "sensor_range=" << fmt(sensor_range) << "\n";
  os << "horizontal_fov=" << fmt(horizontal_fov) << "\n";
  os << "vertical_fov=" << fmt(vertical_fov) << "\n";
  os << "rays_azimuth=" << rays_azimuth << "\n";
  os << "rays_elevation=" << rays_elevation << "\n";
  os << "mount_height=" << fmt(mount_height) << "\n";
  os << "resolution=" << fmt(resolution) << "\n";
  os << "map_headroom=" << fmt(map_headroom) << "\n";
  os << "w_slope=" << fmt(w_slope) << "\n";
  os << "w_rough=" << fmt(w_rough) << "\n";
  os << "w_prox=" << fmt(w_prox) << "\n";
  os << "cost_max=" << fmt(cost_max) << "\n";
  if (goal_conflict_distance) os << "goal_conflict_distance=" << fmt(*goal_conflict_distance) << "\n";
  if (safety_distance) os << "safety_distance=" << fmt(*safety_distance) << "\n";
  os << "expiration_ticks=" << expiration_ticks << "\n";
  os << "loss_probability=" << fmt(loss_probability) << "\n";
  os << "delivery_delay=" << delivery_delay << "\n";
  os << "tree_period=" << tree_period << "\n";
  os << "lossless_tree=" << (lossless_tree ? "true" : "false") << "\n";
  os << "box_sizes=";
  for (std::size_t i = 0; i < box_sizes.size(); ++i) os << (i ? "," : "") << fmt(box_sizes[i]);
  os << "\n";
  os << "forward_depth=" << forward_depth << "\n";
  os << "max_tree_nodes=" << max_tree_nodes << "\n";
  os << "edge_min=" << fmt(edge_min) << "\n";
  os << "edge_max=" << fmt(edge_max) << "\n";
  os << "samples_per_expansion=" << samples_per_expansion << "\n";
  os << "lambda=" << fmt(lambda) << "\n";
  os << "utility_min=" << fmt(utility_min) << "\n";
  os << "gain_min=" << fmt(gain_min) << "\n";
  os << "cluster_radius=" << fmt(cluster_radius) << "\n";
  os << "sleep_ticks=" << sleep_ticks << "\n";
  os << "revalidate_ticks=" << revalidate_ticks << "\n";
  os << "hysteresis=" << fmt(hysteresis) << "\n";
  os << "poi_bias_probability=" << fmt(poi_bias_probability) << "\n";
  if (fence) os << "fence=" << format_polygon(*fence) << "\n";
  return os.str();
}

MissionConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  MissionConfig cfg;
  cfg.apply_overrides(ss.str());
  return cfg;
}

}  // namespace mrx
