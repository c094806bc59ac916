#include "mrexplore/voxel_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mrx {

bool GridGeometry::contains(const Vec3& p) const {
  const Vec3 hi = upper();
  return p.x >= origin.x && p.y >= origin.y && p.z >= origin.z && p.x < hi.x && p.y < hi.y && p.z < hi.z;
}

std::optional<std::size_t> GridGeometry::voxel_of(const Vec3& p) const {
  if (!contains(p)) return std::nullopt;
  const int ix = std::min(static_cast<int>(std::floor((p.x - origin.x) / resolution)), nx - 1);
  const int iy = std::min(static_cast<int>(std::floor((p.y - origin.y) / resolution)), ny - 1);
  const int iz = std::min(static_cast<int>(std::floor((p.z - origin.z) / resolution)), nz - 1);
  return index(ix, iy, iz);
}

GridGeometry GridGeometry::for_world(const Heightmap& world, const MissionConfig& cfg) {
  GridGeometry g;
  g.resolution = cfg.resolution;
  const double zmin = world.min_height() - 0.5 * cfg.resolution;
  const double zmax = world.max_height() + cfg.map_headroom;
  g.origin = {0.0, 0.0, zmin};
  g.nx = std::max(1, static_cast<int>(std::ceil(world.size_x() / cfg.resolution - 1e-9)));
  g.ny = std::max(1, static_cast<int>(std::ceil(world.size_y() / cfg.resolution - 1e-9)));
  g.nz = std::max(1, static_cast<int>(std::ceil((zmax - zmin) / cfg.resolution - 1e-9)));
  return g;
}

void traverse_segment(const GridGeometry& g, const Vec3& a, const Vec3& b,
                      const std::function<bool(std::size_t)>& visit) {
  const Vec3 d = b - a;
  const double o[3] = {g.origin.x, g.origin.y, g.origin.z};
  const double pa[3] = {a.x, a.y, a.z};
  const double dd[3] = {d.x, d.y, d.z};
  const int n[3] = {g.nx, g.ny, g.nz};
  const Vec3 up = g.upper();
  const double hi[3] = {up.x, up.y, up.z};

  // Clip the parametric segment [0, 1] against the grid box.
  double t0 = 0.0, t1 = 1.0;
  for (int k = 0; k < 3; ++k) {
    if (dd[k] == 0.0) {
      if (pa[k] < o[k] || pa[k] >= hi[k]) return;
      continue;
    }
    double ta = (o[k] - pa[k]) / dd[k];
    double tb = (hi[k] - pa[k]) / dd[k];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t0 > t1) return;

  int idx[3];
  int step[3];
  for (int k = 0; k < 3; ++k) {
    const double p = pa[k] + dd[k] * t0;
    int i = static_cast<int>(std::floor((p - o[k]) / g.resolution));
    // A walk entering through a face must start in the voxel it enters.
    if (t0 > 0.0 && dd[k] < 0.0 && p - o[k] == i * g.resolution) --i;
    idx[k] = std::clamp(i, 0, n[k] - 1);
    step[k] = dd[k] > 0.0 ? 1 : (dd[k] < 0.0 ? -1 : 0);
  }
  auto boundary_t = [&](int k) {
    if (step[k] == 0) return std::numeric_limits<double>::infinity();
    const double plane = o[k] + (idx[k] + (step[k] > 0 ? 1 : 0)) * g.resolution;
    return (plane - pa[k]) / dd[k];
  };
  while (true) {
    if (!visit(g.index(idx[0], idx[1], idx[2]))) return;
    const double tx = boundary_t(0), ty = boundary_t(1), tz = boundary_t(2);
    const double t = std::min({tx, ty, tz});
    if (!(t < t1)) return;
    if (tx == t) idx[0] += step[0];
    if (ty == t) idx[1] += step[1];
    if (tz == t) idx[2] += step[2];
    for (int k = 0; k < 3; ++k) {
      if (idx[k] < 0 || idx[k] >= n[k]) return;
    }
  }
}

VoxelGrid::VoxelGrid(GridGeometry g)
    : geom_(g), states_(g.size(), 0), log_odds_(g.size(), 0.0f), mark_(g.size(), 0) {
  if (!(g.resolution > 0.0) || g.nx < 1 || g.ny < 1 || g.nz < 1) {
    throw std::invalid_argument("VoxelGrid: invalid geometry");
  }
}

void VoxelGrid::integrate(const Scan& scan) {
  if (mark_.size() != states_.size()) mark_.assign(states_.size(), 0);
  // Two stamps per scan: epoch for free, epoch+1 for occupied.
  epoch_ += 2;
  if (epoch_ < 2) {
    std::fill(mark_.begin(), mark_.end(), 0);
    epoch_ = 2;
  }
  const std::uint32_t free_mark = epoch_;
  const std::uint32_t occ_mark = epoch_ + 1;
  std::vector<std::size_t> touched;
  for (const auto& ray : scan.rays) {
    if (ray.kind == HitKind::kMaxRange) continue;
    if (auto v = geom_.voxel_of(ray.end(scan.origin))) {
      if (mark_[*v] != occ_mark) {
        if (mark_[*v] != free_mark) touched.push_back(*v);
        mark_[*v] = occ_mark;
      }
    }
  }
  for (const auto& ray : scan.rays) {
    const Vec3 end = ray.end(scan.origin);
    const std::optional<std::size_t> hit_voxel =
        ray.kind == HitKind::kMaxRange ? std::nullopt : geom_.voxel_of(end);
    traverse_segment(geom_, scan.origin, end, [&](std::size_t v) {
      if (hit_voxel && v == *hit_voxel) return false;
      if (mark_[v] != occ_mark && mark_[v] != free_mark) {
        mark_[v] = free_mark;
        touched.push_back(v);
      }
      return true;
    });
  }
  for (std::size_t v : touched) {
    const bool hit = mark_[v] == occ_mark;
    float& l = log_odds_[v];
    l = hit ? std::min(l + LogOdds::kHit, LogOdds::kMax) : std::max(l + LogOdds::kMiss, LogOdds::kMin);
    const auto prev = static_cast<VoxelState>(states_[v]);
    VoxelState next = prev;
    if (l > LogOdds::kOccupiedAbove) next = VoxelState::kOccupied;
    else if (l < LogOdds::kFreeBelow) next = VoxelState::kFree;
    else if (prev == VoxelState::kUnknown) next = hit ? VoxelState::kOccupied : VoxelState::kFree;
    if (prev == VoxelState::kUnknown) ++known_count_;
    states_[v] = static_cast<std::uint8_t>(next);
  }
}

double VoxelGrid::information_gain(const GainQuery& q) const {
  const auto& g = geom_;
  const double r = q.spec.range;
  auto lo_idx = [&](double v, double o, int n) {
    return std::clamp(static_cast<int>(std::floor((v - r - o) / g.resolution)), 0, n - 1);
  };
  auto hi_idx = [&](double v, double o, int n) {
    return std::clamp(static_cast<int>(std::floor((v + r - o) / g.resolution)), 0, n - 1);
  };
  const int x0 = lo_idx(q.viewpoint.x, g.origin.x, g.nx), x1 = hi_idx(q.viewpoint.x, g.origin.x, g.nx);
  const int y0 = lo_idx(q.viewpoint.y, g.origin.y, g.ny), y1 = hi_idx(q.viewpoint.y, g.origin.y, g.ny);
  const int z0 = lo_idx(q.viewpoint.z, g.origin.z, g.nz), z1 = hi_idx(q.viewpoint.z, g.origin.z, g.nz);
  std::size_t count = 0;
  for (int iz = z0; iz <= z1; ++iz) {
    for (int iy = y0; iy <= y1; ++iy) {
      for (int ix = x0; ix <= x1; ++ix) {
        const std::size_t target = g.index(ix, iy, iz);
        if (states_[target] != static_cast<std::uint8_t>(VoxelState::kUnknown)) continue;
        const Vec3 c = g.center(ix, iy, iz);
        const Vec3 off = c - q.viewpoint;
        if (off.dot(off) > r * r) continue;
        if (!q.spec.in_fov(off, q.yaw)) continue;
        if (q.fence && !q.fence->contains(c.x, c.y)) continue;
        bool blocked = false;
        traverse_segment(g, q.viewpoint, c, [&](std::size_t v) {
          if (v == target) return true;
          if (states_[v] == static_cast<std::uint8_t>(VoxelState::kOccupied)) {
            blocked = true;
            return false;
          }
          return true;
        });
        if (!blocked) ++count;
      }
    }
  }
  return static_cast<double>(count) * g.voxel_volume();
}

VoxelGrid VoxelGrid::from_raw(GridGeometry g, std::vector<std::uint8_t> states, std::vector<float> log_odds) {
  if (states.size() != g.size() || log_odds.size() != g.size()) {
    throw std::invalid_argument("VoxelGrid: raw data does not match geometry");
  }
  VoxelGrid grid(g);
  grid.states_ = std::move(states);
  grid.log_odds_ = std::move(log_odds);
  grid.known_count_ = static_cast<std::size_t>(
      std::count_if(grid.states_.begin(), grid.states_.end(), [](std::uint8_t s) { return s != 0; }));
  return grid;
}

std::string VoxelGrid::snapshot() const {
  std::ostringstream os;
  os.precision(17);
  os << "VOXELGRID 1\n";
  os << "origin " << geom_.origin.x << " " << geom_.origin.y << " " << geom_.origin.z << "\n";
  os << "resolution " << geom_.resolution << "\n";
  os << "dims " << geom_.nx << " " << geom_.ny << " " << geom_.nz << "\n";
  static constexpr char kCodes[3] = {'U', 'F', 'O'};
  std::size_t i = 0;
  while (i < states_.size()) {
    std::size_t j = i;
    while (j < states_.size() && states_[j] == states_[i]) ++j;
    os << (j - i) << kCodes[states_[i]] << "\n";
    i = j;
  }
  return os.str();
}

VoxelGrid VoxelGrid::from_snapshot(const std::string& text) {
  std::istringstream in(text);
  std::string tag;
  int version = 0;
  GridGeometry g;
  in >> tag >> version;
  if (tag != "VOXELGRID" || version != 1) throw std::runtime_error("voxel snapshot: bad header");
  in >> tag >> g.origin.x >> g.origin.y >> g.origin.z;
  if (tag != "origin") throw std::runtime_error("voxel snapshot: missing origin");
  in >> tag >> g.resolution;
  if (tag != "resolution") throw std::runtime_error("voxel snapshot: missing resolution");
  in >> tag >> g.nx >> g.ny >> g.nz;
  if (tag != "dims" || !in) throw std::runtime_error("voxel snapshot: missing dims");
  std::vector<std::uint8_t> states;
  std::vector<float> lo;
  states.reserve(g.size());
  std::string run;
  while (in >> run) {
    if (run.size() < 2) throw std::runtime_error("voxel snapshot: bad run '" + run + "'");
    const char code = run.back();
    const std::size_t count = std::stoull(run.substr(0, run.size() - 1));
    std::uint8_t s = 0;
    float l = 0.0f;
    if (code == 'U') s = 0;
    else if (code == 'F') { s = 1; l = LogOdds::kMiss; }
    else if (code == 'O') { s = 2; l = LogOdds::kHit; }
    else throw std::runtime_error("voxel snapshot: bad state code");
    states.insert(states.end(), count, s);
    lo.insert(lo.end(), count, l);
  }
  if (states.size() != g.size()) throw std::runtime_error("voxel snapshot: run lengths do not cover the grid");
  return from_raw(g, std::move(states), std::move(lo));
}

VoxelGrid integrate_scan(VoxelGrid grid, const Scan& scan) {
  grid.integrate(scan);
  return grid;
}

double information_gain(const VoxelGrid& grid, const GainQuery& query) { return grid.information_gain(query); }

double known_volume(const VoxelGrid& grid) { return grid.known_volume(); }

VoxelGrid merge_missing(VoxelGrid grid, std::vector<ScanPtr> scans) {
  std::sort(scans.begin(), scans.end(), [](const ScanPtr& a, const ScanPtr& b) {
    if (a->timestamp != b->timestamp) return a->timestamp < b->timestamp;
    if (a->robot_id != b->robot_id) return a->robot_id < b->robot_id;
    return a->seq < b->seq;
  });
  for (const auto& s : scans) grid.integrate(*s);
  return grid;
}

}  // namespace mrx
