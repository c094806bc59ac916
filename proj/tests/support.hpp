#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mrexplore/world.hpp"

namespace mrx::test {

#ifndef MRX_FIXTURE_DIR
#define MRX_FIXTURE_DIR "tests/fixtures"
#endif

inline std::string read_fixture(const std::string& name) {
  std::ifstream in(std::string(MRX_FIXTURE_DIR) + "/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Box {
  double x0, y0, z0, x1, y1, z1;
};

struct Start {
  double x, y, yaw = 0.0;
};

/// Scenario text for a heightmap world (flat when `heights` is empty).
inline std::string world_text(int nx, int ny, double cell, const std::vector<Box>& boxes,
                              const std::vector<Start>& robots, const std::string& params,
                              const std::vector<double>& heights = {}) {
  std::ostringstream os;
  os.precision(17);
  os << "[terrain]\n" << nx << " " << ny << " " << cell << "\n";
  for (int y = 0; y < ny; ++y) {
    for (int x = 0; x < nx; ++x) {
      os << (x ? " " : "") << (heights.empty() ? 0.0 : heights[static_cast<std::size_t>(y) * nx + x]);
    }
    os << "\n";
  }
  os << "[obstacles]\n";
  for (const auto& b : boxes) os << b.x0 << " " << b.y0 << " " << b.z0 << " " << b.x1 << " " << b.y1 << " " << b.z1 << "\n";
  os << "[robots]\n";
  for (std::size_t i = 0; i < robots.size(); ++i) {
    os << i + 1 << " " << robots[i].x << " " << robots[i].y << " " << robots[i].yaw << "\n";
  }
  os << "[params]\n" << params;
  return os.str();
}

inline Scenario make_scenario(int nx, int ny, double cell, const std::vector<Box>& boxes,
                              const std::vector<Start>& robots, const std::string& params,
                              const std::vector<double>& heights = {}) {
  return parse_scenario(world_text(nx, ny, cell, boxes, robots, read_fixture("desk.cfg") + params, heights));
}

}  // namespace mrx::test
