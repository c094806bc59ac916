#pragma once

#include <functional>

#include "mrexplore/traversability.hpp"

namespace mrx::test {

/// Point map of n x n cells (default pitch) with one hit per cell at height z(x, y),
/// leaving `margin` unobserved cells on every side.
inline SurfacePointMap surface_map(int n, const std::function<double(double, double)>& z = {},
                                   TraversabilityParams params = {}, int margin = 0) {
  const int size = n + 2 * margin;
  SurfacePointMap m(size * params.pitch, size * params.pitch, params);
  for (int iy = margin; iy < margin + n; ++iy) {
    for (int ix = margin; ix < margin + n; ++ix) {
      const Vec3 c = m.cell_center({ix, iy});
      m.add_hit({c.x, c.y, z ? z(c.x, c.y) : 0.0}, false);
    }
  }
  m.relabel();
  return m;
}

}  // namespace mrx::test
