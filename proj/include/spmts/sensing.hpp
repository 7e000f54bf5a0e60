#pragma once

// Ideal circular sensor with occlusion: a cell is seen when its centre lies
// within the radius and the straight segment to it crosses no obstacle.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "spmts/error.hpp"
#include "spmts/geometry.hpp"
#include "spmts/grid_world.hpp"

namespace spmts {

struct VisibleRegion {
  int agent = 0;
  Vec2 center;
  double radius = 0.0;
  std::vector<CellIndex> visible_cells;  // sorted ascending

  bool contains(CellIndex c) const {
    return std::binary_search(visible_cells.begin(), visible_cells.end(), c);
  }
};

/// Visibility predicate for one cell. The sensor's own cell is always seen;
/// the radius boundary counts as inside.
inline bool cell_visible(const OccupancyGrid& occ, Vec2 center, double radius, CellIndex cell) {
  const auto& g = occ.geometry;
  if (occ.is_occupied(cell)) return false;
  if (cell == g.cell_of(center)) return true;
  const Vec2 target = g.center(cell);
  if (distance(center, target) > radius) return false;
  return line_of_sight(occ, center, target);
}

inline VisibleRegion visible_region(const OccupancyGrid& occ, Vec2 center, double radius, int agent = 0) {
  if (!(radius > 0.0)) fail(ErrorCode::validation, "visibility radius must be positive");
  if (!occ.is_free(center)) fail(ErrorCode::invalid_pose, "sensor position is outside free space");
  const auto& g = occ.geometry;
  VisibleRegion region{agent, center, radius, {}};
  const int c0 = std::max(0, static_cast<int>(std::floor((center.x - radius) / g.resolution)));
  const int c1 = std::min(g.width - 1, static_cast<int>(std::floor((center.x + radius) / g.resolution)));
  const int r0 = std::max(0, static_cast<int>(std::floor((center.y - radius) / g.resolution)));
  const int r1 = std::min(g.height - 1, static_cast<int>(std::floor((center.y + radius) / g.resolution)));
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) {
      const CellIndex cell = g.index(c, r);
      if (cell_visible(occ, center, radius, cell)) region.visible_cells.push_back(cell);
    }
  return region;
}

/// Ideal detection model evaluated at a cell: 1 inside the visible region,
/// 0 elsewhere.
inline double detection_probability(const VisibleRegion& region, CellIndex target_cell) {
  return region.contains(target_cell) ? 1.0 : 0.0;
}

/// Lowest agent id whose region contains the target, if any.
inline std::optional<int> first_detector(std::span<const VisibleRegion> regions, CellIndex target_cell) {
  std::optional<int> best;
  for (const auto& region : regions)
    if (detection_probability(region, target_cell) > 0.0 && (!best || region.agent < *best)) best = region.agent;
  return best;
}

}  // namespace spmts
