#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>

namespace spmts {

using CellIndex = std::size_t;
using NodeId = std::size_t;

inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

/// Point or displacement in map coordinates (meters). The map origin is the
/// corner of cell (0, 0); x grows with the column, y with the row.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

/// Distance from point p to the closed segment [a, b].
inline double distance_to_segment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 <= 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + ab * t);
}

/// Raster layout shared by every grid type: row-major, row 0 at y = 0.
struct GridGeometry {
  int width = 0;
  int height = 0;
  double resolution = 1.0;  // meters per cell

  std::size_t cell_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  double extent_x() const { return width * resolution; }
  double extent_y() const { return height * resolution; }

  bool in_bounds(int col, int row) const {
    return col >= 0 && row >= 0 && col < width && row < height;
  }
  bool contains(Vec2 p) const {
    return p.x >= 0.0 && p.y >= 0.0 && p.x <= extent_x() && p.y <= extent_y();
  }

  CellIndex index(int col, int row) const {
    return static_cast<CellIndex>(row) * static_cast<CellIndex>(width) +
           static_cast<CellIndex>(col);
  }
  int col_of(CellIndex c) const { return static_cast<int>(c % static_cast<CellIndex>(width)); }
  int row_of(CellIndex c) const { return static_cast<int>(c / static_cast<CellIndex>(width)); }

  Vec2 center(CellIndex c) const {
    return {(col_of(c) + 0.5) * resolution, (row_of(c) + 0.5) * resolution};
  }
  Vec2 center(int col, int row) const {
    return {(col + 0.5) * resolution, (row + 0.5) * resolution};
  }

  /// Cell containing p. Points on the far map edge map to the last cell.
  CellIndex cell_of(Vec2 p) const {
    const int col = std::clamp(static_cast<int>(std::floor(p.x / resolution)), 0, width - 1);
    const int row = std::clamp(static_cast<int>(std::floor(p.y / resolution)), 0, height - 1);
    return index(col, row);
  }

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

/// Visits every cell the segment [a, b] passes through, starting with the
/// cell containing a. When the segment crosses a grid corner exactly, both
/// side cells are visited too. Cells touched only at b itself are skipped.
/// The visitor returns false to stop early; the function returns false iff it
/// was stopped.
template <class Visitor>
bool traverse_segment(const GridGeometry& g, Vec2 a, Vec2 b, Visitor&& visit) {
  const double x0 = a.x / g.resolution;
  const double y0 = a.y / g.resolution;
  const double dx = b.x / g.resolution - x0;
  const double dy = b.y / g.resolution - y0;

  int col = std::clamp(static_cast<int>(std::floor(x0)), 0, g.width - 1);
  int row = std::clamp(static_cast<int>(std::floor(y0)), 0, g.height - 1);
  if (!visit(col, row)) return false;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  const int step_x = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const int step_y = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  const double delta_x = step_x != 0 ? 1.0 / std::abs(dx) : kInf;
  const double delta_y = step_y != 0 ? 1.0 / std::abs(dy) : kInf;
  double t_max_x = step_x > 0 ? (col + 1 - x0) * delta_x
                   : step_x < 0 ? (x0 - col) * delta_x
                                : kInf;
  double t_max_y = step_y > 0 ? (row + 1 - y0) * delta_y
                   : step_y < 0 ? (y0 - row) * delta_y
                                : kInf;

  constexpr double kEps = 1e-9;
  auto emit = [&](int c, int r) { return !g.in_bounds(c, r) || visit(c, r); };

  while (true) {
    const double t_next = std::min(t_max_x, t_max_y);
    if (t_next >= 1.0 - kEps) break;
    if (std::abs(t_max_x - t_max_y) <= kEps) {
      if (!emit(col + step_x, row) || !emit(col, row + step_y)) return false;
      col += step_x;
      row += step_y;
      t_max_x += delta_x;
      t_max_y += delta_y;
    } else if (t_max_x < t_max_y) {
      col += step_x;
      t_max_x += delta_x;
    } else {
      row += step_y;
      t_max_y += delta_y;
    }
    if (!g.in_bounds(col, row)) break;
    if (!visit(col, row)) return false;
  }
  return true;
}

}  // namespace spmts
