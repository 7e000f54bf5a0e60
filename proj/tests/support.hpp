#pragma once

// Generators and brute-force oracles shared by the test suites. The oracles
// deliberately avoid the library's own traversal and evaluation code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <vector>

#include "spmts/belief.hpp"
#include "spmts/grid_world.hpp"
#include "spmts/sensing.hpp"

namespace spmts::test {

using Rng = std::mt19937_64;

inline constexpr std::uint8_t kFree = 7;      // grass
inline constexpr std::uint8_t kBuilding = 2;  // obstacle in the default set

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline SegmentedMap blank_map(int width, int height, double resolution, std::uint8_t cls = kFree) {
  SegmentedMap m;
  m.geometry = {width, height, resolution};
  m.classes.assign(m.geometry.cell_count(), cls);
  m.class_names = default_class_names();
  return m;
}

/// Marks cells whose centre lies in [x0, x1) x [y0, y1) with `cls`.
inline void fill_rect(SegmentedMap& m, double x0, double y0, double x1, double y1, std::uint8_t cls) {
  for (CellIndex c = 0; c < m.classes.size(); ++c) {
    const Vec2 p = m.geometry.center(c);
    if (p.x >= x0 && p.x < x1 && p.y >= y0 && p.y < y1) m.classes[c] = cls;
  }
}

/// Random map with a few rectangular obstacles.
inline SegmentedMap random_map(Rng& rng, int width, int height, double resolution, int blocks) {
  SegmentedMap m = blank_map(width, height, resolution);
  const double ex = width * resolution, ey = height * resolution;
  for (int b = 0; b < blocks; ++b) {
    const double w = uniform(rng, 0.3, 0.35 * ex), h = uniform(rng, 0.3, 0.35 * ey);
    const double x = uniform(rng, 0.0, ex - w), y = uniform(rng, 0.0, ey - h);
    fill_rect(m, x, y, x + w, y + h, kBuilding);
  }
  return m;
}

inline OccupancyGrid occupancy(const SegmentedMap& m) { return derive_occupancy(m, {kBuilding}); }

inline Vec2 random_free_point(Rng& rng, const OccupancyGrid& occ) {
  const auto& g = occ.geometry;
  for (;;) {
    const Vec2 p{uniform(rng, 0.0, g.extent_x()), uniform(rng, 0.0, g.extent_y())};
    if (occ.is_free(p)) return p;
  }
}

/// Random nonnegative mass on free cells, normalized to `total`.
inline ProbabilityGrid random_prior(Rng& rng, const OccupancyGrid& occ, double total = 1.0, double zero_fraction = 0.3) {
  ProbabilityGrid p = ProbabilityGrid::zeros(occ.geometry);
  for (CellIndex c = 0; c < p.mass.size(); ++c)
    if (!occ.is_occupied(c) && uniform(rng, 0.0, 1.0) >= zero_fraction) p.mass[c] = uniform(rng, 0.0, 1.0);
  if (p.total() == 0.0)
    for (CellIndex c = 0; c < p.mass.size(); ++c)
      if (!occ.is_occupied(c)) p.mass[c] = 1.0;
  p.normalize_to(total);
  return p;
}

/// Three cells of 3.5 m in a row, one node per cell, a sensor that sees only
/// its own cell and a uniform prior: the line instance used across suites.
inline PlanningProblem line3_problem(double dt = 1.0) {
  const SegmentedMap m = blank_map(3, 1, 3.5);
  const auto occ = occupancy(m);
  const auto graph = build_graph(sample_nodes(occ, {3.5, 0.4}), occ, 3.5, 3);
  AgentProfile a;
  a.start = {1.75, 1.75};
  a.visibility_radius = 1.0;
  ProbabilityGrid prior{m.geometry, {1.0 / 3, 1.0 / 3, 1.0 / 3}};
  return make_problem(m, occ, graph, {a}, BeliefState::global(prior), dt);
}

struct SmallWorld {
  SegmentedMap map;
  OccupancyGrid occ;
  SearchGraph graph;
  std::vector<AgentProfile> agents;
  ProbabilityGrid prior;
};

/// Random small map with a connected enough graph and `agent_count` agents
/// starting on free points.
inline SmallWorld random_world(Rng& rng, int agent_count, int cells = 16, double gd = 1.5, int blocks = 2) {
  for (;;) {
    SmallWorld w;
    w.map = random_map(rng, cells, cells, 0.5, blocks);
    w.occ = occupancy(w.map);
    if (w.occ.occupied_count() * 2 > w.occ.occupied.size()) continue;
    w.graph = build_graph(sample_nodes(w.occ, {gd, 0.2}), w.occ, gd, 5);
    if (w.graph.id_count() < 3 || w.graph.arc_count() == 0) continue;
    bool ok = true;
    for (int m = 0; m < agent_count; ++m) {
      AgentProfile a;
      a.id = m;
      // start on a node that has neighbours
      std::vector<NodeId> good;
      for (NodeId i = 0; i < w.graph.id_count(); ++i)
        if (!w.graph.neighbors(i).empty()) good.push_back(i);
      if (good.empty()) {
        ok = false;
        break;
      }
      a.start = w.graph.node(good[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(good.size()) - 1))]).position;
      a.visibility_radius = uniform(rng, 0.6, 2.5);
      w.agents.push_back(a);
    }
    if (!ok) continue;
    w.prior = random_prior(rng, w.occ);
    return w;
  }
}

inline PlanningProblem world_problem(const SmallWorld& w, BeliefState belief, double dt = 1.0) {
  return make_problem(w.map, w.occ, w.graph, w.agents, std::move(belief), dt);
}

// ---------------------------------------------------------------------------
// Geometry oracles

/// Closed segment vs closed axis-aligned box, by parametric clipping.
inline bool segment_touches_box(Vec2 a, Vec2 b, double x0, double y0, double x1, double y1) {
  double t0 = 0.0, t1 = 1.0;
  const double d[2] = {b.x - a.x, b.y - a.y};
  const double lo[2] = {x0 - a.x, y0 - a.y};
  const double hi[2] = {x1 - a.x, y1 - a.y};
  for (int k = 0; k < 2; ++k) {
    if (d[k] == 0.0) {
      if (lo[k] > 0.0 || hi[k] < 0.0) return false;
      continue;
    }
    double ta = lo[k] / d[k], tb = hi[k] / d[k];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

/// True when the segment touches no occupied cell square. Exact for segments
/// that do not graze a cell corner.
inline bool brute_clear(const OccupancyGrid& occ, Vec2 a, Vec2 b) {
  const auto& g = occ.geometry;
  for (CellIndex c = 0; c < occ.occupied.size(); ++c) {
    if (!occ.is_occupied(c)) continue;
    const double x0 = g.col_of(c) * g.resolution, y0 = g.row_of(c) * g.resolution;
    if (segment_touches_box(a, b, x0, y0, x0 + g.resolution, y0 + g.resolution)) return false;
  }
  return true;
}

/// Visible set by testing every cell of the map.
inline std::vector<CellIndex> brute_visible(const OccupancyGrid& occ, Vec2 center, double radius) {
  const auto& g = occ.geometry;
  std::vector<CellIndex> out;
  const CellIndex own = g.cell_of(center);
  for (CellIndex c = 0; c < occ.occupied.size(); ++c) {
    if (occ.is_occupied(c)) continue;
    const Vec2 p = g.center(c);
    const double d = std::hypot(p.x - center.x, p.y - center.y);
    if (c == own || (d <= radius && brute_clear(occ, center, p))) out.push_back(c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Expected-time oracle

struct DirectEt {
  std::vector<double> p;  // per step
  double survival_sum = 0.0;  // sum_{k=1}^{N} (1 - P(t <= k)) dt
  double weighted_sum = 0.0;  // sum_{k=1}^{N} k p_k dt
  double residual = 1.0;
};

/// Sweeps the plan cell by cell with std::set bookkeeping. `cells[m][node]`
/// is the footprint of agent m at node; `maps[m]` is agent m's credited map
/// (a single entry means one shared map).
inline DirectEt direct_expected_time(const Plan& plan, const std::vector<std::vector<std::vector<CellIndex>>>& cells,
                                     const std::vector<std::vector<double>>& maps, double dt, std::size_t horizon) {
  DirectEt out;
  std::set<CellIndex> swept;
  double cumulative = 0.0;
  for (std::size_t k = 1; k <= horizon; ++k) {
    double pk = 0.0;
    std::set<CellIndex> now;
    if (maps.size() == 1) {
      for (std::size_t m = 0; m < plan.size(); ++m) {
        const NodeId n = plan[m][std::min(k, plan[m].size()) - 1];
        for (CellIndex c : cells[m][n]) now.insert(c);
      }
      for (CellIndex c : now)
        if (!swept.count(c)) pk += maps[0][c];
    } else {
      for (std::size_t m = 0; m < plan.size(); ++m) {
        const NodeId n = plan[m][std::min(k, plan[m].size()) - 1];
        for (CellIndex c : cells[m][n]) {
          now.insert(c);
          if (!swept.count(c)) pk += maps[m][c];
        }
      }
    }
    swept.insert(now.begin(), now.end());
    cumulative += pk;
    out.p.push_back(pk);
    out.survival_sum += (1.0 - cumulative) * dt;
    out.weighted_sum += static_cast<double>(k) * pk * dt;
  }
  out.residual = 1.0 - cumulative;
  return out;
}

/// Per-agent, per-node footprints as plain vectors. Visibility has its own
/// oracle; this keeps the ET oracle about summation only.
inline std::vector<std::vector<std::vector<CellIndex>>> footprints(const PlanningProblem& problem) {
  std::vector<std::vector<std::vector<CellIndex>>> out;
  for (const auto& a : problem.agents) {
    std::vector<std::vector<CellIndex>> per_node;
    for (const auto& r : a.coverage) per_node.push_back(r.visible_cells);
    out.push_back(std::move(per_node));
  }
  return out;
}

inline std::vector<std::vector<double>> credited_maps(const BeliefState& b) {
  std::vector<std::vector<double>> out;
  for (const auto& g : b.sub_priors) out.push_back(g.mass);
  return out;
}

/// Random walk of `length` nodes from the agent's start.
inline std::vector<NodeId> random_walk(Rng& rng, const AgentModel& agent, std::size_t length) {
  std::vector<NodeId> path{agent.start};
  while (path.size() < length) {
    const auto nb = agent.graph.neighbors(path.back());
    if (nb.empty()) break;
    path.push_back(nb[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(nb.size()) - 1))].to);
  }
  return path;
}

// ---------------------------------------------------------------------------
// Exhaustive single-agent search

struct WalkOptimum {
  double est = std::numeric_limits<double>::infinity();
  std::vector<NodeId> path;
  std::size_t walks = 0;
};

/// Minimum EST over every walk of 1..horizon nodes from the start whose
/// unswept mass ends at or below `residual_target`. Mass bookkeeping uses the
/// oracle footprints and the merged map; credit uses `credit` (one map).
inline WalkOptimum exhaustive_optimum(const AgentModel& agent, const std::vector<std::vector<CellIndex>>& footprints,
                                      const std::vector<double>& credit, double dt, std::size_t horizon,
                                      double residual_target) {
  WalkOptimum best;
  std::vector<NodeId> path{agent.start};
  std::vector<int> swept_at(credit.size(), 0);
  double total = 0.0;
  for (double v : credit) total += v;

  // est of the walk so far is accumulated step by step
  std::function<void(double, double)> visit = [&](double cumulative, double est) {
    ++best.walks;
    const double remaining = total - cumulative;
    if (remaining <= residual_target + 1e-12) {
      if (est < best.est - 1e-12) {
        best.est = est;
        best.path = path;
      }
      return;  // extending a finished walk adds nothing
    }
    if (path.size() >= horizon) return;
    for (const Arc& a : agent.graph.neighbors(path.back())) {
      const int depth = static_cast<int>(path.size()) + 1;
      double gain = 0.0;
      std::vector<CellIndex> marked;
      for (CellIndex c : footprints[a.to])
        if (swept_at[c] == 0) {
          swept_at[c] = depth;
          gain += credit[c];
          marked.push_back(c);
        }
      path.push_back(a.to);
      visit(cumulative + gain, est + (1.0 - (cumulative + gain)) * dt);
      path.pop_back();
      for (CellIndex c : marked) swept_at[c] = 0;
    }
  };

  double first = 0.0;
  for (CellIndex c : footprints[agent.start]) {
    swept_at[c] = 1;
    first += credit[c];
  }
  visit(first, (1.0 - first) * dt);
  return best;
}

}  // namespace spmts::test
