#pragma once

// Map model: semantic rasters, occupancy, probability grids, node sampling and
// the search graphs the planner walks on.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "spmts/error.hpp"
#include "spmts/geometry.hpp"

namespace spmts {

inline constexpr int kClassCount = 14;

struct SegmentedMap {
  GridGeometry geometry;
  std::vector<std::uint8_t> classes;  // row-major class ids
  std::array<std::string, kClassCount> class_names;

  std::uint8_t class_at(CellIndex c) const { return classes[c]; }
  std::uint8_t class_at(Vec2 p) const { return classes[geometry.cell_of(p)]; }
};

inline const std::array<std::string, kClassCount>& default_class_names() {
  static const std::array<std::string, kClassCount> names = {
      "road",  "sidewalk", "building", "wall",  "fence", "pole", "vegetation",
      "grass", "terrain",  "stairs",   "bench", "water", "car",  "other"};
  return names;
}

inline void validate(const SegmentedMap& map) {
  const auto& g = map.geometry;
  if (g.width <= 0 || g.height <= 0)
    fail(ErrorCode::validation, "map width and height must be positive");
  if (!(g.resolution > 0.0) || !std::isfinite(g.resolution))
    fail(ErrorCode::validation, "map resolution must be positive");
  if (map.classes.size() != g.cell_count())
    fail(ErrorCode::validation, "map classes: expected " + std::to_string(g.cell_count()) +
                                    " cells, got " + std::to_string(map.classes.size()));
  for (std::size_t i = 0; i < map.classes.size(); ++i) {
    if (map.classes[i] >= kClassCount)
      fail(ErrorCode::validation, "map classes[" + std::to_string(i) + "] = " +
                                      std::to_string(map.classes[i]) + " is not a class id in [0,13]");
  }
}

struct OccupancyGrid {
  GridGeometry geometry;
  std::vector<std::uint8_t> occupied;  // 1 = obstacle

  bool is_occupied(CellIndex c) const { return occupied[c] != 0; }
  bool is_occupied(int col, int row) const { return occupied[geometry.index(col, row)] != 0; }
  bool is_free(Vec2 p) const { return geometry.contains(p) && !is_occupied(geometry.cell_of(p)); }
  std::size_t occupied_count() const {
    return static_cast<std::size_t>(std::count(occupied.begin(), occupied.end(), 1));
  }
};

/// Unnormalized per-cell probability mass.
struct ProbabilityGrid {
  GridGeometry geometry;
  std::vector<double> mass;

  static ProbabilityGrid zeros(const GridGeometry& g) { return {g, std::vector<double>(g.cell_count(), 0.0)}; }

  double total() const { return std::accumulate(mass.begin(), mass.end(), 0.0); }

  /// Rescales in place so the total equals target. Requires a positive total.
  void normalize_to(double target) {
    const double t = total();
    if (!(t > 0.0)) fail(ErrorCode::degenerate_prior, "cannot normalize a grid with zero mass");
    const double k = target / t;
    for (double& m : mass) m *= k;
  }
};

inline OccupancyGrid derive_occupancy(const SegmentedMap& map, const std::set<int>& obstacle_classes) {
  OccupancyGrid occ{map.geometry, std::vector<std::uint8_t>(map.classes.size(), 0)};
  for (std::size_t i = 0; i < map.classes.size(); ++i)
    occ.occupied[i] = obstacle_classes.contains(map.classes[i]) ? 1 : 0;
  return occ;
}

/// Stand-in for a learned prior: each free cell gets the weight of its class,
/// occupied cells get zero, and the result is normalized to 1.
inline ProbabilityGrid class_weight_prior(const SegmentedMap& map, const OccupancyGrid& occ,
                                          std::span<const double> weights) {
  if (weights.size() != kClassCount)
    fail(ErrorCode::validation, "class weights: expected 14 values, got " + std::to_string(weights.size()));
  for (double w : weights)
    if (!(w >= 0.0) || !std::isfinite(w)) fail(ErrorCode::validation, "class weights must be finite and nonnegative");
  ProbabilityGrid prior = ProbabilityGrid::zeros(map.geometry);
  for (std::size_t i = 0; i < prior.mass.size(); ++i)
    if (!occ.is_occupied(i)) prior.mass[i] = weights[map.classes[i]];
  if (!(prior.total() > 0.0))
    fail(ErrorCode::degenerate_prior, "no free cell has a positive class weight");
  prior.normalize_to(1.0);
  return prior;
}

// ---------------------------------------------------------------------------
// Node sampling

struct SampledNode {
  Vec2 position;
  int square_col = 0;
  int square_row = 0;
};

struct SamplingOptions {
  double grid_distance = 3.5;
  double clearance = 0.40;
};

namespace detail {

inline double distance_to_cell(const GridGeometry& g, Vec2 p, int col, int row) {
  const double x0 = col * g.resolution, x1 = x0 + g.resolution;
  const double y0 = row * g.resolution, y1 = y0 + g.resolution;
  const double dx = std::max({x0 - p.x, 0.0, p.x - x1});
  const double dy = std::max({y0 - p.y, 0.0, p.y - y1});
  return std::hypot(dx, dy);
}

/// Distance from p to the nearest occupied cell, searching up to `limit`
/// meters. Returns +inf when nothing is found within the limit.
inline double nearest_obstacle(const OccupancyGrid& occ, Vec2 p, double limit) {
  const auto& g = occ.geometry;
  const int c0 = std::max(0, static_cast<int>(std::floor((p.x - limit) / g.resolution)));
  const int c1 = std::min(g.width - 1, static_cast<int>(std::floor((p.x + limit) / g.resolution)));
  const int r0 = std::max(0, static_cast<int>(std::floor((p.y - limit) / g.resolution)));
  const int r1 = std::min(g.height - 1, static_cast<int>(std::floor((p.y + limit) / g.resolution)));
  double best = std::numeric_limits<double>::infinity();
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c)
      if (occ.is_occupied(c, r)) {
        const double d = distance_to_cell(g, p, c, r);
        if (d <= limit) best = std::min(best, d);
      }
  return best;
}

inline bool obstacle_within(const OccupancyGrid& occ, Vec2 p, double clearance) {
  if (!occ.geometry.contains(p) || occ.is_occupied(occ.geometry.cell_of(p))) return true;
  return nearest_obstacle(occ, p, clearance) <= clearance;
}

}  // namespace detail

/// Tiles the map into squares of side grid_distance and emits at most one
/// node per square:
///   1. the square centroid, when no obstacle lies within the clearance;
///   2. otherwise the centroid of the square's free cells (snapped to the
///      nearest free cell centre if it lands on an obstacle), when it clears;
///   3. otherwise the free square vertex farthest from obstacles;
///   4. otherwise the snapped free-region centroid.
/// Squares without free cells emit nothing.
inline std::vector<SampledNode> sample_nodes(const OccupancyGrid& occ, const SamplingOptions& opt) {
  if (!(opt.grid_distance > 0.0)) fail(ErrorCode::validation, "grid_distance must be positive");
  if (!(opt.clearance >= 0.0)) fail(ErrorCode::validation, "clearance must be nonnegative");
  const auto& g = occ.geometry;
  const double gd = opt.grid_distance;
  const int n_cols = static_cast<int>(std::ceil(g.extent_x() / gd - 1e-9));
  const int n_rows = static_cast<int>(std::ceil(g.extent_y() / gd - 1e-9));

  std::vector<SampledNode> out;
  for (int sr = 0; sr < n_rows; ++sr) {
    for (int sc = 0; sc < n_cols; ++sc) {
      const double x0 = sc * gd, x1 = std::min((sc + 1) * gd, g.extent_x());
      const double y0 = sr * gd, y1 = std::min((sr + 1) * gd, g.extent_y());

      // cells whose centre lies in [x0, x1) x [y0, y1)
      const int c0 = std::max(0, static_cast<int>(std::ceil(x0 / g.resolution - 0.5 - 1e-9)));
      const int c1 = std::min(g.width - 1, static_cast<int>(std::ceil(x1 / g.resolution - 0.5 - 1e-9)) - 1);
      const int r0 = std::max(0, static_cast<int>(std::ceil(y0 / g.resolution - 0.5 - 1e-9)));
      const int r1 = std::min(g.height - 1, static_cast<int>(std::ceil(y1 / g.resolution - 0.5 - 1e-9)) - 1);

      Vec2 sum{};
      std::size_t n_free = 0;
      for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c)
          if (!occ.is_occupied(c, r)) {
            sum = sum + g.center(c, r);
            ++n_free;
          }
      if (n_free == 0) continue;

      const Vec2 centroid{(x0 + x1) / 2.0, (y0 + y1) / 2.0};
      if (!detail::obstacle_within(occ, centroid, opt.clearance)) {
        out.push_back({centroid, sc, sr});
        continue;
      }

      Vec2 free_centroid = sum * (1.0 / static_cast<double>(n_free));
      if (occ.is_occupied(g.cell_of(free_centroid))) {
        double best = std::numeric_limits<double>::infinity();
        Vec2 snapped = free_centroid;
        for (int r = r0; r <= r1; ++r)
          for (int c = c0; c <= c1; ++c)
            if (!occ.is_occupied(c, r)) {
              const double d = distance(g.center(c, r), free_centroid);
              if (d < best) {
                best = d;
                snapped = g.center(c, r);
              }
            }
        free_centroid = snapped;
      }
      if (!detail::obstacle_within(occ, free_centroid, opt.clearance)) {
        out.push_back({free_centroid, sc, sr});
        continue;
      }

      // vertices in (x, then y) order so ties resolve to the lowest
      const std::array<Vec2, 4> vertices = {Vec2{x0, y0}, Vec2{x0, y1}, Vec2{x1, y0}, Vec2{x1, y1}};
      std::optional<Vec2> best_vertex;
      double best_clear = -1.0;
      for (const Vec2& v : vertices) {
        if (!occ.is_free(v)) continue;
        const double clear = detail::nearest_obstacle(occ, v, gd);
        if (clear > best_clear) {
          best_clear = clear;
          best_vertex = v;
        }
      }
      out.push_back({best_vertex.value_or(free_centroid), sc, sr});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Search graph

struct GraphNode {
  NodeId id = 0;
  Vec2 position;
  int square_col = 0;
  int square_row = 0;
};

struct Arc {
  NodeId to = 0;
  double length = 0.0;
};

inline constexpr std::size_t kNoArc = std::numeric_limits<std::size_t>::max();

/// Undirected graph stored as symmetric directed arcs in CSR form. Node ids
/// index `nodes`; subgraphs keep every id and mark removed nodes inactive.
class SearchGraph {
 public:
  SearchGraph() = default;

  /// Builds from undirected edges (i, j, length); both directions are stored.
  SearchGraph(std::vector<GraphNode> nodes, std::vector<bool> active,
              const std::vector<std::tuple<NodeId, NodeId, double>>& edges,
              double grid_distance, int neighborhood)
      : grid_distance_(grid_distance),
        neighborhood_(neighborhood),
        nodes_(std::move(nodes)),
        active_(std::move(active)) {
    std::vector<std::vector<Arc>> adj(nodes_.size());
    for (const auto& [i, j, d] : edges) {
      if (i == j || !(d > 0.0)) fail(ErrorCode::validation, "graph arcs must join distinct nodes with positive length");
      if (!active_[i] || !active_[j]) continue;
      adj[i].push_back({j, d});
      adj[j].push_back({i, d});
    }
    offsets_.assign(nodes_.size() + 1, 0);
    for (std::size_t i = 0; i < adj.size(); ++i) {
      std::sort(adj[i].begin(), adj[i].end(), [](const Arc& a, const Arc& b) { return a.to < b.to; });
      offsets_[i + 1] = offsets_[i] + adj[i].size();
    }
    arcs_.reserve(offsets_.back());
    for (const auto& list : adj) arcs_.insert(arcs_.end(), list.begin(), list.end());
  }

  double grid_distance() const { return grid_distance_; }
  int neighborhood() const { return neighborhood_; }

  std::size_t id_count() const { return nodes_.size(); }
  std::size_t active_count() const { return static_cast<std::size_t>(std::count(active_.begin(), active_.end(), true)); }
  bool is_active(NodeId id) const { return id < active_.size() && active_[id]; }
  const GraphNode& node(NodeId id) const { return nodes_[id]; }
  const std::vector<GraphNode>& nodes() const { return nodes_; }
  const std::vector<bool>& active() const { return active_; }

  std::span<const Arc> neighbors(NodeId id) const {
    return {arcs_.data() + offsets_[id], offsets_[id + 1] - offsets_[id]};
  }
  std::size_t arc_begin(NodeId id) const { return offsets_[id]; }
  std::size_t arc_count() const { return arcs_.size(); }
  const Arc& arc(std::size_t index) const { return arcs_[index]; }

  /// Index of the directed arc from -> to, or kNoArc.
  std::size_t arc_index(NodeId from, NodeId to) const {
    if (from >= nodes_.size()) return kNoArc;
    const auto nb = neighbors(from);
    const auto it = std::lower_bound(nb.begin(), nb.end(), to, [](const Arc& a, NodeId t) { return a.to < t; });
    if (it == nb.end() || it->to != to) return kNoArc;
    return offsets_[from] + static_cast<std::size_t>(it - nb.begin());
  }

  /// Undirected edge list with i < j.
  std::vector<std::tuple<NodeId, NodeId, double>> edges() const {
    std::vector<std::tuple<NodeId, NodeId, double>> out;
    for (NodeId i = 0; i < nodes_.size(); ++i)
      for (const Arc& a : neighbors(i))
        if (i < a.to) out.emplace_back(i, a.to, a.length);
    return out;
  }

  double max_arc_length() const {
    double m = 0.0;
    for (const Arc& a : arcs_) m = std::max(m, a.length);
    return m;
  }

 private:
  double grid_distance_ = 0.0;
  int neighborhood_ = 0;
  std::vector<GraphNode> nodes_;
  std::vector<bool> active_;
  std::vector<std::size_t> offsets_{0};
  std::vector<Arc> arcs_;
};

/// True when the straight segment a-b crosses no occupied cell.
inline bool line_of_sight(const OccupancyGrid& occ, Vec2 a, Vec2 b) {
  return traverse_segment(occ.geometry, a, b, [&](int c, int r) { return !occ.is_occupied(c, r); });
}

/// Joins nodes whose sampling squares fall inside one neighborhood x
/// neighborhood window and that see each other in a straight line.
inline SearchGraph build_graph(const std::vector<SampledNode>& sampled, const OccupancyGrid& occ,
                               double grid_distance, int neighborhood) {
  if (neighborhood < 3 || neighborhood % 2 == 0)
    fail(ErrorCode::validation, "neighborhood must be odd and >= 3");
  const int half = neighborhood / 2;
  std::vector<GraphNode> nodes;
  nodes.reserve(sampled.size());
  for (std::size_t i = 0; i < sampled.size(); ++i)
    nodes.push_back({i, sampled[i].position, sampled[i].square_col, sampled[i].square_row});

  std::vector<std::tuple<NodeId, NodeId, double>> edges;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      if (std::abs(nodes[i].square_col - nodes[j].square_col) > half ||
          std::abs(nodes[i].square_row - nodes[j].square_row) > half)
        continue;
      const double d = distance(nodes[i].position, nodes[j].position);
      if (!(d > 0.0)) continue;
      if (!line_of_sight(occ, nodes[i].position, nodes[j].position)) continue;
      edges.emplace_back(i, j, d);
    }
  }
  return SearchGraph(std::move(nodes), std::vector<bool>(sampled.size(), true), edges, grid_distance, neighborhood);
}

// ---------------------------------------------------------------------------
// Agents

struct AgentProfile {
  int id = 0;
  Vec2 start;
  double visibility_radius = 2.5;
  double speed = 0.5;
  std::set<int> restricted_classes;
  bool human = false;
};

inline void validate(const AgentProfile& a, const OccupancyGrid& occ) {
  if (!(a.visibility_radius > 0.0)) fail(ErrorCode::validation, "agent " + std::to_string(a.id) + ": visibility radius must be positive");
  if (!(a.speed > 0.0)) fail(ErrorCode::validation, "agent " + std::to_string(a.id) + ": speed must be positive");
  if (!occ.is_free(a.start)) fail(ErrorCode::invalid_pose, "agent " + std::to_string(a.id) + ": start position is not in free space");
}

struct PreferredArea {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;
  int owner = 0;

  bool contains(Vec2 p) const { return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max; }
  friend bool operator==(const PreferredArea&, const PreferredArea&) = default;
};

inline void validate(const PreferredArea& a, const GridGeometry& g) {
  if (!(a.x_min < a.x_max) || !(a.y_min < a.y_max))
    fail(ErrorCode::validation, "preferred area must satisfy x_min < x_max and y_min < y_max");
  if (a.x_max < 0.0 || a.y_max < 0.0 || a.x_min > g.extent_x() || a.y_min > g.extent_y())
    fail(ErrorCode::validation, "preferred area does not intersect the map");
}

/// The agent's view of the graph: nodes on restricted classes are removed
/// with their arcs; ids are kept.
inline SearchGraph agent_subgraph(const SearchGraph& g, const AgentProfile& agent, const SegmentedMap& map) {
  std::vector<bool> active = g.active();
  for (NodeId i = 0; i < g.id_count(); ++i)
    if (active[i] && agent.restricted_classes.contains(map.class_at(g.node(i).position))) active[i] = false;
  if (std::none_of(active.begin(), active.end(), [](bool b) { return b; }))
    fail(ErrorCode::empty_subgraph, "agent " + std::to_string(agent.id) + ": every node lies in a restricted area");
  return SearchGraph(g.nodes(), std::move(active), g.edges(), g.grid_distance(), g.neighborhood());
}

/// Nearest active node visible in a straight line from `position`.
inline NodeId start_node(const SearchGraph& g, const OccupancyGrid& occ, Vec2 position) {
  NodeId best = kNoNode;
  double best_d = std::numeric_limits<double>::infinity();
  for (NodeId i = 0; i < g.id_count(); ++i) {
    if (!g.is_active(i)) continue;
    const double d = distance(g.node(i).position, position);
    if (d < best_d && line_of_sight(occ, position, g.node(i).position)) {
      best_d = d;
      best = i;
    }
  }
  if (best == kNoNode) fail(ErrorCode::empty_subgraph, "no graph node is reachable from the agent start");
  return best;
}

}  // namespace spmts
