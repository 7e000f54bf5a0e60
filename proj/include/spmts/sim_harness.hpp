#pragma once

// Scenario generation, continuous-time execution of plans against a hidden
// target, benchmark aggregation and the considered-areas metric.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "spmts/belief.hpp"
#include "spmts/error.hpp"
#include "spmts/grid_world.hpp"
#include "spmts/parallel.hpp"
#include "spmts/planner_aco.hpp"
#include "spmts/sensing.hpp"

namespace spmts {

enum class PriorKind { uniform, gaussian_mixture, file };
enum class SubPriorMode { none, equal, nearest, swapped };

inline std::string_view to_string(PriorKind k) {
  switch (k) {
    case PriorKind::uniform: return "uniform";
    case PriorKind::gaussian_mixture: return "gaussian";
    case PriorKind::file: return "file";
  }
  return "?";
}

inline std::string_view to_string(SubPriorMode m) {
  switch (m) {
    case SubPriorMode::none: return "none";
    case SubPriorMode::equal: return "equal";
    case SubPriorMode::nearest: return "nearest";
    case SubPriorMode::swapped: return "swapped";
  }
  return "?";
}

inline PriorKind parse_prior_kind(std::string_view s) {
  if (s == "uniform") return PriorKind::uniform;
  if (s == "gaussian" || s == "gaussian-mixture" || s == "gaussian_mixture") return PriorKind::gaussian_mixture;
  if (s == "file") return PriorKind::file;
  fail(ErrorCode::invalid_spec, "prior.kind: unknown value '" + std::string(s) + "'");
}

inline SubPriorMode parse_subprior_mode(std::string_view s) {
  if (s == "none" || s == "off") return SubPriorMode::none;
  if (s == "equal") return SubPriorMode::equal;
  if (s == "nearest" || s == "on") return SubPriorMode::nearest;
  if (s == "swapped") return SubPriorMode::swapped;
  fail(ErrorCode::invalid_spec, "unknown sub-prior mode '" + std::string(s) + "'");
}

struct GaussianComponent {
  Vec2 center;
  double sigma = 1.0;
  double weight = 1.0;
};

inline const std::set<int>& default_obstacle_classes() {
  // building, wall, fence, pole, water, car
  static const std::set<int> classes = {2, 3, 4, 5, 11, 12};
  return classes;
}

struct ScenarioSpec {
  std::string name = "scenario";
  /// Either a loaded map or a synthetic generator id ("open", "blocks").
  std::optional<SegmentedMap> map;
  std::string generator = "blocks";
  double width_m = 40.0;
  double height_m = 40.0;
  double resolution = 0.5;
  std::set<int> obstacle_classes = default_obstacle_classes();

  PriorKind prior_kind = PriorKind::uniform;
  std::vector<GaussianComponent> components;
  std::optional<ProbabilityGrid> prior_grid;  // for PriorKind::file

  std::vector<AgentProfile> agents;
  std::optional<std::array<int, 2>> target_cell;  // {col, row}; sampled from the prior when unset
  std::uint64_t seed = 1;

  double grid_distance = 3.5;
  int neighborhood = 7;
  double clearance = 0.40;
  /// Nominal speed used to convert a plan step into seconds (dt =
  /// grid_distance / planning_speed). Defaults to the slowest agent.
  std::optional<double> planning_speed;
};

struct Scenario {
  ScenarioSpec spec;
  SegmentedMap map;
  OccupancyGrid occupancy;
  SearchGraph graph;
  ProbabilityGrid prior;
  std::vector<ProbabilityGrid> component_masses;  // gaussian slices summing to the prior
  std::vector<AgentProfile> profiles;
  CellIndex target_cell = 0;
  double dt = 1.0;
};

namespace detail {

inline void paint(SegmentedMap& m, double x0, double y0, double x1, double y1, std::uint8_t cls) {
  const auto& g = m.geometry;
  for (int r = 0; r < g.height; ++r)
    for (int c = 0; c < g.width; ++c) {
      const Vec2 p = g.center(c, r);
      if (p.x >= x0 && p.x < x1 && p.y >= y0 && p.y < y1) m.classes[g.index(c, r)] = cls;
    }
}

/// Synthetic urban block scaled to the requested extent: a road band, two
/// buildings and two short walls.
inline SegmentedMap generate_map(const ScenarioSpec& spec) {
  if (!(spec.resolution > 0.0)) fail(ErrorCode::invalid_spec, "resolution must be positive");
  if (!(spec.width_m > 0.0) || !(spec.height_m > 0.0)) fail(ErrorCode::invalid_spec, "map extent must be positive");
  SegmentedMap m;
  m.geometry = {static_cast<int>(std::lround(spec.width_m / spec.resolution)),
                static_cast<int>(std::lround(spec.height_m / spec.resolution)), spec.resolution};
  if (m.geometry.width <= 0 || m.geometry.height <= 0) fail(ErrorCode::invalid_spec, "map has no cells");
  m.class_names = default_class_names();
  m.classes.assign(m.geometry.cell_count(), 7);  // grass
  if (spec.generator == "open") return m;
  if (spec.generator != "blocks") fail(ErrorCode::invalid_spec, "map.generator: unknown value '" + spec.generator + "'");
  const double sx = spec.width_m / 40.0, sy = spec.height_m / 40.0;
  auto rect = [&](double x0, double y0, double x1, double y1, std::uint8_t cls) {
    paint(m, x0 * sx, y0 * sy, x1 * sx, y1 * sy, cls);
  };
  rect(0, 18, 40, 22, 0);     // road
  rect(0, 16.5, 40, 18, 1);   // sidewalks
  rect(0, 22, 40, 23.5, 1);
  rect(14, 3.5, 21, 10.5, 2);  // buildings
  rect(21, 28, 28, 35, 2);
  rect(7, 31.5, 14, 32, 3);    // walls
  rect(31.5, 7, 32, 14, 4);
  return m;
}

inline double gaussian_density(Vec2 p, const GaussianComponent& g) {
  const double d2 = dot(p - g.center, p - g.center);
  return g.weight / (2.0 * std::numbers::pi * g.sigma * g.sigma) * std::exp(-d2 / (2.0 * g.sigma * g.sigma));
}

}  // namespace detail

inline void validate(const ScenarioSpec& spec) {
  if (!(spec.grid_distance > 0.0)) fail(ErrorCode::invalid_spec, "grid_distance must be positive");
  if (spec.neighborhood < 3 || spec.neighborhood % 2 == 0) fail(ErrorCode::invalid_spec, "neighborhood must be odd and >= 3");
  if (!(spec.clearance >= 0.0)) fail(ErrorCode::invalid_spec, "clearance must be nonnegative");
  if (spec.agents.empty()) fail(ErrorCode::invalid_spec, "agents: at least one agent is required");
  if (spec.planning_speed && !(*spec.planning_speed > 0.0)) fail(ErrorCode::invalid_spec, "planning_speed must be positive");
  if (spec.prior_kind == PriorKind::gaussian_mixture) {
    if (spec.components.empty()) fail(ErrorCode::invalid_spec, "prior.components: at least one gaussian is required");
    for (std::size_t i = 0; i < spec.components.size(); ++i) {
      const auto& c = spec.components[i];
      const std::string where = "prior.components[" + std::to_string(i) + "]";
      if (!(c.weight > 0.0)) fail(ErrorCode::invalid_spec, where + ".weight must be positive");
      if (!(c.sigma > 0.0)) fail(ErrorCode::invalid_spec, where + ".sigma must be positive");
    }
  }
  if (spec.prior_kind == PriorKind::file && !spec.prior_grid) fail(ErrorCode::invalid_spec, "prior.file: no prior grid given");
}

/// Builds every derived structure of a scenario. Deterministic in the spec.
inline Scenario generate_scenario(const ScenarioSpec& spec) {
  validate(spec);
  Scenario s;
  s.spec = spec;
  s.map = spec.map ? *spec.map : detail::generate_map(spec);
  validate(s.map);
  const auto& g = s.map.geometry;
  s.occupancy = derive_occupancy(s.map, spec.obstacle_classes);

  for (std::size_t i = 0; i < spec.components.size(); ++i)
    if (spec.prior_kind == PriorKind::gaussian_mixture && !g.contains(spec.components[i].center))
      fail(ErrorCode::invalid_spec, "prior.components[" + std::to_string(i) + "].center lies outside the map");

  switch (spec.prior_kind) {
    case PriorKind::uniform: {
      s.prior = ProbabilityGrid::zeros(g);
      for (CellIndex c = 0; c < g.cell_count(); ++c)
        if (!s.occupancy.is_occupied(c)) s.prior.mass[c] = 1.0;
      break;
    }
    case PriorKind::gaussian_mixture: {
      s.prior = ProbabilityGrid::zeros(g);
      for (const auto& comp : spec.components) {
        ProbabilityGrid part = ProbabilityGrid::zeros(g);
        for (CellIndex c = 0; c < g.cell_count(); ++c)
          if (!s.occupancy.is_occupied(c)) part.mass[c] = detail::gaussian_density(g.center(c), comp);
        for (CellIndex c = 0; c < g.cell_count(); ++c) s.prior.mass[c] += part.mass[c];
        s.component_masses.push_back(std::move(part));
      }
      break;
    }
    case PriorKind::file: {
      s.prior = *spec.prior_grid;
      if (!(s.prior.geometry == g)) fail(ErrorCode::invalid_spec, "prior geometry differs from the map");
      for (CellIndex c = 0; c < g.cell_count(); ++c) {
        if (!(s.prior.mass[c] >= 0.0) || !std::isfinite(s.prior.mass[c]))
          fail(ErrorCode::invalid_spec, "prior.mass[" + std::to_string(c) + "] must be finite and nonnegative");
        if (s.occupancy.is_occupied(c)) s.prior.mass[c] = 0.0;
      }
      break;
    }
  }
  const double total = s.prior.total();
  if (!(total > 0.0)) fail(ErrorCode::degenerate_prior, "prior has no mass on free cells");
  s.prior.normalize_to(1.0);
  for (auto& part : s.component_masses)
    for (double& v : part.mass) v /= total;

  s.profiles = spec.agents;
  for (std::size_t m = 0; m < s.profiles.size(); ++m) {
    s.profiles[m].id = static_cast<int>(m);
    if (!s.occupancy.is_free(s.profiles[m].start))
      fail(ErrorCode::invalid_spec, "agents[" + std::to_string(m) + "].start is not in free space");
  }
  const double speed = spec.planning_speed.value_or(
      std::min_element(s.profiles.begin(), s.profiles.end(),
                       [](const AgentProfile& a, const AgentProfile& b) { return a.speed < b.speed; })
          ->speed);
  s.dt = spec.grid_distance / speed;

  s.graph = build_graph(sample_nodes(s.occupancy, {spec.grid_distance, spec.clearance}), s.occupancy,
                        spec.grid_distance, spec.neighborhood);

  if (spec.target_cell) {
    const auto [col, row] = *spec.target_cell;
    if (!g.in_bounds(col, row)) fail(ErrorCode::invalid_spec, "target cell lies outside the map");
    s.target_cell = g.index(col, row);
    if (s.occupancy.is_occupied(s.target_cell)) fail(ErrorCode::invalid_spec, "target cell is an obstacle");
  } else {
    s.target_cell = 0;
    std::mt19937_64 rng(spec.seed);
    std::discrete_distribution<std::size_t> pick(s.prior.mass.begin(), s.prior.mass.end());
    s.target_cell = pick(rng);
  }
  return s;
}

/// Target cell drawn from the scenario prior with the given seed.
inline CellIndex sample_target(const Scenario& s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick(s.prior.mass.begin(), s.prior.mass.end());
  return pick(rng);
}

/// Sub-prior assignment used by the benchmark rows. `nearest` hands every
/// gaussian component (or, for other priors, every cell) to the agent whose
/// start is closest; `swapped` reverses that assignment; `equal` gives each
/// agent prior/M everywhere.
inline BeliefState scenario_belief(const Scenario& s, SubPriorMode mode) {
  const std::size_t m_count = s.profiles.size();
  if (mode == SubPriorMode::none) return BeliefState::global(s.prior);
  std::vector<ProbabilityGrid> parts(m_count, ProbabilityGrid::zeros(s.prior.geometry));
  if (mode == SubPriorMode::equal) {
    for (auto& p : parts) {
      p = s.prior;
      for (double& v : p.mass) v /= static_cast<double>(m_count);
    }
    return BeliefState::per_agent(std::move(parts));
  }
  auto nearest_agent = [&](Vec2 p) {
    std::size_t best = 0;
    for (std::size_t m = 1; m < m_count; ++m)
      if (distance(p, s.profiles[m].start) < distance(p, s.profiles[best].start)) best = m;
    return mode == SubPriorMode::swapped ? m_count - 1 - best : best;
  };
  if (!s.component_masses.empty()) {
    for (std::size_t k = 0; k < s.component_masses.size(); ++k) {
      auto& dst = parts[nearest_agent(s.spec.components[k].center)];
      for (CellIndex c = 0; c < dst.mass.size(); ++c) dst.mass[c] += s.component_masses[k].mass[c];
    }
  } else {
    const auto& g = s.prior.geometry;
    for (CellIndex c = 0; c < g.cell_count(); ++c) parts[nearest_agent(g.center(c))].mass[c] = s.prior.mass[c];
  }
  for (std::size_t m = 0; m < m_count; ++m)
    if (!(parts[m].total() > 0.0))
      fail(ErrorCode::empty_sub_prior, "agent " + std::to_string(m) + " receives no sub-prior mass");
  return BeliefState::per_agent(std::move(parts));
}

inline PlanningProblem scenario_problem(const Scenario& s, BeliefState belief) {
  return make_problem(s.map, s.occupancy, s.graph, s.profiles, std::move(belief), s.dt);
}

inline PlanningProblem scenario_problem(const Scenario& s, SubPriorMode mode = SubPriorMode::none) {
  return scenario_problem(s, scenario_belief(s, mode));
}

/// Expected time of `plan` under the scenario's global prior.
inline double merged_expected_time(const Scenario& s, const Plan& plan) {
  const PlanningProblem merged = scenario_problem(s, SubPriorMode::none);
  return PlanEvaluator(merged).evaluate(plan, std::nullopt, false).est;
}

// ---------------------------------------------------------------------------
// Plan geometry

using Polyline = std::vector<Vec2>;

inline std::vector<Polyline> plan_polylines(const Plan& plan, const SearchGraph& graph) {
  std::vector<Polyline> out;
  for (const auto& path : plan) {
    Polyline line;
    for (NodeId n : path) line.push_back(graph.node(n).position);
    out.push_back(std::move(line));
  }
  return out;
}

inline double polyline_length(const Polyline& line) {
  double d = 0.0;
  for (std::size_t k = 1; k < line.size(); ++k) d += distance(line[k - 1], line[k]);
  return d;
}

inline double distance_to_polyline(Vec2 p, const Polyline& line) {
  if (line.empty()) return 0.0;
  if (line.size() == 1) return distance(p, line.front());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < line.size(); ++k) best = std::min(best, distance_to_segment(p, line[k - 1], line[k]));
  return best;
}

namespace detail {

/// Parameter interval of segment a-b inside the closed rectangle, if any.
inline std::optional<std::pair<double, double>> clip_segment(Vec2 a, Vec2 b, const PreferredArea& r) {
  double t0 = 0.0, t1 = 1.0;
  const Vec2 d = b - a;
  const std::array<double, 4> p = {-d.x, d.x, -d.y, d.y};
  const std::array<double, 4> q = {a.x - r.x_min, r.x_max - a.x, a.y - r.y_min, r.y_max - a.y};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return std::nullopt;
      continue;
    }
    const double t = q[i] / p[i];
    if (p[i] < 0.0) t0 = std::max(t0, t);
    else t1 = std::min(t1, t);
  }
  if (t0 > t1) return std::nullopt;
  return std::pair{t0, t1};
}

}  // namespace detail

/// Length of `line` inside the union of `areas`.
inline double length_inside(const Polyline& line, std::span<const PreferredArea> areas) {
  double inside = 0.0;
  for (std::size_t k = 1; k < line.size(); ++k) {
    std::vector<std::pair<double, double>> spans;
    for (const auto& r : areas)
      if (auto s = detail::clip_segment(line[k - 1], line[k], r)) spans.push_back(*s);
    std::sort(spans.begin(), spans.end());
    double covered = 0.0, lo = 0.0, hi = -1.0;
    for (const auto& [a, b] : spans) {
      if (a > hi) {
        if (hi > lo) covered += hi - lo;
        lo = a;
        hi = b;
      } else {
        hi = std::max(hi, b);
      }
    }
    if (hi > lo) covered += hi - lo;
    inside += covered * distance(line[k - 1], line[k]);
  }
  return inside;
}

/// Percent of the plan's total length lying inside the rectangles owned by
/// the agent that walks it.
inline double percent_considered_areas(const std::vector<Polyline>& plan, std::span<const PreferredArea> areas) {
  double total = 0.0, inside = 0.0;
  for (std::size_t m = 0; m < plan.size(); ++m) {
    total += polyline_length(plan[m]);
    std::vector<PreferredArea> own;
    for (const auto& a : areas)
      if (a.owner == static_cast<int>(m)) own.push_back(a);
    inside += length_inside(plan[m], own);
  }
  if (areas.empty() || !(total > 0.0)) return 0.0;
  return std::clamp(100.0 * inside / total, 0.0, 100.0);
}

inline double percent_considered_areas(const Plan& plan, const SearchGraph& graph,
                                       std::span<const PreferredArea> areas) {
  return percent_considered_areas(plan_polylines(plan, graph), areas);
}

// ---------------------------------------------------------------------------
// Simulation

struct SimOptions {
  double tick = 0.1;
  double timeout = 600.0;
  /// Per-agent travel speed; empty means each profile's speed.
  std::vector<double> speeds;
  /// When set, every arc takes exactly this long regardless of its length,
  /// which is the timing the expected-time model assumes.
  std::optional<double> arc_time;
};

struct SimResult {
  std::optional<int> found_by;
  double real_search_time = 0.0;
  double planned_est = 0.0;
  std::vector<double> path_distance;
  double divergence_distance = 0.0;
  double computation_time = 0.0;
  double percent_considered_areas = 0.0;
  std::size_t ticks = 0;
};

struct SimTick {
  double time = 0.0;
  std::vector<Vec2> positions;
  std::vector<CellIndex> newly_swept;
  double cumulative = 0.0;  // global prior mass swept so far
};

/// Tick-based execution of a plan. Agents start on their first plan node and
/// move along straight arcs; every tick each agent senses from its current
/// position and the lowest-indexed agent that sees the target is credited.
class SearchSimulation {
 public:
  SearchSimulation(const Scenario& scenario, const Plan& plan, CellIndex target, SimOptions options)
      : scenario_(&scenario), target_(target), options_(std::move(options)) {
    if (!(options_.tick > 0.0)) fail(ErrorCode::validation, "tick must be positive");
    if (!(options_.timeout >= 0.0)) fail(ErrorCode::validation, "timeout must be nonnegative");
    if (plan.size() != scenario.profiles.size()) fail(ErrorCode::invalid_plan, "plan does not match the agent count");
    lines_ = plan_polylines(plan, scenario.graph);
    for (std::size_t m = 0; m < lines_.size(); ++m) {
      if (lines_[m].empty()) fail(ErrorCode::invalid_plan, "agent " + std::to_string(m) + " has an empty path");
      const double speed = m < options_.speeds.size() ? options_.speeds[m] : scenario.profiles[m].speed;
      if (!(speed > 0.0)) fail(ErrorCode::validation, "speeds must be positive");
      std::vector<double> times{0.0};
      for (std::size_t k = 1; k < lines_[m].size(); ++k)
        times.push_back(times.back() + (options_.arc_time ? *options_.arc_time
                                                          : distance(lines_[m][k - 1], lines_[m][k]) / speed));
      arrival_.push_back(std::move(times));
    }
    positions_.resize(lines_.size());
    manual_.assign(lines_.size(), std::nullopt);
    travelled_.assign(lines_.size(), 0.0);
    swept_.assign(scenario.prior.mass.size(), 0);
    for (std::size_t m = 0; m < lines_.size(); ++m) positions_[m] = lines_[m].front();
  }

  bool finished() const { return finished_; }
  double time() const { return time_; }
  std::optional<int> found_by() const { return found_by_; }
  const std::vector<Vec2>& positions() const { return positions_; }
  double cumulative() const { return cumulative_; }
  const std::vector<Polyline>& polylines() const { return lines_; }

  /// Pins an agent to an externally reported position from now on.
  void set_position(int agent, Vec2 p) {
    if (agent < 0 || static_cast<std::size_t>(agent) >= lines_.size())
      fail(ErrorCode::validation, "unknown agent " + std::to_string(agent));
    manual_[static_cast<std::size_t>(agent)] = p;
  }

  /// Ends the run without a simulated detection.
  void halt() { finished_ = true; }

  /// Advances to the next tick (the first call senses at time 0).
  SimTick step() {
    SimTick out;
    if (finished_) return out;
    if (started_) time_ = static_cast<double>(++tick_index_) * options_.tick;
    started_ = true;
    out.time = time_;

    std::vector<VisibleRegion> regions;
    bool all_done = true;
    for (std::size_t m = 0; m < lines_.size(); ++m) {
      const Vec2 p = manual_[m] ? *manual_[m] : position_at(m, time_);
      travelled_[m] += distance(positions_[m], p);
      positions_[m] = p;
      if (manual_[m] || time_ < arrival_[m].back()) all_done = false;
      divergence_sum_ += distance_to_polyline(p, lines_[m]);
      ++divergence_count_;
      if (!scenario_->occupancy.is_free(p)) continue;
      regions.push_back(visible_region(scenario_->occupancy, p, scenario_->profiles[m].visibility_radius,
                                       static_cast<int>(m)));
    }
    for (const auto& r : regions)
      for (CellIndex c : r.visible_cells)
        if (!swept_[c]) {
          swept_[c] = 1;
          cumulative_ += scenario_->prior.mass[c];
          out.newly_swept.push_back(c);
        }
    std::sort(out.newly_swept.begin(), out.newly_swept.end());
    out.positions = positions_;
    out.cumulative = cumulative_;

    found_by_ = first_detector(regions, target_);
    if (found_by_) finished_ = true;
    else if (all_done || time_ + options_.tick > options_.timeout + 1e-9) finished_ = true;
    return out;
  }

  SimResult result() const {
    SimResult r;
    r.found_by = found_by_;
    r.real_search_time = found_by_ ? time_ : options_.timeout;
    r.path_distance = travelled_;
    r.divergence_distance = divergence_count_ ? divergence_sum_ / static_cast<double>(divergence_count_) : 0.0;
    r.ticks = started_ ? tick_index_ + 1 : 0;
    return r;
  }

 private:
  Vec2 position_at(std::size_t m, double t) const {
    const auto& times = arrival_[m];
    const auto& line = lines_[m];
    if (t >= times.back()) return line.back();
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - times.begin());  // t in [times[k-1], times[k])
    const double span = times[k] - times[k - 1];
    const double f = span > 0.0 ? (t - times[k - 1]) / span : 1.0;
    return line[k - 1] + (line[k] - line[k - 1]) * f;
  }

  const Scenario* scenario_;
  CellIndex target_;
  SimOptions options_;
  std::vector<Polyline> lines_;
  std::vector<std::vector<double>> arrival_;
  std::vector<Vec2> positions_;
  std::vector<std::optional<Vec2>> manual_;
  std::vector<double> travelled_;
  std::vector<std::uint8_t> swept_;
  double cumulative_ = 0.0;
  double divergence_sum_ = 0.0;
  std::size_t divergence_count_ = 0;
  double time_ = 0.0;
  std::size_t tick_index_ = 0;
  bool started_ = false;
  bool finished_ = false;
  std::optional<int> found_by_;
};

inline SimResult run_search(const Plan& plan, const Scenario& scenario, CellIndex target, const SimOptions& options) {
  SearchSimulation sim(scenario, plan, target, options);
  while (!sim.finished()) sim.step();
  return sim.result();
}

// ---------------------------------------------------------------------------
// Benchmark

struct BenchCell {
  ScenarioSpec scenario;
  HeuristicKind heuristic = HeuristicKind::tsp;
  SubPriorMode subpriors = SubPriorMode::none;
};

struct BenchRow {
  std::string scenario;
  HeuristicKind heuristic = HeuristicKind::tsp;
  SubPriorMode subpriors = SubPriorMode::none;
  std::vector<double> et, est, ct, pd, residual;
};

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

/// Sample mean and standard deviation (n - 1 denominator; 0 for n < 2).
inline MeanSd mean_sd(std::span<const double> xs) {
  MeanSd r;
  if (xs.empty()) return r;
  for (double x : xs) r.mean += x;
  r.mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return r;
  double ss = 0.0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  r.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  return r;
}

/// Runs optimize once per repetition (seeds 1..reps) for every cell. Work
/// items run in parallel; each optimize call is single-threaded so the
/// measured CT is per run.
inline std::vector<BenchRow> benchmark(const std::vector<BenchCell>& cells, std::size_t reps, MMASParams params,
                                       unsigned threads = 0) {
  std::vector<Scenario> scenarios;
  std::vector<PlanningProblem> problems;
  std::vector<PlanningProblem> merged;
  for (const auto& cell : cells) {
    scenarios.push_back(generate_scenario(cell.scenario));
    problems.push_back(scenario_problem(scenarios.back(), cell.subpriors));
    merged.push_back(scenario_problem(scenarios.back(), SubPriorMode::none));
  }
  std::vector<BenchRow> rows(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    rows[i] = {cells[i].scenario.name, cells[i].heuristic, cells[i].subpriors, {}, {}, {}, {}, {}};
    for (auto* v : {&rows[i].et, &rows[i].est, &rows[i].ct, &rows[i].pd, &rows[i].residual}) v->assign(reps, 0.0);
  }
  parallel_for(cells.size() * reps, resolve_threads(threads, cells.size() * reps), [&](std::size_t item, unsigned) {
    const std::size_t i = item / reps, r = item % reps;
    MMASParams p = params;
    p.heuristic = cells[i].heuristic;
    p.seed = r + 1;
    p.threads = 1;
    const OptimizeResult res = optimize(problems[i], p);
    rows[i].est[r] = res.best.est;
    rows[i].et[r] = PlanEvaluator(merged[i]).evaluate(res.best.paths, std::nullopt, false).est;
    rows[i].ct[r] = res.seconds;
    rows[i].pd[r] = res.best.total_distance();
    rows[i].residual[r] = res.best.residual;
  });
  return rows;
}

}  // namespace spmts
