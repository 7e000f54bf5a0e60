#pragma once

// Belief over the static target location and plan evaluation.
//
// The working representation is the unnormalized map: sweeping a cell with
// an ideal sensor sets its mass to zero in every map, and the removed mass is
// the probability of having found the target there. With sub-priors each
// agent is credited only with the mass of its own map inside its own visible
// region, so the expected time computed from them (EST) rewards every agent
// for sweeping its assigned share.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spmts/error.hpp"
#include "spmts/grid_world.hpp"
#include "spmts/sensing.hpp"

namespace spmts {

struct BeliefState {
  /// One shared map when `shared` is set, otherwise one map per agent.
  std::vector<ProbabilityGrid> sub_priors;
  bool shared = true;
  std::size_t step = 0;
  double cumulative_found = 0.0;

  static BeliefState global(ProbabilityGrid prior) {
    BeliefState s;
    s.sub_priors.push_back(std::move(prior));
    s.shared = true;
    return s;
  }

  static BeliefState per_agent(std::vector<ProbabilityGrid> sub_priors) {
    if (sub_priors.empty()) fail(ErrorCode::validation, "at least one sub-prior is required");
    BeliefState s;
    s.sub_priors = std::move(sub_priors);
    s.shared = false;
    return s;
  }

  const GridGeometry& geometry() const { return sub_priors.front().geometry; }

  /// Map agent m is credited from.
  const ProbabilityGrid& map_for(int agent) const {
    return shared ? sub_priors.front() : sub_priors.at(static_cast<std::size_t>(agent));
  }

  double remaining() const {
    double t = 0.0;
    for (const auto& g : sub_priors) t += g.total();
    return t;
  }

  /// Sum of all maps (the global unnormalized belief).
  ProbabilityGrid merged() const {
    ProbabilityGrid out = ProbabilityGrid::zeros(geometry());
    for (const auto& g : sub_priors)
      for (std::size_t i = 0; i < g.mass.size(); ++i) out.mass[i] += g.mass[i];
    return out;
  }

  /// Posterior given no detection so far, normalized to 1 (display only).
  ProbabilityGrid normalized() const {
    ProbabilityGrid out = merged();
    if (out.total() > 0.0) out.normalize_to(1.0);
    return out;
  }
};

struct PlanEvaluation {
  std::vector<double> step_probabilities;  // p_k, k = 1..N
  std::vector<double> cumulative;          // P(t <= k)
  double est = 0.0;                        // seconds
  double residual = 1.0;                   // 1 - P(t <= N)
  double remaining = 1.0;                  // unswept mass after the plan
};

/// Splits a normalized prior into one sub-prior per agent:
///   - mass inside an agent's rectangles goes to that agent (lowest id wins
///     where rectangles of different owners overlap);
///   - unclaimed mass is shared equally by agents without rectangles, or by
///     all agents when every agent drew some;
///   - each sub-prior is then rescaled to 1/M.
inline std::vector<ProbabilityGrid> split_sub_priors(const ProbabilityGrid& prior,
                                                     std::span<const PreferredArea> areas, int agent_count) {
  if (agent_count < 1) fail(ErrorCode::validation, "agent count must be at least 1");
  const auto m_count = static_cast<std::size_t>(agent_count);
  std::vector<std::vector<const PreferredArea*>> by_owner(m_count);
  for (const auto& a : areas) {
    if (a.owner < 0 || a.owner >= agent_count)
      fail(ErrorCode::validation, "preferred area owner " + std::to_string(a.owner) + " is not an agent id");
    validate(a, prior.geometry);
    by_owner[static_cast<std::size_t>(a.owner)].push_back(&a);
  }

  std::vector<std::size_t> recipients;
  for (std::size_t m = 0; m < m_count; ++m)
    if (by_owner[m].empty()) recipients.push_back(m);
  if (recipients.empty())
    for (std::size_t m = 0; m < m_count; ++m) recipients.push_back(m);
  const double share = 1.0 / static_cast<double>(recipients.size());

  std::vector<ProbabilityGrid> out(m_count, ProbabilityGrid::zeros(prior.geometry));
  const auto& g = prior.geometry;
  for (CellIndex c = 0; c < prior.mass.size(); ++c) {
    const double mass = prior.mass[c];
    if (mass <= 0.0) continue;
    const Vec2 p = g.center(c);
    std::optional<std::size_t> owner;
    for (std::size_t m = 0; m < m_count && !owner; ++m)
      for (const auto* a : by_owner[m])
        if (a->contains(p)) {
          owner = m;
          break;
        }
    if (owner) {
      out[*owner].mass[c] += mass;
    } else {
      for (std::size_t m : recipients) out[m].mass[c] += mass * share;
    }
  }
  for (std::size_t m = 0; m < m_count; ++m) {
    if (!(out[m].total() > 0.0))
      fail(ErrorCode::empty_sub_prior, "agent " + std::to_string(m) +
                                           " receives no probability mass; widen its preferred areas");
    out[m].normalize_to(1.0 / static_cast<double>(m_count));
  }
  return out;
}

namespace detail {

inline std::vector<CellIndex> region_union(std::span<const VisibleRegion> regions) {
  std::vector<CellIndex> cells;
  for (const auto& r : regions) cells.insert(cells.end(), r.visible_cells.begin(), r.visible_cells.end());
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return cells;
}

}  // namespace detail

/// Probability of detecting the target during this step, given no earlier
/// detection. Shared belief: mass in the union of the regions. Sub-priors:
/// each agent integrates its own map over its own region.
inline double step_probability(const BeliefState& state, std::span<const VisibleRegion> regions) {
  if (state.shared) {
    double p = 0.0;
    const auto& mass = state.sub_priors.front().mass;
    for (CellIndex c : detail::region_union(regions)) p += mass[c];
    return p;
  }
  double p = 0.0;
  for (const auto& r : regions) {
    if (r.agent < 0 || static_cast<std::size_t>(r.agent) >= state.sub_priors.size())
      fail(ErrorCode::validation, "region agent id has no sub-prior");
    const auto& mass = state.sub_priors[static_cast<std::size_t>(r.agent)].mass;
    for (CellIndex c : r.visible_cells) p += mass[c];
  }
  return p;
}

/// Bayes update for "no detection" under the ideal sensor: every swept cell
/// drops to zero in every map. The maps stay unnormalized.
inline BeliefState bayes_no_detection_update(BeliefState state, std::span<const VisibleRegion> regions) {
  double removed = 0.0;
  for (CellIndex c : detail::region_union(regions))
    for (auto& g : state.sub_priors) {
      removed += g.mass[c];
      g.mass[c] = 0.0;
    }
  state.cumulative_found += removed;
  ++state.step;
  return state;
}

// ---------------------------------------------------------------------------
// Planning problem: everything plan evaluation and the optimizer need.

using Plan = std::vector<std::vector<NodeId>>;  // one node sequence per agent

struct AgentModel {
  AgentProfile profile;
  SearchGraph graph;                   // agent subgraph
  NodeId start = kNoNode;
  std::vector<VisibleRegion> coverage;  // indexed by node id
};

struct PlanningProblem {
  GridGeometry geometry;
  std::vector<AgentModel> agents;
  BeliefState belief;
  double dt = 1.0;

  int agent_count() const { return static_cast<int>(agents.size()); }
  std::size_t max_node_count() const {
    std::size_t n = 0;
    for (const auto& a : agents) n = std::max(n, a.graph.active_count());
    return n;
  }
};

/// Builds per-agent subgraphs, start nodes and the sensor footprint at every
/// node. Agent ids must be 0..M-1 in order.
inline PlanningProblem make_problem(const SegmentedMap& map, const OccupancyGrid& occ, const SearchGraph& graph,
                                    const std::vector<AgentProfile>& profiles, BeliefState belief, double dt) {
  if (profiles.empty()) fail(ErrorCode::validation, "at least one agent is required");
  if (!(dt > 0.0)) fail(ErrorCode::validation, "dt must be positive");
  if (!belief.shared && belief.sub_priors.size() != profiles.size())
    fail(ErrorCode::validation, "need one sub-prior per agent");
  if (!(belief.geometry() == occ.geometry)) fail(ErrorCode::validation, "belief and map geometry differ");

  PlanningProblem problem{occ.geometry, {}, std::move(belief), dt};
  std::map<double, std::vector<std::vector<CellIndex>>> footprints;  // by radius
  for (std::size_t m = 0; m < profiles.size(); ++m) {
    const auto& profile = profiles[m];
    if (profile.id != static_cast<int>(m)) fail(ErrorCode::validation, "agent ids must be 0..M-1 in order");
    validate(profile, occ);
    AgentModel model{profile, agent_subgraph(graph, profile, map), kNoNode, {}};
    model.start = start_node(model.graph, occ, profile.start);

    auto [it, inserted] = footprints.try_emplace(profile.visibility_radius);
    if (inserted) {
      it->second.resize(graph.id_count());
      for (NodeId i = 0; i < graph.id_count(); ++i)
        it->second[i] = visible_region(occ, graph.node(i).position, profile.visibility_radius).visible_cells;
    }
    model.coverage.resize(graph.id_count());
    for (NodeId i = 0; i < graph.id_count(); ++i) {
      auto& region = model.coverage[i];
      region.agent = profile.id;
      region.center = graph.node(i).position;
      region.radius = profile.visibility_radius;
      if (model.graph.is_active(i)) region.visible_cells = it->second[i];
    }
    problem.agents.push_back(std::move(model));
  }
  return problem;
}

inline void validate_plan(const Plan& plan, const PlanningProblem& problem) {
  if (plan.size() != problem.agents.size())
    fail(ErrorCode::invalid_plan, "plan has " + std::to_string(plan.size()) + " paths for " +
                                      std::to_string(problem.agents.size()) + " agents");
  for (std::size_t m = 0; m < plan.size(); ++m) {
    const auto& path = plan[m];
    const auto& graph = problem.agents[m].graph;
    if (path.empty()) fail(ErrorCode::invalid_plan, "agent " + std::to_string(m) + " has an empty path");
    for (std::size_t k = 0; k < path.size(); ++k) {
      if (!graph.is_active(path[k]))
        fail(ErrorCode::invalid_plan, "agent " + std::to_string(m) + ": node " + std::to_string(path[k]) +
                                          " is not in its graph");
      if (k > 0 && graph.arc_index(path[k - 1], path[k]) == kNoArc)
        fail(ErrorCode::invalid_plan, "agent " + std::to_string(m) + ": nodes " + std::to_string(path[k - 1]) +
                                          " and " + std::to_string(path[k]) + " are not connected");
    }
  }
}

inline std::size_t plan_horizon(const Plan& plan) {
  std::size_t n = 0;
  for (const auto& p : plan) n = std::max(n, p.size());
  return n;
}

/// Simulates the belief forward along the plan. At step k (1-based) each
/// agent senses from its k-th node; agents whose path has ended hold their
/// last node. est = sum_{k=1}^{N} (1 - P(t <= k)) dt.
inline PlanEvaluation expected_time(const Plan& plan, const PlanningProblem& problem,
                                    std::optional<std::size_t> horizon = std::nullopt) {
  validate_plan(plan, problem);
  const std::size_t n = horizon.value_or(plan_horizon(plan));
  BeliefState state = problem.belief;
  PlanEvaluation ev;
  double cumulative = state.cumulative_found;
  std::vector<VisibleRegion> regions(plan.size());
  ev.est = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    for (std::size_t m = 0; m < plan.size(); ++m) {
      const NodeId node = plan[m][std::min(k, plan[m].size()) - 1];
      regions[m] = problem.agents[m].coverage[node];
    }
    const double p = step_probability(state, regions);
    state = bayes_no_detection_update(std::move(state), regions);
    cumulative += p;
    ev.step_probabilities.push_back(p);
    ev.cumulative.push_back(cumulative);
    ev.est += (1.0 - cumulative) * problem.dt;
  }
  ev.residual = 1.0 - cumulative;
  ev.remaining = state.remaining();
  return ev;
}

/// Truncated sum of k * p_k * dt, without the completion correction.
inline double expected_time_naive(const Plan& plan, const PlanningProblem& problem,
                                  std::optional<std::size_t> horizon = std::nullopt) {
  const PlanEvaluation ev = expected_time(plan, problem, horizon);
  double et = 0.0;
  for (std::size_t k = 0; k < ev.step_probabilities.size(); ++k)
    et += static_cast<double>(k + 1) * ev.step_probabilities[k] * problem.dt;
  return et;
}

/// Allocation-free evaluator for the optimizer hot path. Produces the same
/// numbers as expected_time() by stamping cells with the step they were swept
/// in instead of copying maps.
class PlanEvaluator {
 public:
  explicit PlanEvaluator(const PlanningProblem& problem)
      : problem_(&problem),
        merged_(problem.belief.merged().mass),
        stamps_(problem.geometry.cell_count(), 0) {}

  PlanEvaluation evaluate(const Plan& plan, std::optional<std::size_t> horizon = std::nullopt,
                          bool with_series = true) {
    const auto& problem = *problem_;
    const auto& belief = problem.belief;
    const std::size_t n = horizon.value_or(plan_horizon(plan));
    const std::uint64_t base = next_base_;
    next_base_ += n + 2;

    PlanEvaluation ev;
    double cumulative = belief.cumulative_found;
    double removed = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
      const std::uint64_t now = base + k;
      double credit = 0.0;
      for (std::size_t m = 0; m < plan.size(); ++m) {
        if (k > plan[m].size()) continue;  // holding: nothing new to sweep
        const auto& own = belief.map_for(static_cast<int>(m)).mass;
        for (CellIndex c : problem.agents[m].coverage[plan[m][k - 1]].visible_cells) {
          std::uint64_t& s = stamps_[c];
          if (s < base) {
            removed += merged_[c];
            credit += own[c];
            s = now;
          } else if (s == now && !belief.shared) {
            credit += own[c];
          }
        }
      }
      cumulative += credit;
      if (with_series) {
        ev.step_probabilities.push_back(credit);
        ev.cumulative.push_back(cumulative);
      }
      ev.est += (1.0 - cumulative) * problem.dt;
    }
    ev.residual = 1.0 - cumulative;
    ev.remaining = belief.remaining() - removed;
    return ev;
  }

 private:
  const PlanningProblem* problem_;
  std::vector<double> merged_;
  std::vector<std::uint64_t> stamps_;
  std::uint64_t next_base_ = 1;
};

}  // namespace spmts
