#pragma once

// Sub-prior MTS-ACO: a MAX-MIN ant system with one pheromone matrix and one
// heuristic matrix per agent. Each ant builds all agents' paths at once,
// extending the agent with the shortest path most of the time, and is scored
// by the expected (sub-prior) time of the joint plan.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "spmts/belief.hpp"
#include "spmts/error.hpp"
#include "spmts/grid_world.hpp"
#include "spmts/parallel.hpp"

namespace spmts {

enum class HeuristicKind { tsp, mts };

inline std::string_view to_string(HeuristicKind k) { return k == HeuristicKind::tsp ? "tsp" : "mts"; }

inline HeuristicKind parse_heuristic(std::string_view s) {
  if (s == "tsp" || s == "TSP") return HeuristicKind::tsp;
  if (s == "mts" || s == "MTS") return HeuristicKind::mts;
  fail(ErrorCode::validation, "unknown heuristic '" + std::string(s) + "' (expected tsp or mts)");
}

struct MMASParams {
  double alpha = 1.0;
  double beta = 6.0;
  double rho = 0.002;
  std::size_t n_ants = 10;
  std::size_t n_iterations = 300;
  double residual_target = 0.014;
  double best_so_far_prob = 0.5;
  double shortest_agent_prob = 0.8;
  std::uint64_t seed = 7;
  HeuristicKind heuristic = HeuristicKind::tsp;
  std::size_t max_steps = 0;  // path length cap in nodes; 0 means 4 * node count
  unsigned threads = 0;       // 0 means hardware concurrency
};

inline void validate(const MMASParams& p) {
  auto prob = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!(p.rho > 0.0 && p.rho < 1.0)) fail(ErrorCode::validation, "rho must lie in (0, 1)");
  if (!(p.alpha >= 0.0)) fail(ErrorCode::validation, "alpha must be nonnegative");
  if (!(p.beta >= 0.0)) fail(ErrorCode::validation, "beta must be nonnegative");
  if (p.n_ants < 1) fail(ErrorCode::validation, "n_ants must be at least 1");
  if (!prob(p.residual_target)) fail(ErrorCode::validation, "residual_target must lie in [0, 1]");
  if (!prob(p.best_so_far_prob)) fail(ErrorCode::validation, "best_so_far_prob must lie in [0, 1]");
  if (!prob(p.shortest_agent_prob)) fail(ErrorCode::validation, "shortest_agent_prob must lie in [0, 1]");
}

struct PheromoneField {
  std::vector<std::vector<double>> tau;  // [agent][arc]
  double tau_min = 0.0;
  double tau_max = 0.0;
};

struct HeuristicField {
  HeuristicKind kind = HeuristicKind::tsp;
  std::vector<std::vector<double>> values;  // [agent][arc]
};

struct AntSolution {
  Plan paths;
  double est = 0.0;
  std::vector<double> path_distances;
  double residual = 1.0;  // unswept mass
  bool complete = false;

  double total_distance() const {
    double d = 0.0;
    for (double x : path_distances) d += x;
    return d;
  }
};

/// Complete solutions beat incomplete ones; then lower EST wins.
inline bool better(const AntSolution& a, const AntSolution& b) {
  if (a.complete != b.complete) return a.complete;
  return a.est < b.est;
}

inline std::vector<double> path_distances(const Plan& plan, const PlanningProblem& problem) {
  std::vector<double> out(plan.size(), 0.0);
  for (std::size_t m = 0; m < plan.size(); ++m)
    for (std::size_t k = 1; k < plan[m].size(); ++k)
      out[m] += distance(problem.agents[m].graph.node(plan[m][k - 1]).position,
                         problem.agents[m].graph.node(plan[m][k]).position);
  return out;
}

// ---------------------------------------------------------------------------
// Heuristics

inline HeuristicField tsp_heuristic(const PlanningProblem& problem) {
  HeuristicField h{HeuristicKind::tsp, {}};
  for (const auto& a : problem.agents) {
    std::vector<double> v(a.graph.arc_count());
    for (std::size_t e = 0; e < v.size(); ++e) v[e] = 1.0 / a.graph.arc(e).length;
    h.values.push_back(std::move(v));
  }
  return h;
}

inline constexpr double kMtsEpsilon = 1e-6;

/// Precomputed sector membership for the directional-mass heuristic. Mass is
/// summed over square bins (map cells, or grid_distance/8 squares when cells
/// are finer than that); an arc i->j sees every bin whose centre lies within
/// 3 grid distances of i and less than 45 degrees off the i->j direction.
struct MtsIndex {
  GridGeometry bins;
  std::vector<std::uint32_t> cell_bin;
  std::vector<std::vector<std::size_t>> arc_offsets;  // [agent][arc + 1]
  std::vector<std::vector<std::uint32_t>> arc_bins;   // [agent][...]

  static MtsIndex build(const PlanningProblem& problem) {
    MtsIndex idx;
    const double gd = problem.agents.front().graph.grid_distance() > 0.0
                          ? problem.agents.front().graph.grid_distance()
                          : 1.0;
    const double bin_size = std::max(problem.geometry.resolution, gd / 8.0);
    const auto& g = problem.geometry;
    idx.bins.resolution = bin_size;
    idx.bins.width = std::max(1, static_cast<int>(std::ceil(g.extent_x() / bin_size - 1e-9)));
    idx.bins.height = std::max(1, static_cast<int>(std::ceil(g.extent_y() / bin_size - 1e-9)));
    idx.cell_bin.resize(g.cell_count());
    for (CellIndex c = 0; c < g.cell_count(); ++c)
      idx.cell_bin[c] = static_cast<std::uint32_t>(idx.bins.cell_of(g.center(c)));

    const double range = 3.0 * gd;
    const double cos_half = std::cos(std::numbers::pi / 4.0);
    for (const auto& agent : problem.agents) {
      const auto& graph = agent.graph;
      std::vector<std::size_t> offsets(graph.arc_count() + 1, 0);
      std::vector<std::uint32_t> members;
      for (NodeId i = 0; i < graph.id_count(); ++i) {
        const Vec2 pi = graph.node(i).position;
        const int b_c0 = std::max(0, static_cast<int>(std::floor((pi.x - range) / bin_size)));
        const int b_c1 = std::min(idx.bins.width - 1, static_cast<int>(std::floor((pi.x + range) / bin_size)));
        const int b_r0 = std::max(0, static_cast<int>(std::floor((pi.y - range) / bin_size)));
        const int b_r1 = std::min(idx.bins.height - 1, static_cast<int>(std::floor((pi.y + range) / bin_size)));
        for (std::size_t e = graph.arc_begin(i); e < graph.arc_begin(i) + graph.neighbors(i).size(); ++e) {
          const Vec2 dir = graph.node(graph.arc(e).to).position - pi;
          const double dir_len = norm(dir);
          for (int r = b_r0; r <= b_r1; ++r)
            for (int c = b_c0; c <= b_c1; ++c) {
              const Vec2 v = idx.bins.center(c, r) - pi;
              const double len = norm(v);
              if (!(len > 0.0) || len > range) continue;
              if (dot(v, dir) / (len * dir_len) > cos_half + 1e-12)
                members.push_back(static_cast<std::uint32_t>(idx.bins.index(c, r)));
            }
          offsets[e + 1] = members.size();
        }
      }
      idx.arc_offsets.push_back(std::move(offsets));
      idx.arc_bins.push_back(std::move(members));
    }
    return idx;
  }

  std::vector<double> bin_mass(const ProbabilityGrid& grid) const {
    std::vector<double> out(bins.cell_count(), 0.0);
    for (CellIndex c = 0; c < grid.mass.size(); ++c) out[cell_bin[c]] += grid.mass[c];
    return out;
  }

  double sector_mass(int agent, std::size_t arc, std::span<const double> bin_masses) const {
    const auto m = static_cast<std::size_t>(agent);
    double s = 0.0;
    for (std::size_t k = arc_offsets[m][arc]; k < arc_offsets[m][arc + 1]; ++k) s += bin_masses[arc_bins[m][k]];
    return s;
  }
};

/// Directional-mass heuristic for one agent under the given belief.
inline std::vector<double> mts_heuristic(const BeliefState& belief, const PlanningProblem& problem,
                                         const MtsIndex& index, int agent) {
  const auto bins = index.bin_mass(belief.map_for(agent));
  const auto& graph = problem.agents.at(static_cast<std::size_t>(agent)).graph;
  std::vector<double> eta(graph.arc_count());
  for (std::size_t e = 0; e < eta.size(); ++e) eta[e] = kMtsEpsilon + std::max(0.0, index.sector_mass(agent, e, bins));
  return eta;
}

inline HeuristicField mts_heuristic(const BeliefState& belief, const PlanningProblem& problem) {
  const MtsIndex index = MtsIndex::build(problem);
  HeuristicField h{HeuristicKind::mts, {}};
  for (int m = 0; m < problem.agent_count(); ++m) h.values.push_back(mts_heuristic(belief, problem, index, m));
  return h;
}

// ---------------------------------------------------------------------------
// Transition rule

struct Candidate {
  NodeId to = 0;
  std::size_t arc = 0;
  double probability = 0.0;
};

namespace detail {

/// Fills `out` with the candidate arcs out of `node` (unvisited neighbours,
/// or every neighbour when all are visited) weighted by tau^alpha * eta^beta,
/// with eta^beta supplied by `eta_of(arc)`. Returns the weight total.
template <class VisitedFn, class EtaFn>
double candidate_weights(const SearchGraph& graph, NodeId node, VisitedFn&& visited,
                         std::span<const double> tau, double alpha, EtaFn&& eta_of,
                         std::vector<Candidate>& out) {
  out.clear();
  const auto nb = graph.neighbors(node);
  const std::size_t first = graph.arc_begin(node);
  bool any_unvisited = false;
  for (const Arc& a : nb)
    if (!visited(a.to)) {
      any_unvisited = true;
      break;
    }
  double total = 0.0;
  for (std::size_t k = 0; k < nb.size(); ++k) {
    if (any_unvisited && visited(nb[k].to)) continue;
    const std::size_t e = first + k;
    const double t = alpha == 1.0 ? tau[e] : std::pow(tau[e], alpha);
    const double w = t * eta_of(e);
    out.push_back({nb[k].to, e, w});
    total += w;
  }
  return total;
}

inline double pow_beta(double eta, double beta) {
  if (beta == 0.0) return 1.0;
  if (beta == 1.0) return eta;
  return std::pow(eta, beta);
}

}  // namespace detail

inline std::vector<Candidate> transition_probabilities(const PheromoneField& field, const HeuristicField& heuristic,
                                                       const PlanningProblem& problem, int agent, NodeId node,
                                                       std::span<const std::uint8_t> visited,
                                                       const MMASParams& params) {
  const auto m = static_cast<std::size_t>(agent);
  const auto& graph = problem.agents.at(m).graph;
  if (!graph.is_active(node)) fail(ErrorCode::validation, "node " + std::to_string(node) + " is not in the agent graph");
  if (graph.neighbors(node).empty()) fail(ErrorCode::dead_end, "node " + std::to_string(node) + " has no neighbours");
  const auto& eta = heuristic.values[m];
  std::vector<Candidate> out;
  const double total = detail::candidate_weights(graph, node, [&](NodeId j) { return visited[j] != 0; },
                                                 field.tau[m], params.alpha,
                                                 [&](std::size_t e) { return detail::pow_beta(eta[e], params.beta); },
                                                 out);
  for (auto& c : out) c.probability = total > 0.0 ? c.probability / total : 1.0 / static_cast<double>(out.size());
  return out;
}

// ---------------------------------------------------------------------------
// Pheromones

inline PheromoneField init_pheromones(const PlanningProblem& problem, const MMASParams& params, double seed_cost) {
  validate(params);
  const double cost = seed_cost > 0.0 ? seed_cost : problem.dt;
  PheromoneField f;
  f.tau_max = 1.0 / (params.rho * cost);
  f.tau_min = f.tau_max / (2.0 * static_cast<double>(std::max<std::size_t>(1, problem.max_node_count())));
  for (const auto& a : problem.agents) f.tau.emplace_back(a.graph.arc_count(), f.tau_max);
  return f;
}

inline PheromoneField evaporate(PheromoneField field, const MMASParams& params) {
  for (auto& row : field.tau)
    for (double& t : row) t = std::max(field.tau_min, (1.0 - params.rho) * t);
  return field;
}

/// Adds 1/est to every arc each agent traversed in `best` (once per arc),
/// clamped to tau_max. A zero-cost plan deposits 1/dt.
inline PheromoneField deposit_best(PheromoneField field, const AntSolution& best, const PlanningProblem& problem) {
  const double amount = best.est > 0.0 ? 1.0 / best.est : 1.0 / problem.dt;
  for (std::size_t m = 0; m < best.paths.size(); ++m) {
    const auto& graph = problem.agents[m].graph;
    const auto& path = best.paths[m];
    std::vector<std::size_t> arcs;
    for (std::size_t k = 1; k < path.size(); ++k) {
      const std::size_t e = graph.arc_index(path[k - 1], path[k]);
      if (e == kNoArc) fail(ErrorCode::invalid_plan, "deposit along a missing arc");
      arcs.push_back(e);
    }
    std::sort(arcs.begin(), arcs.end());
    arcs.erase(std::unique(arcs.begin(), arcs.end()), arcs.end());
    for (std::size_t e : arcs) field.tau[m][e] = std::min(field.tau_max, field.tau[m][e] + amount);
  }
  return field;
}

// ---------------------------------------------------------------------------
// Solution construction

namespace detail {

inline std::size_t step_cap(const PlanningProblem& problem, const MMASParams& params) {
  return params.max_steps != 0 ? params.max_steps : 4 * std::max<std::size_t>(1, problem.max_node_count());
}

/// Incremental sweep state for one partial joint plan.
class SweepTracker {
 public:
  explicit SweepTracker(const PlanningProblem& problem)
      : problem_(&problem), merged_(problem.belief.merged().mass), stamps_(problem.geometry.cell_count(), 0) {
    std::vector<std::uint8_t> seen(merged_.size(), 0);
    for (const auto& agent : problem.agents)
      for (const auto& region : agent.coverage)
        for (CellIndex c : region.visible_cells) seen[c] = 1;
    for (CellIndex c = 0; c < merged_.size(); ++c)
      if (!seen[c]) unreachable_ += merged_[c];
  }

  void reset(const MtsIndex* mts) {
    ++epoch_;
    remaining_ = problem_->belief.remaining();
    mts_ = mts;
    if (mts_) {
      bins_.clear();
      const auto& b = problem_->belief;
      for (const auto& g : b.sub_priors) bins_.push_back(mts_->bin_mass(g));
    }
  }

  double remaining() const { return remaining_; }
  /// True once every cell any agent could ever see has been swept.
  bool exhausted() const { return remaining_ - unreachable_ <= 1e-12; }
  bool swept(CellIndex c) const { return stamps_[c] == epoch_; }

  /// Mass agent m would be credited for sensing at `node` now.
  double gain(int agent, NodeId node) const {
    const auto& own = problem_->belief.map_for(agent).mass;
    double g = 0.0;
    for (CellIndex c : problem_->agents[static_cast<std::size_t>(agent)].coverage[node].visible_cells)
      if (stamps_[c] != epoch_) g += own[c];
    return g;
  }

  void sweep(int agent, NodeId node) {
    const auto& b = problem_->belief;
    for (CellIndex c : problem_->agents[static_cast<std::size_t>(agent)].coverage[node].visible_cells) {
      if (stamps_[c] == epoch_) continue;
      stamps_[c] = epoch_;
      remaining_ -= merged_[c];
      if (mts_) {
        const auto bin = mts_->cell_bin[c];
        for (std::size_t g = 0; g < bins_.size(); ++g) bins_[g][bin] -= b.sub_priors[g].mass[c];
      }
    }
  }

  std::span<const double> bins_for(int agent) const {
    return problem_->belief.shared ? bins_.front() : bins_[static_cast<std::size_t>(agent)];
  }

 private:
  const PlanningProblem* problem_;
  std::vector<double> merged_;
  std::vector<std::uint64_t> stamps_;
  std::uint64_t epoch_ = 0;
  double remaining_ = 0.0;
  double unreachable_ = 0.0;
  const MtsIndex* mts_ = nullptr;
  std::vector<std::vector<double>> bins_;
};

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  auto splitmix = [](std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  };
  return splitmix(splitmix(splitmix(seed) ^ a) ^ b);
}

}  // namespace detail

/// Per-worker buffers reused across ants.
struct AntWorkspace {
  explicit AntWorkspace(const PlanningProblem& problem)
      : tracker(problem), evaluator(problem), visited(problem.agents.front().graph.id_count(), 0) {}

  detail::SweepTracker tracker;
  PlanEvaluator evaluator;
  std::vector<std::uint8_t> visited;
  std::vector<Candidate> candidates;
};

/// Builds one joint plan. `tsp_weights` holds eta^beta per agent arc for the
/// TSP heuristic; with the MTS heuristic `mts` must be set and eta is
/// recomputed from the ant's own sweep state at every step.
inline AntSolution construct_ant_solution(const PheromoneField& field, const HeuristicField& tsp_weights,
                                          const MtsIndex* mts, const PlanningProblem& problem,
                                          const MMASParams& params, std::mt19937_64& rng, AntWorkspace& ws) {
  const int agent_count = problem.agent_count();
  const std::size_t cap = detail::step_cap(problem, params);
  auto& tracker = ws.tracker;
  tracker.reset(params.heuristic == HeuristicKind::mts ? mts : nullptr);
  std::fill(ws.visited.begin(), ws.visited.end(), 0);

  AntSolution sol;
  sol.paths.resize(static_cast<std::size_t>(agent_count));
  sol.path_distances.assign(static_cast<std::size_t>(agent_count), 0.0);
  for (int m = 0; m < agent_count; ++m) {
    const NodeId s = problem.agents[static_cast<std::size_t>(m)].start;
    sol.paths[static_cast<std::size_t>(m)].push_back(s);
    ws.visited[s] = 1;
    tracker.sweep(m, s);
  }

  const double target = params.residual_target + 1e-12;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> eligible;
  while (tracker.remaining() > target && !tracker.exhausted()) {
    eligible.clear();
    for (int m = 0; m < agent_count; ++m) {
      const auto& path = sol.paths[static_cast<std::size_t>(m)];
      if (path.size() < cap && !problem.agents[static_cast<std::size_t>(m)].graph.neighbors(path.back()).empty())
        eligible.push_back(m);
    }
    if (eligible.empty()) {
      bool moved = false;
      for (const auto& p : sol.paths) moved |= p.size() > 1;
      if (!moved && cap > 1)
        fail(ErrorCode::dead_end, "no agent can leave its start node");
      break;
    }

    int shortest = eligible.front();
    for (int m : eligible)
      if (sol.path_distances[static_cast<std::size_t>(m)] < sol.path_distances[static_cast<std::size_t>(shortest)])
        shortest = m;
    int chosen = shortest;
    if (eligible.size() > 1 && unit(rng) >= params.shortest_agent_prob) {
      std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 2);
      std::size_t k = pick(rng);
      if (eligible[k] == shortest) k = eligible.size() - 1;
      chosen = eligible[k];
    }

    const auto m = static_cast<std::size_t>(chosen);
    const auto& graph = problem.agents[m].graph;
    const NodeId here = sol.paths[m].back();
    const auto is_visited = [&](NodeId j) { return ws.visited[j] != 0; };
    double total = 0.0;
    if (params.heuristic == HeuristicKind::mts) {
      const auto bins = tracker.bins_for(chosen);
      total = detail::candidate_weights(graph, here, is_visited, field.tau[m], params.alpha,
                                        [&](std::size_t e) {
                                          const double eta = kMtsEpsilon + std::max(0.0, mts->sector_mass(chosen, e, bins));
                                          return detail::pow_beta(eta, params.beta);
                                        },
                                        ws.candidates);
    } else {
      const auto& w = tsp_weights.values[m];
      total = detail::candidate_weights(graph, here, is_visited, field.tau[m], params.alpha,
                                        [&](std::size_t e) { return w[e]; }, ws.candidates);
    }

    const Candidate* pick = &ws.candidates.back();
    if (total > 0.0) {
      double r = unit(rng) * total;
      for (const auto& c : ws.candidates) {
        r -= c.probability;
        if (r < 0.0) {
          pick = &c;
          break;
        }
      }
    } else {
      std::uniform_int_distribution<std::size_t> uniform(0, ws.candidates.size() - 1);
      pick = &ws.candidates[uniform(rng)];
    }
    sol.paths[m].push_back(pick->to);
    sol.path_distances[m] += graph.arc(pick->arc).length;
    ws.visited[pick->to] = 1;
    tracker.sweep(chosen, pick->to);
  }

  sol.residual = std::max(0.0, tracker.remaining());
  sol.complete = tracker.remaining() <= target;
  sol.est = ws.evaluator.evaluate(sol.paths, std::nullopt, false).est;
  return sol;
}

/// Deterministic seed solution: the shortest agent moves to the neighbour
/// with the most creditable mass, or one hop towards the nearest node that
/// still has some.
inline AntSolution greedy_solution(const PlanningProblem& problem, const MMASParams& params) {
  const int agent_count = problem.agent_count();
  const std::size_t cap = detail::step_cap(problem, params);
  detail::SweepTracker tracker(problem);
  tracker.reset(nullptr);

  AntSolution sol;
  sol.paths.resize(static_cast<std::size_t>(agent_count));
  sol.path_distances.assign(static_cast<std::size_t>(agent_count), 0.0);
  for (int m = 0; m < agent_count; ++m) {
    const NodeId s = problem.agents[static_cast<std::size_t>(m)].start;
    sol.paths[static_cast<std::size_t>(m)].push_back(s);
    tracker.sweep(m, s);
  }
  constexpr double kTiny = 1e-15;
  const double target = params.residual_target + 1e-12;
  std::vector<bool> done(static_cast<std::size_t>(agent_count), false);

  while (tracker.remaining() > target && !tracker.exhausted()) {
    int chosen = -1;
    for (int m = 0; m < agent_count; ++m) {
      const auto mi = static_cast<std::size_t>(m);
      if (done[mi] || sol.paths[mi].size() >= cap) continue;
      if (chosen < 0 || sol.path_distances[mi] < sol.path_distances[static_cast<std::size_t>(chosen)]) chosen = m;
    }
    if (chosen < 0) break;
    const auto m = static_cast<std::size_t>(chosen);
    const auto& graph = problem.agents[m].graph;
    const NodeId here = sol.paths[m].back();

    NodeId next = kNoNode;
    double best_gain = kTiny, best_len = 0.0;
    for (const Arc& a : graph.neighbors(here)) {
      const double g = tracker.gain(chosen, a.to);
      if (g > best_gain || (next != kNoNode && g == best_gain && a.length < best_len)) {
        best_gain = g;
        best_len = a.length;
        next = a.to;
      }
    }
    if (next == kNoNode) {
      // Dijkstra to the nearest node with positive gain, then take one hop.
      std::vector<double> dist(graph.id_count(), std::numeric_limits<double>::infinity());
      std::vector<NodeId> parent(graph.id_count(), kNoNode);
      using Item = std::pair<double, NodeId>;
      std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
      dist[here] = 0.0;
      queue.push({0.0, here});
      NodeId goal = kNoNode;
      while (!queue.empty()) {
        const auto [d, u] = queue.top();
        queue.pop();
        if (d > dist[u]) continue;
        if (u != here && tracker.gain(chosen, u) > kTiny) {
          goal = u;
          break;
        }
        for (const Arc& a : graph.neighbors(u))
          if (d + a.length < dist[a.to]) {
            dist[a.to] = d + a.length;
            parent[a.to] = u;
            queue.push({dist[a.to], a.to});
          }
      }
      if (goal == kNoNode) {
        done[m] = true;
        continue;
      }
      while (parent[goal] != here) goal = parent[goal];
      next = goal;
    }
    sol.path_distances[m] += graph.arc(graph.arc_index(here, next)).length;
    sol.paths[m].push_back(next);
    tracker.sweep(chosen, next);
  }
  sol.residual = std::max(0.0, tracker.remaining());
  sol.complete = tracker.remaining() <= target;
  PlanEvaluator evaluator(problem);
  sol.est = evaluator.evaluate(sol.paths, std::nullopt, false).est;
  return sol;
}

inline PheromoneField init_pheromones(const PlanningProblem& problem, const MMASParams& params) {
  return init_pheromones(problem, params, greedy_solution(problem, params).est);
}

// ---------------------------------------------------------------------------
// Optimizer

struct OptimizeResult {
  AntSolution best;
  std::vector<double> trace;  // best-so-far EST after each iteration, infinity until one is complete
  double seconds = 0.0;
  PheromoneField pheromones;
};

using IterationObserver = std::function<void(std::size_t iteration, const PheromoneField&, const AntSolution& best)>;

inline OptimizeResult optimize(const PlanningProblem& problem, const MMASParams& params,
                               const IterationObserver& observer = {}) {
  validate(params);
  const auto t0 = std::chrono::steady_clock::now();
  OptimizeResult result;
  result.best = greedy_solution(problem, params);
  result.pheromones = init_pheromones(problem, params, result.best.est);

  const HeuristicField tsp = [&] {
    HeuristicField h = tsp_heuristic(problem);
    for (auto& row : h.values)
      for (double& v : row) v = detail::pow_beta(v, params.beta);
    return h;
  }();
  std::optional<MtsIndex> mts;
  if (params.heuristic == HeuristicKind::mts) mts = MtsIndex::build(problem);

  const unsigned threads = resolve_threads(params.threads, params.n_ants);
  std::vector<AntWorkspace> workspaces;
  workspaces.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) workspaces.emplace_back(problem);

  std::mt19937_64 deposit_rng(detail::mix_seed(params.seed, ~0ULL, 0));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<AntSolution> ants(params.n_ants);

  for (std::size_t it = 0; it < params.n_iterations; ++it) {
    parallel_for(params.n_ants, threads, [&](std::size_t a, unsigned w) {
      std::mt19937_64 rng(detail::mix_seed(params.seed, it, a));
      ants[a] = construct_ant_solution(result.pheromones, tsp, mts ? &*mts : nullptr, problem, params, rng,
                                       workspaces[w]);
    });
    std::size_t ib = 0;
    for (std::size_t a = 1; a < ants.size(); ++a)
      if (better(ants[a], ants[ib])) ib = a;
    if (better(ants[ib], result.best)) result.best = ants[ib];

    result.pheromones = evaporate(std::move(result.pheromones), params);
    const bool use_best_so_far = unit(deposit_rng) < params.best_so_far_prob;
    result.pheromones = deposit_best(std::move(result.pheromones), use_best_so_far ? result.best : ants[ib], problem);
    result.trace.push_back(result.best.complete ? result.best.est : std::numeric_limits<double>::infinity());
    if (observer) observer(it, result.pheromones, result.best);
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace spmts
