#pragma once

// JSON file formats. Every reader reports the offending field in its error.

#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spmts/belief.hpp"
#include "spmts/error.hpp"
#include "spmts/grid_world.hpp"
#include "spmts/planner_aco.hpp"
#include "spmts/sensing.hpp"
#include "spmts/sim_harness.hpp"

namespace spmts::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace detail {

inline const json& field(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object()) fail(ErrorCode::parse, where + ": expected an object");
  const auto it = j.find(key);
  if (it == j.end()) fail(ErrorCode::parse, where + key + ": missing field");
  return *it;
}

template <class T>
T get(const json& j, const std::string& key, const std::string& where = "") {
  const json& v = field(j, key, where);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::parse, where + key + ": wrong type (" + std::string(v.type_name()) + ")");
  }
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback, const std::string& where = "") {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  return get<T>(j, key, where);
}

inline Vec2 get_point(const json& j, const std::string& key, const std::string& where = "") {
  const json& v = field(j, key, where);
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  if (v.is_object() && v.contains("x") && v.contains("y")) return {get<double>(v, "x", where + key + "."), get<double>(v, "y", where + key + ".")};
  fail(ErrorCode::parse, where + key + ": expected [x, y]");
}

inline json point(Vec2 p) { return json::array({p.x, p.y}); }

}  // namespace detail

inline json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::parse, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::parse, path.string() + ": " + e.what());
  }
}

inline void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::parse, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Grayscale class images (binary P5 or ASCII P2)

inline std::vector<std::uint8_t> read_pgm(const fs::path& path, int& width, int& height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::parse, "image: cannot open " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P2") fail(ErrorCode::parse, "image: " + path.string() + " is not a P5/P2 PGM");
  auto next_int = [&](const char* what) {
    while (true) {
      in >> std::ws;
      if (in.peek() == '#') {
        std::string comment;
        std::getline(in, comment);
        continue;
      }
      int v = 0;
      if (!(in >> v)) fail(ErrorCode::parse, std::string("image: bad ") + what);
      return v;
    }
  };
  width = next_int("width");
  height = next_int("height");
  const int maxval = next_int("maxval");
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 255) fail(ErrorCode::parse, "image: unsupported header");
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  if (magic == "P5") {
    in.get();
    in.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(pixels.size())) fail(ErrorCode::parse, "image: truncated pixel data");
  } else {
    for (auto& p : pixels) p = static_cast<std::uint8_t>(next_int("pixel"));
  }
  return pixels;
}

inline void write_pgm(const fs::path& path, int width, int height, const std::vector<std::uint8_t>& pixels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::parse, "cannot write " + path.string());
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

// ---------------------------------------------------------------------------
// Maps and priors

namespace detail {

inline GridGeometry geometry_from(const json& j, const std::string& where) {
  GridGeometry g;
  g.width = get<int>(j, "width", where);
  g.height = get<int>(j, "height", where);
  g.resolution = get<double>(j, "resolution", where);
  if (g.width <= 0) fail(ErrorCode::parse, where + "width: must be positive");
  if (g.height <= 0) fail(ErrorCode::parse, where + "height: must be positive");
  if (!(g.resolution > 0.0)) fail(ErrorCode::parse, where + "resolution: must be positive");
  return g;
}

/// Row-major values either flat or as one array per row.
template <class T>
std::vector<T> grid_values(const json& v, const GridGeometry& g, const std::string& name) {
  if (!v.is_array()) fail(ErrorCode::parse, name + ": expected an array");
  std::vector<T> out;
  out.reserve(g.cell_count());
  auto push = [&](const json& x, std::size_t i) {
    if (!x.is_number()) fail(ErrorCode::parse, name + "[" + std::to_string(i) + "]: expected a number");
    out.push_back(x.get<T>());
  };
  if (!v.empty() && v[0].is_array()) {
    if (v.size() != static_cast<std::size_t>(g.height))
      fail(ErrorCode::parse, name + ": expected " + std::to_string(g.height) + " rows, got " + std::to_string(v.size()));
    for (std::size_t r = 0; r < v.size(); ++r) {
      if (!v[r].is_array() || v[r].size() != static_cast<std::size_t>(g.width))
        fail(ErrorCode::parse, name + "[" + std::to_string(r) + "]: expected " + std::to_string(g.width) + " values");
      for (const auto& x : v[r]) push(x, out.size());
    }
  } else {
    for (const auto& x : v) push(x, out.size());
  }
  if (out.size() != g.cell_count())
    fail(ErrorCode::parse, name + ": expected " + std::to_string(g.cell_count()) + " values, got " + std::to_string(out.size()));
  return out;
}

}  // namespace detail

/// Parses a map document. `base` resolves a relative "image" reference.
inline SegmentedMap parse_map(const json& j, const fs::path& base = {}) {
  SegmentedMap m;
  m.geometry = detail::geometry_from(j, "");
  m.class_names = default_class_names();
  if (j.contains("class_names")) {
    const auto names = detail::get<std::vector<std::string>>(j, "class_names");
    if (names.size() != kClassCount)
      fail(ErrorCode::parse, "class_names: expected 14 labels, got " + std::to_string(names.size()));
    std::copy(names.begin(), names.end(), m.class_names.begin());
  }
  if (j.contains("classes")) {
    const auto values = detail::grid_values<long long>(j.at("classes"), m.geometry, "classes");
    m.classes.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i] < 0 || values[i] >= kClassCount)
        fail(ErrorCode::validation, "classes[" + std::to_string(i) + "] = " + std::to_string(values[i]) +
                                        " is not a class id in [0,13]");
      m.classes.push_back(static_cast<std::uint8_t>(values[i]));
    }
  } else if (j.contains("image")) {
    int w = 0, h = 0;
    const fs::path image = base / detail::get<std::string>(j, "image");
    m.classes = read_pgm(image, w, h);
    if (w != m.geometry.width || h != m.geometry.height)
      fail(ErrorCode::parse, "image: size " + std::to_string(w) + "x" + std::to_string(h) + " differs from the header");
  } else {
    fail(ErrorCode::parse, "classes: missing field (or give \"image\")");
  }
  validate(m);
  return m;
}

inline SegmentedMap load_segmented_map(const fs::path& path) {
  return parse_map(read_json_file(path), path.parent_path());
}

inline json to_json(const SegmentedMap& m) {
  json j;
  j["width"] = m.geometry.width;
  j["height"] = m.geometry.height;
  j["resolution"] = m.geometry.resolution;
  j["class_names"] = m.class_names;
  std::vector<int> classes(m.classes.begin(), m.classes.end());
  j["classes"] = classes;
  return j;
}

/// Obstacle classes named in a map document, if any.
inline std::optional<std::set<int>> obstacle_classes_of(const json& j) {
  if (!j.contains("obstacle_classes")) return std::nullopt;
  return detail::get<std::set<int>>(j, "obstacle_classes");
}

inline ProbabilityGrid parse_prior(const json& j) {
  ProbabilityGrid p;
  p.geometry = detail::geometry_from(j, "");
  p.mass = detail::grid_values<double>(detail::field(j, "mass", ""), p.geometry, "mass");
  for (std::size_t i = 0; i < p.mass.size(); ++i)
    if (!(p.mass[i] >= 0.0) || !std::isfinite(p.mass[i]))
      fail(ErrorCode::validation, "mass[" + std::to_string(i) + "] must be finite and nonnegative");
  return p;
}

inline ProbabilityGrid load_prior(const fs::path& path) { return parse_prior(read_json_file(path)); }

inline json to_json(const ProbabilityGrid& p) {
  return {{"width", p.geometry.width}, {"height", p.geometry.height}, {"resolution", p.geometry.resolution},
          {"mass", p.mass}};
}

inline json to_json(const OccupancyGrid& occ) {
  std::vector<int> cells(occ.occupied.begin(), occ.occupied.end());
  return {{"width", occ.geometry.width}, {"height", occ.geometry.height}, {"resolution", occ.geometry.resolution},
          {"occupied", cells}};
}

// ---------------------------------------------------------------------------
// Graphs, agents, areas

inline json to_json(const SearchGraph& g) {
  json nodes = json::array();
  for (const auto& n : g.nodes())
    nodes.push_back({{"id", n.id}, {"x", n.position.x}, {"y", n.position.y}, {"square", {n.square_col, n.square_row}}});
  json edges = json::array();
  for (const auto& [i, j, d] : g.edges()) edges.push_back({i, j, d});
  return {{"grid_distance", g.grid_distance()}, {"neighborhood", g.neighborhood()}, {"nodes", nodes}, {"edges", edges}};
}

inline SearchGraph parse_graph(const json& j) {
  std::vector<GraphNode> nodes;
  const json& jn = detail::field(j, "nodes", "");
  for (std::size_t k = 0; k < jn.size(); ++k) {
    const std::string where = "nodes[" + std::to_string(k) + "].";
    GraphNode n;
    n.id = detail::get<NodeId>(jn[k], "id", where);
    if (n.id != k) fail(ErrorCode::parse, where + "id: ids must be 0..N-1 in order");
    n.position = {detail::get<double>(jn[k], "x", where), detail::get<double>(jn[k], "y", where)};
    if (jn[k].contains("square")) {
      const auto sq = detail::get<std::array<int, 2>>(jn[k], "square", where);
      n.square_col = sq[0];
      n.square_row = sq[1];
    }
    nodes.push_back(n);
  }
  std::vector<std::tuple<NodeId, NodeId, double>> edges;
  const json& je = detail::field(j, "edges", "");
  for (std::size_t k = 0; k < je.size(); ++k) {
    if (!je[k].is_array() || je[k].size() != 3) fail(ErrorCode::parse, "edges[" + std::to_string(k) + "]: expected [i, j, length]");
    const auto i = je[k][0].get<NodeId>(), t = je[k][1].get<NodeId>();
    if (i >= nodes.size() || t >= nodes.size()) fail(ErrorCode::parse, "edges[" + std::to_string(k) + "]: unknown node");
    edges.emplace_back(i, t, je[k][2].get<double>());
  }
  return SearchGraph(std::move(nodes), std::vector<bool>(jn.size(), true), edges,
                     detail::get<double>(j, "grid_distance"), detail::get<int>(j, "neighborhood"));
}

inline AgentProfile parse_agent(const json& j, const std::string& where) {
  AgentProfile a;
  a.id = detail::get<int>(j, "id", where);
  a.start = detail::get_point(j, "start", where);
  a.visibility_radius = detail::get_or<double>(j, "visibility_radius", a.visibility_radius, where);
  a.speed = detail::get_or<double>(j, "speed", a.speed, where);
  a.restricted_classes = detail::get_or<std::set<int>>(j, "restricted_classes", {}, where);
  a.human = detail::get_or<bool>(j, "human", false, where);
  if (!(a.visibility_radius > 0.0)) fail(ErrorCode::validation, where + "visibility_radius: must be positive");
  if (!(a.speed > 0.0)) fail(ErrorCode::validation, where + "speed: must be positive");
  for (int c : a.restricted_classes)
    if (c < 0 || c >= kClassCount) fail(ErrorCode::validation, where + "restricted_classes: " + std::to_string(c) + " is not a class id");
  return a;
}

/// Accepts either a bare array or {"agents": [...]}.
inline std::vector<AgentProfile> parse_agents(const json& j) {
  const json& arr = j.is_array() ? j : detail::field(j, "agents", "");
  if (!arr.is_array()) fail(ErrorCode::parse, "agents: expected an array");
  std::vector<AgentProfile> out;
  for (std::size_t k = 0; k < arr.size(); ++k) out.push_back(parse_agent(arr[k], "agents[" + std::to_string(k) + "]."));
  for (std::size_t k = 0; k < out.size(); ++k)
    if (out[k].id != static_cast<int>(k)) fail(ErrorCode::validation, "agents[" + std::to_string(k) + "].id: ids must be 0..M-1 in order");
  return out;
}

inline json to_json(const AgentProfile& a) {
  return {{"id", a.id},
          {"start", detail::point(a.start)},
          {"visibility_radius", a.visibility_radius},
          {"speed", a.speed},
          {"restricted_classes", a.restricted_classes},
          {"human", a.human}};
}

inline PreferredArea parse_area(const json& j, const std::string& where = "") {
  PreferredArea a;
  a.x_min = detail::get<double>(j, "x_min", where);
  a.y_min = detail::get<double>(j, "y_min", where);
  a.x_max = detail::get<double>(j, "x_max", where);
  a.y_max = detail::get<double>(j, "y_max", where);
  a.owner = detail::get<int>(j, "owner", where);
  return a;
}

inline std::vector<PreferredArea> parse_areas(const json& j) {
  const json& arr = j.is_array() ? j : detail::field(j, "areas", "");
  if (!arr.is_array()) fail(ErrorCode::parse, "areas: expected an array");
  std::vector<PreferredArea> out;
  for (std::size_t k = 0; k < arr.size(); ++k) out.push_back(parse_area(arr[k], "areas[" + std::to_string(k) + "]."));
  return out;
}

inline json to_json(const PreferredArea& a) {
  return {{"x_min", a.x_min}, {"y_min", a.y_min}, {"x_max", a.x_max}, {"y_max", a.y_max}, {"owner", a.owner}};
}

inline json to_json(const VisibleRegion& r) {
  return {{"agent", r.agent}, {"center", detail::point(r.center)}, {"radius", r.radius}, {"cells", r.visible_cells}};
}

inline json to_json(const PlanEvaluation& e) {
  return {{"step_probabilities", e.step_probabilities},
          {"cumulative", e.cumulative},
          {"est", e.est},
          {"residual", e.residual},
          {"remaining", e.remaining}};
}

// ---------------------------------------------------------------------------
// Optimizer parameters and plans

inline MMASParams parse_params(const json& j, MMASParams p = {}) {
  if (j.is_null()) return p;
  const std::string w = "params.";
  p.alpha = detail::get_or(j, "alpha", p.alpha, w);
  p.beta = detail::get_or(j, "beta", p.beta, w);
  p.rho = detail::get_or(j, "rho", p.rho, w);
  p.n_ants = detail::get_or(j, "n_ants", p.n_ants, w);
  p.n_iterations = detail::get_or(j, "n_iterations", p.n_iterations, w);
  p.residual_target = detail::get_or(j, "residual_target", p.residual_target, w);
  p.best_so_far_prob = detail::get_or(j, "best_so_far_prob", p.best_so_far_prob, w);
  p.shortest_agent_prob = detail::get_or(j, "shortest_agent_prob", p.shortest_agent_prob, w);
  p.seed = detail::get_or(j, "seed", p.seed, w);
  if (j.contains("heuristic")) p.heuristic = parse_heuristic(detail::get<std::string>(j, "heuristic", w));
  p.max_steps = detail::get_or(j, "max_steps", p.max_steps, w);
  p.threads = detail::get_or(j, "threads", p.threads, w);
  validate(p);
  return p;
}

inline json to_json(const MMASParams& p) {
  return {{"alpha", p.alpha},
          {"beta", p.beta},
          {"rho", p.rho},
          {"n_ants", p.n_ants},
          {"n_iterations", p.n_iterations},
          {"residual_target", p.residual_target},
          {"best_so_far_prob", p.best_so_far_prob},
          {"shortest_agent_prob", p.shortest_agent_prob},
          {"seed", p.seed},
          {"heuristic", std::string(to_string(p.heuristic))},
          {"max_steps", p.max_steps},
          {"threads", p.threads}};
}

inline json plan_to_json(const Plan& plan, const SearchGraph& graph) {
  json agents = json::array();
  for (std::size_t m = 0; m < plan.size(); ++m) {
    json positions = json::array();
    double d = 0.0;
    for (std::size_t k = 0; k < plan[m].size(); ++k) {
      positions.push_back(detail::point(graph.node(plan[m][k]).position));
      if (k > 0) d += distance(graph.node(plan[m][k - 1]).position, graph.node(plan[m][k]).position);
    }
    agents.push_back({{"id", m}, {"nodes", plan[m]}, {"positions", positions}, {"distance", d}});
  }
  return agents;
}

inline json to_json(const OptimizeResult& r, const SearchGraph& graph) {
  return {{"agents", plan_to_json(r.best.paths, graph)},
          {"est", r.best.est},
          {"residual", r.best.residual},
          {"complete", r.best.complete},
          {"path_distances", r.best.path_distances},
          {"trace", r.trace},
          {"seconds", r.seconds}};
}

inline Plan parse_plan(const json& j) {
  const json& arr = j.is_array() ? j : detail::field(j, "agents", "");
  Plan plan;
  for (std::size_t k = 0; k < arr.size(); ++k)
    plan.push_back(detail::get<std::vector<NodeId>>(arr[k], "nodes", "agents[" + std::to_string(k) + "]."));
  return plan;
}

// ---------------------------------------------------------------------------
// Scenarios and benchmark specs

/// Parses a scenario document. Relative file references resolve against `base`.
inline ScenarioSpec parse_scenario(const json& j, const fs::path& base = {}) {
  ScenarioSpec s;
  s.name = detail::get_or<std::string>(j, "name", s.name);
  s.seed = detail::get_or(j, "seed", s.seed);
  s.grid_distance = detail::get_or(j, "grid_distance", s.grid_distance);
  s.neighborhood = detail::get_or(j, "neighborhood", s.neighborhood);
  s.clearance = detail::get_or(j, "clearance", s.clearance);
  if (j.contains("planning_speed")) s.planning_speed = detail::get<double>(j, "planning_speed");

  if (j.contains("map")) {
    const json& jm = j.at("map");
    if (jm.is_string() || jm.contains("file")) {
      const fs::path file = base / (jm.is_string() ? jm.get<std::string>() : detail::get<std::string>(jm, "file", "map."));
      const json doc = read_json_file(file);
      s.map = parse_map(doc, file.parent_path());
      if (auto oc = obstacle_classes_of(doc)) s.obstacle_classes = *oc;
    } else if (jm.contains("classes") || jm.contains("image")) {
      s.map = parse_map(jm, base);
      if (auto oc = obstacle_classes_of(jm)) s.obstacle_classes = *oc;
    } else {
      s.generator = detail::get_or<std::string>(jm, "generator", s.generator, "map.");
      s.width_m = detail::get_or(jm, "width_m", s.width_m, "map.");
      s.height_m = detail::get_or(jm, "height_m", s.height_m, "map.");
      s.resolution = detail::get_or(jm, "resolution", s.resolution, "map.");
    }
  }
  if (j.contains("obstacle_classes")) s.obstacle_classes = detail::get<std::set<int>>(j, "obstacle_classes");

  if (j.contains("prior")) {
    const json& jp = j.at("prior");
    s.prior_kind = parse_prior_kind(detail::get_or<std::string>(jp, "kind", "uniform", "prior."));
    if (jp.contains("components")) {
      const json& jc = jp.at("components");
      for (std::size_t k = 0; k < jc.size(); ++k) {
        const std::string where = "prior.components[" + std::to_string(k) + "].";
        s.components.push_back({detail::get_point(jc[k], "center", where), detail::get<double>(jc[k], "sigma", where),
                                detail::get_or(jc[k], "weight", 1.0, where)});
      }
    }
    if (s.prior_kind == PriorKind::file) {
      if (jp.contains("mass")) s.prior_grid = parse_prior(jp);
      else s.prior_grid = load_prior(base / detail::get<std::string>(jp, "file", "prior."));
    }
  }

  s.agents = parse_agents(detail::field(j, "agents", ""));
  if (j.contains("target") && !j.at("target").is_null()) {
    const json& jt = j.at("target");
    if (jt.is_string()) {
      if (jt.get<std::string>() != "sampled") fail(ErrorCode::parse, "target: expected \"sampled\" or {\"cell\": [col, row]}");
    } else {
      s.target_cell = detail::get<std::array<int, 2>>(jt, "cell", "target.");
    }
  }
  return s;
}

inline ScenarioSpec load_scenario(const fs::path& path) { return parse_scenario(read_json_file(path), path.parent_path()); }

inline json to_json(const ScenarioSpec& s) {
  json j;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["grid_distance"] = s.grid_distance;
  j["neighborhood"] = s.neighborhood;
  j["clearance"] = s.clearance;
  if (s.planning_speed) j["planning_speed"] = *s.planning_speed;
  if (s.map) j["map"] = to_json(*s.map);
  else j["map"] = {{"generator", s.generator}, {"width_m", s.width_m}, {"height_m", s.height_m}, {"resolution", s.resolution}};
  j["obstacle_classes"] = s.obstacle_classes;
  json prior = {{"kind", std::string(to_string(s.prior_kind))}};
  if (!s.components.empty()) {
    json comps = json::array();
    for (const auto& c : s.components) comps.push_back({{"center", detail::point(c.center)}, {"sigma", c.sigma}, {"weight", c.weight}});
    prior["components"] = comps;
  }
  if (s.prior_grid) prior.update(to_json(*s.prior_grid));
  j["prior"] = prior;
  json agents = json::array();
  for (const auto& a : s.agents) agents.push_back(to_json(a));
  j["agents"] = agents;
  if (s.target_cell) j["target"] = {{"cell", *s.target_cell}};
  else j["target"] = "sampled";
  return j;
}

struct BenchSpec {
  std::vector<BenchCell> cells;
  MMASParams params;
};

/// {"scenarios": [...], "heuristics": [...], "subpriors": [...], "params": {...}}
/// expands to the cartesian product of the three lists.
inline BenchSpec parse_bench(const json& j, const fs::path& base = {}) {
  BenchSpec b;
  b.params = parse_params(j.value("params", json()), b.params);
  std::vector<ScenarioSpec> scenarios;
  const json& js = detail::field(j, "scenarios", "");
  for (const auto& s : js) scenarios.push_back(s.is_string() ? load_scenario(base / s.get<std::string>()) : parse_scenario(s, base));
  const auto heuristics = detail::get_or<std::vector<std::string>>(j, "heuristics", {"tsp"});
  const auto modes = detail::get_or<std::vector<std::string>>(j, "subpriors", {"none"});
  for (const auto& s : scenarios)
    for (const auto& h : heuristics)
      for (const auto& m : modes) b.cells.push_back({s, parse_heuristic(h), parse_subprior_mode(m)});
  return b;
}

inline std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << "scenario,heuristic,subpriors,ET_mean,ET_sd,CT_mean,CT_sd,PD_mean,PD_sd\n";
  out.setf(std::ios::fixed);
  out.precision(4);
  for (const auto& r : rows) {
    const auto et = mean_sd(r.et), ct = mean_sd(r.ct), pd = mean_sd(r.pd);
    out << r.scenario << ',' << to_string(r.heuristic) << ',' << to_string(r.subpriors) << ',' << et.mean << ','
        << et.sd << ',' << ct.mean << ',' << ct.sd << ',' << pd.mean << ',' << pd.sd << '\n';
  }
  return out.str();
}

/// Human-readable table in the layout rows x (ET | PD | CT).
inline std::string bench_table(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-14s %-4s %-8s %18s %18s %16s\n", "scenario", "heur", "subprior", "ET [s]", "PD [m]", "CT [s]");
  out << line;
  for (const auto& r : rows) {
    const auto et = mean_sd(r.et), ct = mean_sd(r.ct), pd = mean_sd(r.pd);
    std::snprintf(line, sizeof line, "%-14s %-4s %-8s %9.2f +- %6.2f %9.1f +- %6.1f %8.2f +- %5.2f\n", r.scenario.c_str(),
                  std::string(to_string(r.heuristic)).c_str(), std::string(to_string(r.subpriors)).c_str(), et.mean,
                  et.sd, pd.mean, pd.sd, ct.mean, ct.sd);
    out << line;
  }
  return out.str();
}

inline json to_json(const SimResult& r) {
  json j = {{"found_by", r.found_by ? json(*r.found_by) : json(nullptr)},
            {"real_search_time", r.real_search_time},
            {"planned_est", r.planned_est},
            {"path_distance", r.path_distance},
            {"divergence_distance", r.divergence_distance},
            {"computation_time", r.computation_time},
            {"percent_considered_areas", r.percent_considered_areas},
            {"ticks", r.ticks}};
  return j;
}

}  // namespace spmts::io
