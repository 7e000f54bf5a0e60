// plan: command-line front end for graph building, prior generation,
// optimization, benchmarking, simulation and the session server.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "spmts/http_service.hpp"
#include "spmts/io.hpp"
#include "spmts/planner_aco.hpp"
#include "spmts/service.hpp"
#include "spmts/sim_harness.hpp"

namespace {

using namespace spmts;
using nlohmann::json;

void emit(const json& j, const std::string& out) {
  if (out.empty() || out == "-") std::cout << j.dump(2) << '\n';
  else io::write_json_file(out, j);
}

void add_param_options(CLI::App* cmd, MMASParams& p, std::string& heuristic) {
  cmd->add_option("--ants", p.n_ants, "ants per iteration")->capture_default_str();
  cmd->add_option("--iters", p.n_iterations, "iterations")->capture_default_str();
  cmd->add_option("--alpha", p.alpha, "pheromone exponent")->capture_default_str();
  cmd->add_option("--beta", p.beta, "heuristic exponent")->capture_default_str();
  cmd->add_option("--rho", p.rho, "evaporation rate")->capture_default_str();
  cmd->add_option("--residual", p.residual_target, "probability a plan may leave unswept")->capture_default_str();
  cmd->add_option("--best-so-far", p.best_so_far_prob, "probability of depositing on the best-so-far solution")
      ->capture_default_str();
  cmd->add_option("--shortest-agent", p.shortest_agent_prob, "probability of extending the shortest path")
      ->capture_default_str();
  cmd->add_option("--seed", p.seed, "random seed")->capture_default_str();
  cmd->add_option("--max-steps", p.max_steps, "path length cap in nodes (0 = 4x node count)")->capture_default_str();
  cmd->add_option("--threads", p.threads, "worker threads (0 = all cores)")->capture_default_str();
  cmd->add_option("--heuristic", heuristic, "tsp or mts")->capture_default_str();
}

/// Builds a scenario from separate map / prior / agents files.
ScenarioSpec spec_from_files(const std::string& map_path, const std::string& prior_path, const std::string& agents_path,
                             double grid_distance, int neighborhood, double clearance) {
  ScenarioSpec s;
  const json doc = io::read_json_file(map_path);
  s.map = io::parse_map(doc, std::filesystem::path(map_path).parent_path());
  if (auto oc = io::obstacle_classes_of(doc)) s.obstacle_classes = *oc;
  if (!prior_path.empty()) {
    s.prior_kind = PriorKind::file;
    s.prior_grid = io::load_prior(prior_path);
  }
  s.agents = io::parse_agents(io::read_json_file(agents_path));
  s.grid_distance = grid_distance;
  s.neighborhood = neighborhood;
  s.clearance = clearance;
  s.name = std::filesystem::path(map_path).stem().string();
  return s;
}

HttpService* g_server = nullptr;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent probabilistic search planner"};
  app.require_subcommand(1);

  // build-graph
  std::string map_path, out_path, prior_path, agents_path, areas_path, subpriors = "none";
  double grid_distance = 3.5, clearance = 0.40;
  int neighborhood = 7;
  std::vector<int> obstacle_classes;
  auto* build = app.add_subcommand("build-graph", "sample nodes and build the search graph of a map");
  build->add_option("--map", map_path, "segmented map JSON")->required()->check(CLI::ExistingFile);
  build->add_option("--grid-distance", grid_distance, "sampling square side [m]")->capture_default_str();
  build->add_option("--neighborhood", neighborhood, "odd window size in squares")->capture_default_str();
  build->add_option("--clearance", clearance, "minimum node distance to obstacles [m]")->capture_default_str();
  build->add_option("--obstacle-classes", obstacle_classes, "class ids treated as obstacles");
  build->add_option("--out", out_path, "output graph JSON (default stdout)");

  // prior
  std::vector<double> weights;
  auto* prior = app.add_subcommand("prior", "class-weight prior for a segmented map");
  prior->add_option("--map", map_path, "segmented map JSON")->required()->check(CLI::ExistingFile);
  prior->add_option("--weights", weights, "14 class weights")->required()->expected(14)->delimiter(',');
  prior->add_option("--obstacle-classes", obstacle_classes, "class ids treated as obstacles");
  prior->add_option("--out", out_path, "output prior JSON (default stdout)");

  // optimize
  MMASParams params;
  std::string heuristic = "tsp";
  auto* opt = app.add_subcommand("optimize", "plan coordinated search paths");
  opt->add_option("--map", map_path, "segmented map JSON")->required()->check(CLI::ExistingFile);
  opt->add_option("--prior", prior_path, "prior JSON (default uniform)")->check(CLI::ExistingFile);
  opt->add_option("--agents", agents_path, "agents JSON")->required()->check(CLI::ExistingFile);
  opt->add_option("--areas", areas_path, "preferred areas JSON; builds sub-priors")->check(CLI::ExistingFile);
  opt->add_option("--subpriors", subpriors, "none, equal, nearest or swapped (ignored with --areas)")
      ->capture_default_str();
  opt->add_option("--grid-distance", grid_distance, "sampling square side [m]")->capture_default_str();
  opt->add_option("--neighborhood", neighborhood, "odd window size in squares")->capture_default_str();
  opt->add_option("--clearance", clearance, "minimum node distance to obstacles [m]")->capture_default_str();
  opt->add_option("--out", out_path, "output plan JSON (default stdout)");
  add_param_options(opt, params, heuristic);

  // bench
  std::string bench_path;
  std::size_t reps = 10;
  unsigned bench_threads = 0;
  auto* bench = app.add_subcommand("bench", "run a benchmark grid and print mean/sd tables");
  bench->add_option("--spec", bench_path, "benchmark JSON")->required()->check(CLI::ExistingFile);
  bench->add_option("--reps", reps, "repetitions per cell (seeds 1..reps)")->capture_default_str();
  bench->add_option("--threads", bench_threads, "parallel runs (0 = all cores)")->capture_default_str();
  bench->add_option("--out", out_path, "CSV output (default stdout)");

  // simulate
  std::string plan_path, scenario_path;
  std::uint64_t sim_seed = 1;
  double timeout = 0.0, tick = 0.1;
  bool ideal_timing = false;
  std::vector<double> speeds;
  auto* sim = app.add_subcommand("simulate", "execute a plan against a hidden target");
  sim->add_option("--plan", plan_path, "plan JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--scenario", scenario_path, "scenario JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--seed", sim_seed, "target sampling seed")->capture_default_str();
  sim->add_option("--timeout", timeout, "seconds (default: plan horizon x dt)");
  sim->add_option("--tick", tick, "simulation tick [s]")->capture_default_str();
  sim->add_option("--speeds", speeds, "per-agent speeds [m/s]")->delimiter(',');
  sim->add_flag("--ideal-timing", ideal_timing, "every arc takes exactly one planning step");

  // serve
  HttpConfig http;
  ServiceConfig service;
  std::string serve_heuristic = "tsp";
  auto* serve = app.add_subcommand("serve", "run the session service");
  serve->add_option("--host", http.host, "bind address")->capture_default_str();
  serve->add_option("--port", http.port, "TCP port")->capture_default_str();
  serve->add_option("--cors", http.cors_origins, "allowed console origins");
  serve->add_option("--time-scale", service.time_scale, "wall seconds per simulated second (0 = fast)")
      ->capture_default_str();
  serve->add_option("--timeout", service.default_timeout, "default run timeout [s]")->capture_default_str();
  serve->add_option("--snapshot-dir", service.snapshot_dir, "directory for session snapshots");
  add_param_options(serve, service.default_params, serve_heuristic);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*build) {
      const json doc = io::read_json_file(map_path);
      const SegmentedMap map = io::parse_map(doc, std::filesystem::path(map_path).parent_path());
      std::set<int> oc = io::obstacle_classes_of(doc).value_or(default_obstacle_classes());
      if (!obstacle_classes.empty()) oc = {obstacle_classes.begin(), obstacle_classes.end()};
      const OccupancyGrid occ = derive_occupancy(map, oc);
      const SearchGraph graph = build_graph(sample_nodes(occ, {grid_distance, clearance}), occ, grid_distance, neighborhood);
      emit(io::to_json(graph), out_path);
    } else if (*prior) {
      const json doc = io::read_json_file(map_path);
      const SegmentedMap map = io::parse_map(doc, std::filesystem::path(map_path).parent_path());
      std::set<int> oc = io::obstacle_classes_of(doc).value_or(default_obstacle_classes());
      if (!obstacle_classes.empty()) oc = {obstacle_classes.begin(), obstacle_classes.end()};
      emit(io::to_json(class_weight_prior(map, derive_occupancy(map, oc), weights)), out_path);
    } else if (*opt) {
      params.heuristic = parse_heuristic(heuristic);
      const ScenarioSpec spec = spec_from_files(map_path, prior_path, agents_path, grid_distance, neighborhood, clearance);
      const Scenario scenario = generate_scenario(spec);
      std::vector<PreferredArea> areas;
      BeliefState belief = scenario_belief(scenario, parse_subprior_mode(subpriors));
      if (!areas_path.empty()) {
        areas = io::parse_areas(io::read_json_file(areas_path));
        belief = BeliefState::per_agent(split_sub_priors(scenario.prior, areas, scenario.profiles.size()));
      }
      const PlanningProblem problem = scenario_problem(scenario, std::move(belief));
      const OptimizeResult result = optimize(problem, params);
      json j = io::to_json(result, scenario.graph);
      j["et"] = merged_expected_time(scenario, result.best.paths);
      j["dt"] = scenario.dt;
      j["percent_considered_areas"] = percent_considered_areas(result.best.paths, scenario.graph, areas);
      j["params"] = io::to_json(params);
      emit(j, out_path);
      if (!result.best.complete)
        std::fprintf(stderr, "warning: plan leaves %.4f probability unswept (target %.4f)\n", result.best.residual,
                     params.residual_target);
    } else if (*bench) {
      const io::BenchSpec spec = io::parse_bench(io::read_json_file(bench_path), std::filesystem::path(bench_path).parent_path());
      const auto rows = benchmark(spec.cells, reps, spec.params, bench_threads);
      const std::string csv = io::bench_csv(rows);
      if (out_path.empty() || out_path == "-") {
        std::cout << csv;
      } else {
        std::ofstream(out_path) << csv;
      }
      std::cerr << io::bench_table(rows);
    } else if (*sim) {
      ScenarioSpec spec = io::load_scenario(scenario_path);
      spec.seed = sim_seed;
      const Scenario scenario = generate_scenario(spec);
      const json plan_doc = io::read_json_file(plan_path);
      const Plan plan = io::parse_plan(plan_doc);
      const PlanningProblem problem = scenario_problem(scenario);
      validate_plan(plan, problem);
      SimOptions so;
      so.tick = tick;
      so.speeds = speeds;
      so.timeout = timeout > 0.0 ? timeout : static_cast<double>(plan_horizon(plan)) * scenario.dt;
      if (ideal_timing) so.arc_time = scenario.dt;
      SimResult r = run_search(plan, scenario, scenario.target_cell, so);
      r.planned_est = plan_doc.value("est", PlanEvaluator(problem).evaluate(plan, std::nullopt, false).est);
      r.computation_time = plan_doc.value("seconds", 0.0);
      json j = io::to_json(r);
      j["target_cell"] = scenario.target_cell;
      emit(j, "");
    } else if (*serve) {
      service.default_params.heuristic = parse_heuristic(serve_heuristic);
      validate(service.default_params);
      SessionManager sessions(service);
      HttpService server(sessions, http);
      g_server = &server;
      std::signal(SIGINT, [](int) {
        if (g_server) g_server->stop();
      });
      std::signal(SIGTERM, [](int) {
        if (g_server) g_server->stop();
      });
      std::cerr << "listening on http://" << http.host << ':' << http.port << '\n';
      if (!server.listen()) {
        std::cerr << "error: cannot listen on " << http.host << ':' << http.port << '\n';
        return 1;
      }
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
