#pragma once

// Session-oriented planning service: the two-phase collaborative protocol
// (plan, show, preferred areas, replan, confirm, run) independent of the
// HTTP transport. Commands throw Error; ErrorCode::protocol marks calls made
// in the wrong phase or while an optimizer job is running.

#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "spmts/belief.hpp"
#include "spmts/error.hpp"
#include "spmts/io.hpp"
#include "spmts/planner_aco.hpp"
#include "spmts/sim_harness.hpp"

namespace spmts {

enum class Phase { created, planned, areas_submitted, replanned, running, finished };

inline std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::created: return "created";
    case Phase::planned: return "planned";
    case Phase::areas_submitted: return "areas_submitted";
    case Phase::replanned: return "replanned";
    case Phase::running: return "running";
    case Phase::finished: return "finished";
  }
  return "?";
}

enum class JobStatus { idle, running, done, failed };

inline std::string_view to_string(JobStatus s) {
  switch (s) {
    case JobStatus::idle: return "idle";
    case JobStatus::running: return "running";
    case JobStatus::done: return "done";
    case JobStatus::failed: return "failed";
  }
  return "?";
}

struct ServiceConfig {
  MMASParams default_params;
  double default_timeout = 1800.0;
  double default_tick = 0.1;
  /// Wall seconds slept per simulated second; 0 runs as fast as possible.
  double time_scale = 1.0;
  /// Simulated seconds between state events.
  double state_interval = 1.0;
  std::string snapshot_dir;
};

struct Event {
  std::size_t seq = 0;
  std::string type;
  nlohmann::json data;
};

inline bool is_terminal(const std::string& type) {
  return type == "robot_found" || type == "human_found_reported" || type == "not_found";
}

struct PlanRecord {
  OptimizeResult result;
  double et = 0.0;  // under the global prior
  double percent_considered_areas = 0.0;
  std::vector<PreferredArea> areas;
};

struct RunOptions {
  std::vector<double> speeds;
  std::optional<double> timeout;
  std::optional<double> tick;
  std::optional<double> time_scale;
};

class Session {
 public:
  Session(std::string id, Scenario scenario, const ServiceConfig& config)
      : id_(std::move(id)), scenario_(std::move(scenario)), config_(config) {}

  ~Session() {
    {
      std::lock_guard lock(mutex_);
      stop_ = true;
    }
    cv_.notify_all();
    if (job_.joinable()) job_.join();
    if (sim_thread_.joinable()) sim_thread_.join();
  }

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const std::string& id() const { return id_; }
  const Scenario& scenario() const { return scenario_; }

  Phase phase() const {
    std::lock_guard lock(mutex_);
    return phase_;
  }

  JobStatus job_status() const {
    std::lock_guard lock(mutex_);
    return job_status_;
  }

  /// First-search plan on the global prior. Returns once the job is queued
  /// (or finished when `wait` is set).
  void request_plan(const MMASParams& params, bool wait) {
    {
      std::unique_lock lock(mutex_);
      require_no_job();
      if (phase_ != Phase::created && phase_ != Phase::planned)
        fail(ErrorCode::protocol, "plan is not allowed in phase " + std::string(to_string(phase_)));
      start_job(lock, BeliefState::global(scenario_.prior), {}, params, phase_, Phase::planned);
    }
    if (wait) wait_for_job();
  }

  /// Second-search plan with sub-priors built from the rectangles. An empty
  /// list plans on the global prior, like request_plan.
  void submit_areas_and_replan(const std::vector<PreferredArea>& areas, const MMASParams& params, bool wait) {
    {
      std::unique_lock lock(mutex_);
      require_no_job();
      if (phase_ != Phase::planned && phase_ != Phase::replanned && phase_ != Phase::areas_submitted)
        fail(ErrorCode::protocol, "areas:replan is not allowed in phase " + std::string(to_string(phase_)));
      const int m_count = static_cast<int>(scenario_.profiles.size());
      for (const auto& a : areas) {
        validate(a, scenario_.prior.geometry);
        if (a.owner < 0 || a.owner >= m_count)
          fail(ErrorCode::validation, "area owner " + std::to_string(a.owner) + " is not an agent id");
      }
      BeliefState belief = areas.empty()
                               ? BeliefState::global(scenario_.prior)
                               : BeliefState::per_agent(split_sub_priors(scenario_.prior, areas, scenario_.profiles.size()));
      validate(params);
      const Phase before = phase_;
      phase_ = Phase::areas_submitted;
      push_event(lock, "phase", {{"phase", to_string(phase_)}});
      start_job(lock, std::move(belief), areas, params, before, Phase::replanned);
    }
    if (wait) wait_for_job();
  }

  /// Blocks until no optimizer job is running.
  void wait_for_job() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return job_status_ != JobStatus::running || stop_; });
  }

  void start(const RunOptions& options) {
    std::unique_lock lock(mutex_);
    require_no_job();
    if (phase_ != Phase::planned && phase_ != Phase::replanned)
      fail(ErrorCode::protocol, "start is not allowed in phase " + std::string(to_string(phase_)));
    SimOptions sim;
    sim.tick = options.tick.value_or(config_.default_tick);
    sim.timeout = options.timeout.value_or(config_.default_timeout);
    sim.speeds = options.speeds;
    sim_ = std::make_unique<SearchSimulation>(scenario_, current_->result.best.paths, scenario_.target_cell, sim);
    const double scale = options.time_scale.value_or(config_.time_scale);
    if (!(scale >= 0.0)) fail(ErrorCode::validation, "time_scale must be nonnegative");
    phase_ = Phase::running;
    push_event(lock, "phase", {{"phase", to_string(phase_)}});
    if (sim_thread_.joinable()) sim_thread_.join();
    sim_tick_ = sim.tick;
    sim_thread_ = std::thread([this, scale] { run_simulation(scale); });
  }

  /// The "object found" button: ends the run with a human report.
  void report_found(std::optional<int> agent) {
    std::unique_lock lock(mutex_);
    if (phase_ != Phase::running) fail(ErrorCode::protocol, "found is only accepted while running");
    sim_->halt();
    nlohmann::json data = {{"time", sim_->time()}};
    if (agent) data["agent"] = *agent;
    finish(lock, "human_found_reported", data, std::nullopt);
  }

  /// External position report for an agent (e.g. the human marked by hand).
  void update_position(int agent, Vec2 p) {
    std::lock_guard lock(mutex_);
    if (phase_ != Phase::running) fail(ErrorCode::protocol, "positions are only accepted while running");
    sim_->set_position(agent, p);
  }

  nlohmann::json plan_json() const {
    std::lock_guard lock(mutex_);
    return plan_json_locked();
  }

  nlohmann::json status_json() const {
    std::lock_guard lock(mutex_);
    nlohmann::json j = {{"id", id_},
                        {"phase", to_string(phase_)},
                        {"job", to_string(job_status_)},
                        {"agents", scenario_.profiles.size()},
                        {"events", events_.size()}};
    if (job_error_) j["error"] = *job_error_;
    return j;
  }

  /// Job status plus the current plan, if any.
  nlohmann::json job_json() const {
    std::lock_guard lock(mutex_);
    nlohmann::json j = {{"status", to_string(job_status_)}, {"phase", to_string(phase_)}};
    if (job_error_) j["error"] = *job_error_;
    if (job_error_code_) j["code"] = to_string(*job_error_code_);
    if (current_) j["plan"] = plan_json_locked();
    return j;
  }

  nlohmann::json result_json() const {
    std::lock_guard lock(mutex_);
    if (phase_ != Phase::finished) fail(ErrorCode::protocol, "no result before the run has finished");
    return *result_;
  }

  nlohmann::json snapshot_json() const {
    std::lock_guard lock(mutex_);
    nlohmann::json j = {{"id", id_}, {"phase", to_string(phase_)}, {"scenario", io::to_json(scenario_.spec)}};
    if (current_) j["plan"] = plan_json_locked();
    nlohmann::json ev = nlohmann::json::array();
    for (const auto& e : events_) ev.push_back({{"seq", e.seq}, {"type", e.type}, {"data", e.data}});
    j["events"] = ev;
    if (result_) j["result"] = *result_;
    return j;
  }

  /// Events with seq >= from; waits up to `timeout` for one to arrive.
  std::vector<Event> events_since(std::size_t from, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mutex_);
    cv_.wait_for(lock, timeout, [&] { return events_.size() > from || stop_; });
    if (from >= events_.size()) return {};
    return {events_.begin() + static_cast<std::ptrdiff_t>(from), events_.end()};
  }

  bool terminal_sent() const {
    std::lock_guard lock(mutex_);
    return phase_ == Phase::finished;
  }

 private:
  void require_no_job() const {
    if (job_status_ == JobStatus::running) fail(ErrorCode::protocol, "an optimizer job is already running");
  }

  void push_event(std::unique_lock<std::mutex>&, std::string type, nlohmann::json data) {
    events_.push_back({events_.size(), std::move(type), std::move(data)});
    cv_.notify_all();
  }

  nlohmann::json plan_json_locked() const {
    if (!current_) return nullptr;
    const auto& r = current_->result;
    nlohmann::json areas = nlohmann::json::array();
    for (const auto& a : current_->areas) areas.push_back(io::to_json(a));
    return {{"agents", io::plan_to_json(r.best.paths, scenario_.graph)},
            {"est", r.best.est},
            {"et", current_->et},
            {"residual", r.best.residual},
            {"complete", r.best.complete},
            {"path_distances", r.best.path_distances},
            {"percent_considered_areas", current_->percent_considered_areas},
            {"areas", areas},
            {"seconds", r.seconds}};
  }

  void start_job(std::unique_lock<std::mutex>& lock, BeliefState belief, std::vector<PreferredArea> areas,
                 const MMASParams& params, Phase on_failure, Phase on_success) {
    validate(params);
    PlanningProblem problem = scenario_problem(scenario_, std::move(belief));
    job_status_ = JobStatus::running;
    job_error_.reset();
    job_error_code_.reset();
    push_event(lock, "job", {{"status", "running"}});
    if (job_.joinable()) {
      lock.unlock();
      job_.join();
      lock.lock();
    }
    job_ = std::thread([this, problem = std::move(problem), areas = std::move(areas), params, on_failure,
                        on_success]() mutable {
      run_job(std::move(problem), std::move(areas), params, on_failure, on_success);
    });
  }

  void run_job(PlanningProblem problem, std::vector<PreferredArea> areas, MMASParams params, Phase on_failure,
               Phase on_success) {
    std::optional<PlanRecord> record;
    std::optional<std::string> error;
    ErrorCode code = ErrorCode::optimizer;
    try {
      PlanRecord r;
      r.result = optimize(problem, params);
      if (!r.result.best.complete)
        fail(ErrorCode::optimizer, "plan leaves " + std::to_string(r.result.best.residual) +
                                       " probability unswept (target " + std::to_string(params.residual_target) +
                                       "); increase max_steps or check that the prior is reachable");
      r.et = merged_expected_time(scenario_, r.result.best.paths);
      r.percent_considered_areas = percent_considered_areas(r.result.best.paths, scenario_.graph, areas);
      r.areas = std::move(areas);
      record = std::move(r);
    } catch (const Error& e) {
      error = e.what();
      code = e.code();
    } catch (const std::exception& e) {
      error = e.what();
    }
    std::unique_lock lock(mutex_);
    if (record) {
      current_ = std::move(record);
      phase_ = on_success;
      job_status_ = JobStatus::done;
      push_event(lock, "plan", plan_json_locked());
      push_event(lock, "phase", {{"phase", to_string(phase_)}});
    } else {
      phase_ = on_failure;
      job_status_ = JobStatus::failed;
      job_error_ = error;
      job_error_code_ = code;
      push_event(lock, "job", {{"status", "failed"}, {"error", *error}, {"code", to_string(code)}});
    }
  }

  void run_simulation(double scale) {
    std::vector<CellIndex> swept;
    double next_state = 0.0;
    while (true) {
      SimTick tick;
      {
        std::unique_lock lock(mutex_);
        if (stop_ || phase_ != Phase::running || sim_->finished()) return;
        tick = sim_->step();
        swept.insert(swept.end(), tick.newly_swept.begin(), tick.newly_swept.end());
        const bool done = sim_->finished();
        if (tick.time + 1e-9 >= next_state || done) {
          nlohmann::json positions = nlohmann::json::array();
          for (const auto& p : tick.positions) positions.push_back(io::detail::point(p));
          std::sort(swept.begin(), swept.end());
          push_event(lock, "state",
                     {{"time", tick.time}, {"positions", positions}, {"swept", swept}, {"cumulative", tick.cumulative}});
          swept.clear();
          next_state = tick.time + config_.state_interval;
        }
        if (done) {
          const auto who = sim_->found_by();
          if (who) {
            const bool human = scenario_.profiles[static_cast<std::size_t>(*who)].human;
            finish(lock, human ? "human_found_reported" : "robot_found", {{"agent", *who}, {"time", tick.time}}, who);
          } else {
            finish(lock, "not_found", {{"time", sim_->result().real_search_time}}, std::nullopt);
          }
          return;
        }
      }
      if (scale > 0.0) {
        std::unique_lock lock(mutex_);
        cv_.wait_for(lock, std::chrono::duration<double>(sim_tick_ * scale),
                     [&] { return stop_ || phase_ != Phase::running; });
      }
    }
  }

  void finish(std::unique_lock<std::mutex>& lock, const std::string& type, nlohmann::json data,
              std::optional<int> found_by) {
    SimResult r = sim_->result();
    if (type == "human_found_reported") r.real_search_time = sim_->time();
    r.planned_est = current_->result.best.est;
    r.computation_time = current_->result.seconds;
    r.percent_considered_areas = current_->percent_considered_areas;
    nlohmann::json j = io::to_json(r);
    j["outcome"] = type;
    j["found_by"] = found_by ? nlohmann::json(*found_by) : nlohmann::json(nullptr);
    if (data.contains("agent") && !found_by) j["reported_by"] = data["agent"];
    result_ = j;
    phase_ = Phase::finished;
    push_event(lock, "phase", {{"phase", to_string(phase_)}});
    push_event(lock, type, std::move(data));
  }

  std::string id_;
  Scenario scenario_;
  ServiceConfig config_;

  mutable std::mutex mutex_;
  mutable std::condition_variable cv_;
  Phase phase_ = Phase::created;
  JobStatus job_status_ = JobStatus::idle;
  std::optional<std::string> job_error_;
  std::optional<ErrorCode> job_error_code_;
  std::optional<PlanRecord> current_;
  std::unique_ptr<SearchSimulation> sim_;
  double sim_tick_ = 0.1;
  std::optional<nlohmann::json> result_;
  std::vector<Event> events_;
  bool stop_ = false;
  std::thread job_;
  std::thread sim_thread_;
};

class SessionManager {
 public:
  explicit SessionManager(ServiceConfig config = {}) : config_(std::move(config)), rng_(std::random_device{}()) {}

  const ServiceConfig& config() const { return config_; }

  std::shared_ptr<Session> create(const ScenarioSpec& spec) {
    Scenario scenario = generate_scenario(spec);
    // fail early on agents that cannot plan at all
    (void)scenario_problem(scenario, BeliefState::global(scenario.prior));
    std::lock_guard lock(mutex_);
    std::string id;
    do {
      char buf[17];
      std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng_()));
      id = buf;
    } while (sessions_.contains(id));
    auto session = std::make_shared<Session>(id, std::move(scenario), config_);
    sessions_.emplace(id, session);
    return session;
  }

  std::shared_ptr<Session> get(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) fail(ErrorCode::not_found, "no session " + id);
    return it->second;
  }

  bool erase(const std::string& id) {
    std::shared_ptr<Session> victim;
    {
      std::lock_guard lock(mutex_);
      const auto it = sessions_.find(id);
      if (it == sessions_.end()) return false;
      victim = std::move(it->second);
      sessions_.erase(it);
    }
    return true;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return sessions_.size();
  }

 private:
  ServiceConfig config_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mt19937_64 rng_;
};

}  // namespace spmts
