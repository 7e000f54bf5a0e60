#pragma once

// HTTP/JSON transport for the session service, with a server-sent event
// stream for run updates.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "spmts/error.hpp"
#include "spmts/io.hpp"
#include "spmts/service.hpp"

namespace spmts {

struct HttpConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  /// Origins allowed by CORS; "*" allows any.
  std::vector<std::string> cors_origins;
};

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::not_found: return 404;
    case ErrorCode::protocol: return 409;
    case ErrorCode::empty_sub_prior:
    case ErrorCode::optimizer:
    case ErrorCode::dead_end:
    case ErrorCode::invalid_plan: return 422;
    default: return 400;
  }
}

inline std::string sse_frame(const Event& e) {
  return "id: " + std::to_string(e.seq) + "\nevent: " + e.type + "\ndata: " + e.data.dump() + "\n\n";
}

class HttpService {
 public:
  HttpService(SessionManager& sessions, HttpConfig config) : sessions_(sessions), config_(std::move(config)) {
    routes();
  }

  httplib::Server& server() { return server_; }

  bool listen() { return server_.listen(config_.host, config_.port); }

  /// Binds to a free port on the configured host and returns it.
  int bind_any() { return server_.bind_to_any_port(config_.host); }
  bool listen_after_bind() { return server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  void wait_until_ready() { server_.wait_until_ready(); }

 private:
  using Req = httplib::Request;
  using Res = httplib::Response;

  static nlohmann::json body_json(const Req& req) {
    if (req.body.empty()) return nlohmann::json::object();
    try {
      return nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorCode::parse, std::string("request body: ") + e.what());
    }
  }

  static void reply(Res& res, int status, const nlohmann::json& j) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
  }

  static void reply_error(Res& res, ErrorCode code, const std::string& message) {
    nlohmann::json j = {{"error", to_string(code)}, {"message", message}};
    if (code == ErrorCode::empty_sub_prior)
      j["hint"] = "widen the preferred areas so that every agent's rectangles cover some probability mass";
    reply(res, http_status(code), j);
  }

  template <class Fn>
  httplib::Server::Handler guarded(Fn fn) {
    return [fn = std::move(fn)](const Req& req, Res& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        reply_error(res, e.code(), e.what());
      } catch (const nlohmann::json::exception& e) {
        reply_error(res, ErrorCode::parse, e.what());
      } catch (const std::exception& e) {
        reply(res, 500, {{"error", "internal"}, {"message", e.what()}});
      }
    };
  }

  std::shared_ptr<Session> session(const Req& req) { return sessions_.get(req.matches[1]); }

  MMASParams params_from(const nlohmann::json& body) const {
    return io::parse_params(body.value("params", nlohmann::json()), sessions_.config().default_params);
  }

  /// Replies with the finished job, or 202 while it runs.
  static void reply_job(Res& res, Session& s, bool waited) {
    const nlohmann::json job = s.job_json();
    if (!waited) return reply(res, 202, job);
    if (job["status"] == "failed") {
      const std::string code = job.value("code", "optimizer");
      ErrorCode ec = ErrorCode::optimizer;
      if (code == "empty_sub_prior") ec = ErrorCode::empty_sub_prior;
      else if (code == "dead_end") ec = ErrorCode::dead_end;
      return reply_error(res, ec, job.value("error", "optimizer failed"));
    }
    reply(res, 200, job);
  }

  void cors(const Req& req, Res& res) const {
    if (config_.cors_origins.empty() || !req.has_header("Origin")) return;
    const std::string origin = req.get_header_value("Origin");
    const bool any = std::find(config_.cors_origins.begin(), config_.cors_origins.end(), "*") != config_.cors_origins.end();
    if (!any && std::find(config_.cors_origins.begin(), config_.cors_origins.end(), origin) == config_.cors_origins.end())
      return;
    res.set_header("Access-Control-Allow-Origin", any ? "*" : origin);
    res.set_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    if (!any) res.set_header("Vary", "Origin");
  }

  void routes() {
    const std::string id = "/sessions/([0-9a-f]+)";
    server_.set_post_routing_handler([this](const Req& req, Res& res) { cors(req, res); });
    server_.Options(R"(/.*)", [](const Req&, Res& res) { res.status = 204; });

    server_.Post("/sessions", guarded([this](const Req& req, Res& res) {
      const ScenarioSpec spec = io::parse_scenario(body_json(req));
      const auto s = sessions_.create(spec);
      reply(res, 201, s->status_json());
    }));

    server_.Get(id, guarded([this](const Req& req, Res& res) { reply(res, 200, session(req)->status_json()); }));

    server_.Delete(id, guarded([this](const Req& req, Res& res) {
      if (!sessions_.erase(req.matches[1])) fail(ErrorCode::not_found, "no session " + std::string(req.matches[1]));
      res.status = 204;
    }));

    server_.Get(id + "/map", guarded([this](const Req& req, Res& res) {
      const auto s = session(req);
      const Scenario& sc = s->scenario();
      nlohmann::json j = io::to_json(sc.map);
      std::vector<int> occupied(sc.occupancy.occupied.begin(), sc.occupancy.occupied.end());
      j["occupied"] = occupied;
      j["graph"] = io::to_json(sc.graph);
      nlohmann::json agents = nlohmann::json::array();
      for (const auto& a : sc.profiles) agents.push_back(io::to_json(a));
      j["agents"] = agents;
      j["dt"] = sc.dt;
      reply(res, 200, j);
    }));

    server_.Get(id + "/prior", guarded([this](const Req& req, Res& res) {
      reply(res, 200, io::to_json(session(req)->scenario().prior));
    }));

    server_.Post(id + "/plan", guarded([this](const Req& req, Res& res) {
      const auto s = session(req);
      const nlohmann::json body = body_json(req);
      const bool wait = body.value("wait", false);
      s->request_plan(params_from(body), wait);
      reply_job(res, *s, wait);
    }));

    server_.Get(id + "/plan", guarded([this](const Req& req, Res& res) { reply(res, 200, session(req)->job_json()); }));

    server_.Post(id + "/areas:replan", guarded([this](const Req& req, Res& res) {
      const auto s = session(req);
      const nlohmann::json body = body_json(req);
      const bool wait = body.value("wait", false);
      const auto areas = body.contains("areas") ? io::parse_areas(body.at("areas")) : std::vector<PreferredArea>{};
      s->submit_areas_and_replan(areas, params_from(body), wait);
      reply_job(res, *s, wait);
    }));

    server_.Post(id + "/start", guarded([this](const Req& req, Res& res) {
      const auto s = session(req);
      const nlohmann::json body = body_json(req);
      RunOptions opt;
      if (body.contains("speeds")) opt.speeds = body.at("speeds").get<std::vector<double>>();
      if (body.contains("timeout")) opt.timeout = body.at("timeout").get<double>();
      if (body.contains("tick")) opt.tick = body.at("tick").get<double>();
      if (body.contains("time_scale")) opt.time_scale = body.at("time_scale").get<double>();
      s->start(opt);
      reply(res, 200, s->status_json());
    }));

    server_.Post(id + "/found", guarded([this](const Req& req, Res& res) {
      const auto s = session(req);
      const nlohmann::json body = body_json(req);
      std::optional<int> agent;
      if (body.contains("agent") && !body.at("agent").is_null()) agent = body.at("agent").get<int>();
      s->report_found(agent);
      reply(res, 200, s->status_json());
    }));

    server_.Post(id + "/position", guarded([this](const Req& req, Res& res) {
      const auto s = session(req);
      const nlohmann::json body = body_json(req);
      s->update_position(io::detail::get<int>(body, "agent"), io::detail::get_point(body, "position"));
      reply(res, 200, s->status_json());
    }));

    server_.Get(id + "/result", guarded([this](const Req& req, Res& res) { reply(res, 200, session(req)->result_json()); }));

    server_.Post(id + "/snapshot", guarded([this](const Req& req, Res& res) {
      const auto s = session(req);
      nlohmann::json snap = s->snapshot_json();
      const std::string& dir = sessions_.config().snapshot_dir;
      if (!dir.empty()) {
        const auto path = std::filesystem::path(dir) / ("session-" + s->id() + ".json");
        io::write_json_file(path, snap);
        snap["path"] = path.string();
      }
      reply(res, 200, snap);
    }));

    server_.Get(id + "/events", guarded([this](const Req& req, Res& res) {
      const auto s = session(req);
      std::size_t from = 0;
      if (req.has_param("from")) from = std::stoul(req.get_param_value("from"));
      else if (req.has_header("Last-Event-ID")) from = std::stoul(req.get_header_value("Last-Event-ID")) + 1;
      res.set_header("Cache-Control", "no-cache");
      auto next = std::make_shared<std::size_t>(from);
      res.set_chunked_content_provider("text/event-stream", [s, next](std::size_t, httplib::DataSink& sink) {
        const auto events = s->events_since(*next, std::chrono::seconds(1));
        if (!sink.is_writable()) return false;
        if (events.empty()) {
          sink.write(": keep-alive\n\n", 14);
          return true;
        }
        for (const auto& e : events) {
          const std::string frame = sse_frame(e);
          if (!sink.write(frame.data(), frame.size())) return false;
          *next = e.seq + 1;
          if (is_terminal(e.type)) {
            sink.done();
            return true;
          }
        }
        return true;
      });
    }));
  }

  SessionManager& sessions_;
  HttpConfig config_;
  httplib::Server server_;
};

}  // namespace spmts
