#include <gtest/gtest.h>

#include <thread>

#include "spmts/http_service.hpp"
#include "support.hpp"

using namespace spmts;
using namespace spmts::test;
using nlohmann::json;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::validation;
}

json scenario_doc() {
  return {{"name", "svc"},
          {"seed", 4},
          {"map", {{"generator", "open"}, {"width_m", 14}, {"height_m", 14}, {"resolution", 0.5}}},
          {"prior", {{"kind", "uniform"}}},
          {"agents",
           {{{"id", 0}, {"start", {1.75, 1.75}}, {"speed", 1.0}},
            {{"id", 1}, {"start", {12.25, 12.25}}, {"speed", 1.0}, {"human", true}}}},
          {"target", {{"cell", {20, 3}}}}};
}

MMASParams small_params() {
  MMASParams p;
  p.n_iterations = 4;
  p.n_ants = 4;
  p.threads = 1;
  return p;
}

ServiceConfig fast_config() {
  ServiceConfig c;
  c.default_params = small_params();
  c.time_scale = 0.0;
  c.default_timeout = 120.0;
  c.default_tick = 0.25;
  return c;
}

/// Collects events until a terminal one or the deadline.
std::vector<Event> drain(Session& s, std::chrono::seconds limit = std::chrono::seconds(30)) {
  std::vector<Event> out;
  const auto deadline = std::chrono::steady_clock::now() + limit;
  while (std::chrono::steady_clock::now() < deadline) {
    for (auto& e : s.events_since(out.size(), std::chrono::milliseconds(200))) {
      out.push_back(e);
      if (is_terminal(e.type)) return out;
    }
  }
  return out;
}

const std::vector<PreferredArea> kSplitAreas = {{0, 0, 7, 14, 0}, {7, 0, 14, 14, 1}};

}  // namespace

TEST(Session, HappyPathThroughBothSearches) {
  SessionManager manager(fast_config());
  auto s = manager.create(io::parse_scenario(scenario_doc()));
  EXPECT_EQ(s->phase(), Phase::created);
  s->request_plan(small_params(), true);
  EXPECT_EQ(s->phase(), Phase::planned);
  const json first = s->plan_json();
  EXPECT_TRUE(first["complete"].get<bool>());
  EXPECT_NEAR(first["est"].get<double>(), first["et"].get<double>(), 1e-9);  // global map

  s->submit_areas_and_replan(kSplitAreas, small_params(), true);
  EXPECT_EQ(s->phase(), Phase::replanned);
  const json second = s->plan_json();
  EXPECT_EQ(second["areas"].size(), 2u);
  EXPECT_GT(second["percent_considered_areas"].get<double>(), 0.0);

  s->start({});
  const auto events = drain(*s);
  ASSERT_FALSE(events.empty());
  EXPECT_TRUE(is_terminal(events.back().type));
  EXPECT_EQ(s->phase(), Phase::finished);
  const json result = s->result_json();
  EXPECT_EQ(result["outcome"], events.back().type);
  EXPECT_NEAR(result["planned_est"].get<double>(), second["est"].get<double>(), 1e-12);

  std::vector<std::string> phases;
  for (const auto& e : events)
    if (e.type == "phase") phases.push_back(e.data["phase"]);
  EXPECT_EQ(phases, (std::vector<std::string>{"planned", "areas_submitted", "replanned", "running", "finished"}));
  for (std::size_t k = 0; k < events.size(); ++k) EXPECT_EQ(events[k].seq, k);
}

TEST(Session, ProtocolErrors) {
  SessionManager manager(fast_config());
  auto s = manager.create(io::parse_scenario(scenario_doc()));
  EXPECT_EQ(code_of([&] { s->start({}); }), ErrorCode::protocol);
  EXPECT_EQ(code_of([&] { s->submit_areas_and_replan(kSplitAreas, small_params(), true); }), ErrorCode::protocol);
  EXPECT_EQ(code_of([&] { s->report_found(0); }), ErrorCode::protocol);
  EXPECT_EQ(code_of([&] { s->update_position(0, {1, 1}); }), ErrorCode::protocol);
  EXPECT_EQ(code_of([&] { s->result_json(); }), ErrorCode::protocol);
  EXPECT_EQ(code_of([&] { manager.get("feedbeef"); }), ErrorCode::not_found);

  s->request_plan(small_params(), true);
  // agent 0's rectangle swallows agent 1's, so agent 1 is left with nothing
  const std::vector<PreferredArea> shadowed = {{0, 0, 14, 14, 0}, {3, 3, 5, 5, 1}};
  EXPECT_EQ(code_of([&] { s->submit_areas_and_replan(shadowed, small_params(), true); }), ErrorCode::empty_sub_prior);
  EXPECT_EQ(s->phase(), Phase::planned);
  EXPECT_EQ(code_of([&] { s->submit_areas_and_replan({{0, 0, 3, 3, 5}}, small_params(), true); }), ErrorCode::validation);
}

TEST(Session, EmptyAreasReplanOnGlobalPrior) {
  SessionManager manager(fast_config());
  auto s = manager.create(io::parse_scenario(scenario_doc()));
  s->request_plan(small_params(), true);
  const json first = s->plan_json();
  s->submit_areas_and_replan({}, small_params(), true);
  const json second = s->plan_json();
  EXPECT_EQ(second["agents"], first["agents"]);  // same params, same prior
  EXPECT_EQ(second["percent_considered_areas"], 0.0);
}

TEST(Session, OwnedRectangleDrawsThatAgentIn) {
  json doc = scenario_doc();
  doc["map"] = {{"generator", "blocks"}, {"width_m", 40}, {"height_m", 40}, {"resolution", 0.5}};
  doc["prior"] = {{"kind", "gaussian"},
                  {"components", {{{"center", {10, 30}}, {"sigma", 4}}, {{"center", {30, 10}}, {"sigma", 4}}}}};
  doc["agents"][0]["start"] = {4, 20};
  doc["agents"][1]["start"] = {36, 20};
  doc["target"] = "sampled";
  SessionManager manager(fast_config());
  auto s = manager.create(io::parse_scenario(doc));
  MMASParams p = small_params();
  p.n_iterations = 20;
  s->request_plan(p, true);
  const std::vector<PreferredArea> rect = {{24, 4, 36, 16, 0}};  // the blob near agent 1
  auto inside_for_agent0 = [&] {
    const json plan = s->plan_json();
    Polyline line;
    for (const auto& q : plan["agents"][0]["positions"]) line.push_back({q[0].get<double>(), q[1].get<double>()});
    return length_inside(line, rect);
  };
  const double before = inside_for_agent0();
  s->submit_areas_and_replan(rect, p, true);
  EXPECT_GT(inside_for_agent0(), before);
  EXPECT_GT(s->plan_json()["percent_considered_areas"].get<double>(), 0.0);
}

TEST(Session, HumanReportEndsRun) {
  ServiceConfig config = fast_config();
  config.time_scale = 50.0;  // slow enough to still be running when we report
  SessionManager manager(config);
  auto s = manager.create(io::parse_scenario(scenario_doc()));
  s->request_plan(small_params(), true);
  s->start({});
  s->update_position(1, {5.0, 5.0});
  s->report_found(1);
  EXPECT_EQ(s->phase(), Phase::finished);
  const json r = s->result_json();
  EXPECT_EQ(r["outcome"], "human_found_reported");
  EXPECT_TRUE(r["found_by"].is_null());
  EXPECT_EQ(r["reported_by"], 1);
  EXPECT_EQ(code_of([&] { s->report_found(0); }), ErrorCode::protocol);
}

TEST(Session, PropertyPhaseMachineMatchesModel) {
  enum Cmd { plan, replan, start, found, position, result };
  Rng rng(12);
  ServiceConfig config = fast_config();
  config.time_scale = 1000.0;  // runs stay in the running phase until reported
  SessionManager manager(config);
  for (int trial = 0; trial < 12; ++trial) {
    auto s = manager.create(io::parse_scenario(scenario_doc()));
    Phase model = Phase::created;
    for (int step = 0; step < 8; ++step) {
      const Cmd cmd = static_cast<Cmd>(uniform_int(rng, 0, 5));
      bool allowed = false;
      Phase next = model;
      switch (cmd) {
        case plan: allowed = model == Phase::created || model == Phase::planned; next = Phase::planned; break;
        case replan: allowed = model == Phase::planned || model == Phase::replanned; next = Phase::replanned; break;
        case start: allowed = model == Phase::planned || model == Phase::replanned; next = Phase::running; break;
        case found: allowed = model == Phase::running; next = Phase::finished; break;
        case position: allowed = model == Phase::running; break;
        case result: allowed = model == Phase::finished; break;
      }
      bool threw = false;
      try {
        switch (cmd) {
          case plan: s->request_plan(small_params(), true); break;
          case replan: s->submit_areas_and_replan(kSplitAreas, small_params(), true); break;
          case start: s->start({}); break;
          case found: s->report_found(std::nullopt); break;
          case position: s->update_position(0, {2.0, 2.0}); break;
          case result: s->result_json(); break;
        }
      } catch (const Error& e) {
        threw = true;
        EXPECT_EQ(e.code(), ErrorCode::protocol);
      }
      EXPECT_EQ(threw, !allowed) << "trial " << trial << " step " << step << " cmd " << cmd;
      if (allowed) model = next;
      EXPECT_EQ(s->phase(), model);
    }
    manager.erase(s->id());
  }
}

// ---------------------------------------------------------------------------
// HTTP

class HttpFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    manager_ = std::make_unique<SessionManager>(fast_config());
    HttpConfig hc;
    hc.cors_origins = {"http://console.local"};
    http_ = std::make_unique<HttpService>(*manager_, hc);
    port_ = http_->bind_any();
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { http_->listen_after_bind(); });
    http_->wait_until_ready();
  }
  void TearDown() override {
    http_->stop();
    if (thread_.joinable()) thread_.join();
  }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(60, 0);
    return c;
  }

  std::string create_session() {
    auto c = client();
    const auto res = c.Post("/sessions", scenario_doc().dump(), "application/json");
    EXPECT_TRUE(res);
    EXPECT_EQ(res->status, 201);
    return json::parse(res->body)["id"];
  }

  static json post(httplib::Client& c, const std::string& path, const json& body, int expect) {
    const auto res = c.Post(path, body.dump(), "application/json");
    EXPECT_TRUE(res) << path;
    if (!res) return {};
    EXPECT_EQ(res->status, expect) << path << ": " << res->body;
    return res->body.empty() ? json() : json::parse(res->body);
  }

  std::unique_ptr<SessionManager> manager_;
  std::unique_ptr<HttpService> http_;
  std::thread thread_;
  int port_ = 0;
};

TEST_F(HttpFixture, FullProtocolWithEventStream) {
  const std::string id = create_session();
  const std::string base = "/sessions/" + id;
  auto c = client();
  const json small = io::to_json(small_params());

  const auto map1 = c.Get(base + "/map");
  const auto map2 = c.Get(base + "/map");
  ASSERT_TRUE(map1 && map2);
  EXPECT_EQ(map1->status, 200);
  EXPECT_EQ(map1->body, map2->body);
  EXPECT_TRUE(json::parse(map1->body).contains("graph"));

  post(c, base + "/start", json::object(), 409);
  const json planned = post(c, base + "/plan", {{"wait", true}, {"params", small}}, 200);
  EXPECT_EQ(planned["status"], "done");
  EXPECT_EQ(planned["phase"], "planned");

  json areas = json::array();
  for (const auto& a : kSplitAreas) areas.push_back(io::to_json(a));
  const json replanned = post(c, base + "/areas:replan", {{"wait", true}, {"areas", areas}, {"params", small}}, 200);
  EXPECT_EQ(replanned["phase"], "replanned");
  EXPECT_EQ(replanned["plan"]["areas"].size(), 2u);

  const json bad = post(c, base + "/areas:replan",
                        {{"wait", true}, {"areas", {{{"x_min", 0}, {"y_min", 0}, {"x_max", 14}, {"y_max", 14}, {"owner", 0}},
                                                    {{"x_min", 3}, {"y_min", 3}, {"x_max", 5}, {"y_max", 5}, {"owner", 1}}}}},
                        422);
  EXPECT_EQ(bad["error"], "empty_sub_prior");
  EXPECT_TRUE(bad.contains("hint"));

  post(c, base + "/start", {{"time_scale", 0}, {"tick", 0.25}}, 200);

  std::string stream;
  auto sc = client();
  const auto res = sc.Get(base + "/events?from=0", [&](const char* data, std::size_t n) {
    stream.append(data, n);
    return true;
  });
  ASSERT_TRUE(res);
  EXPECT_EQ(res->get_header_value("Content-Type"), "text/event-stream");

  std::vector<std::pair<std::string, json>> frames;
  std::size_t pos = 0;
  while ((pos = stream.find("event: ", pos)) != std::string::npos) {
    const std::size_t eol = stream.find('\n', pos);
    const std::string type = stream.substr(pos + 7, eol - pos - 7);
    const std::size_t d = stream.find("data: ", eol);
    const std::size_t dend = stream.find('\n', d);
    frames.emplace_back(type, json::parse(stream.substr(d + 6, dend - d - 6)));
    pos = dend;
  }
  ASSERT_FALSE(frames.empty());
  EXPECT_TRUE(is_terminal(frames.back().first));
  double last = -1.0;
  for (const auto& [type, data] : frames)
    if (type == "state") {
      EXPECT_GE(data["cumulative"].get<double>(), last);
      last = data["cumulative"].get<double>();
    }
  EXPECT_GE(last, 0.0);

  const auto result = c.Get(base + "/result");
  ASSERT_TRUE(result);
  EXPECT_EQ(result->status, 200);
  EXPECT_EQ(json::parse(result->body)["outcome"], frames.back().first);

  post(c, base + "/found", json::object(), 409);
  const auto del = c.Delete(base);
  ASSERT_TRUE(del);
  EXPECT_EQ(del->status, 204);
  const auto gone = c.Get(base);
  ASSERT_TRUE(gone);
  EXPECT_EQ(gone->status, 404);
}

TEST_F(HttpFixture, ErrorsAndCors) {
  auto c = client();
  auto res = c.Get("/sessions/0123456789abcdef");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
  EXPECT_EQ(json::parse(res->body)["error"], "not_found");

  res = c.Post("/sessions", "{not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  json doc = scenario_doc();
  doc["agents"][0].erase("start");
  res = c.Post("/sessions", doc.dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  EXPECT_NE(json::parse(res->body)["message"].get<std::string>().find("agents[0].start"), std::string::npos);

  const std::string id = create_session();
  httplib::Headers origin = {{"Origin", "http://console.local"}};
  res = c.Get("/sessions/" + id, origin);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "http://console.local");
  res = c.Get("/sessions/" + id, {{"Origin", "http://elsewhere"}});
  ASSERT_TRUE(res);
  EXPECT_FALSE(res->has_header("Access-Control-Allow-Origin"));
  res = c.Options("/sessions/" + id + "/plan", origin);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 204);
  EXPECT_NE(res->get_header_value("Access-Control-Allow-Methods").find("POST"), std::string::npos);

  const json queued = post(c, "/sessions/" + id + "/plan", {{"params", io::to_json(small_params())}}, 202);
  EXPECT_TRUE(queued["status"] == "running" || queued["status"] == "done");
  manager_->get(id)->wait_for_job();
  res = c.Get("/sessions/" + id + "/plan");
  ASSERT_TRUE(res);
  EXPECT_EQ(json::parse(res->body)["status"], "done");
  const json snap = post(c, "/sessions/" + id + "/snapshot", json::object(), 200);
  EXPECT_EQ(snap["phase"], "planned");
  EXPECT_GE(snap["events"].size(), 2u);
}
