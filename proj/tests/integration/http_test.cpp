#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>

#include "edgescale/http.hpp"
#include "edgescale/simulator.hpp"
#include "oracles.hpp"
#include "schema.hpp"

using namespace edgescale;
using nlohmann::json;
using testing::load_schema;
using testing::validate_schema;

namespace {

/// One server on an ephemeral port, listening on a background thread.
class Served {
 public:
  Served() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    REQUIRE(port_ > 0);
  }
  void start() {
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~Served() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }
  httplib::Server& server() { return server_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  httplib::Client client() const { return httplib::Client(url()); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

void check_schema(const std::string& body, const std::string& schema) {
  const auto errors = validate_schema(json::parse(body), load_schema(schema));
  CAPTURE(body);
  CAPTURE(schema);
  CHECK(errors.empty());
  for (const auto& e : errors) MESSAGE(e);
}

void check_problem(const httplib::Result& res, int status) {
  REQUIRE(res);
  CHECK(res->status == status);
  CHECK(res->get_header_value("Content-Type") == "application/problem+json");
  check_schema(res->body, "problem.json");
  CHECK(json::parse(res->body)["status"] == status);
}

/// Applies queued steering commands until stopped, like the tick agent does.
class Drainer {
 public:
  Drainer(location::LocationService& service, sim::Simulator& simulator)
      : thread_([&service, &simulator, this] {
          while (!stop_) {
            service.drain(simulator);
            std::this_thread::sleep_for(std::chrono::milliseconds(2));
          }
        }) {}
  ~Drainer() {
    stop_ = true;
    thread_.join();
  }

 private:
  std::atomic<bool> stop_{false};
  std::thread thread_;
};

}  // namespace

TEST_CASE("location API before the first snapshot answers 503") {
  location::LocationService service;
  Served s;
  http::mount_location_api(s.server(), service);
  s.start();
  check_problem(s.client().Get("/location/v2/queries/zones"), 503);
}

TEST_CASE("location API responses") {
  sim::Simulator simulator(sim::default_scenario());
  location::LocationService service;
  service.publish(simulator.snapshot());
  Served s;
  http::mount_location_api(s.server(), service, std::chrono::seconds(5));
  http::enable_cors(s.server());
  s.start();
  auto c = s.client();

  SUBCASE("zone list") {
    auto res = c.Get("/location/v2/queries/zones");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->get_header_value("Access-Control-Allow-Origin") == "*");
    check_schema(res->body, "zone_list.json");
    const auto body = json::parse(res->body);
    CHECK(body["zoneList"].size() == 4);
    int total = 0;
    for (const auto& z : body["zoneList"]) total += z["numberOfUsers"].get<int>();
    CHECK(total == 12);
  }
  SUBCASE("single zone and unknown zone") {
    auto res = c.Get("/location/v2/queries/zones/zone3");
    REQUIRE(res);
    CHECK(res->status == 200);
    check_schema(res->body, "zone_info.json");
    CHECK(json::parse(res->body)["numberOfUsers"] == sim::zone_user_count(*simulator.snapshot(), "zone3"));
    check_problem(c.Get("/location/v2/queries/zones/zone9"), 404);
  }
  SUBCASE("users with and without filter") {
    auto all = c.Get("/location/v2/queries/users");
    REQUIRE(all);
    check_schema(all->body, "user_list.json");
    CHECK(json::parse(all->body)["userList"].size() == 12);
    auto z = c.Get("/location/v2/queries/users?zoneId=zone3");
    REQUIRE(z);
    for (const auto& u : json::parse(z->body)["userList"]) CHECK(u["zoneId"] == "zone3");
    check_problem(c.Get("/location/v2/queries/users?zoneId=zone9"), 404);
    check_problem(c.Get("/location/v2/queries/users?zoneId="), 400);
  }
  SUBCASE("sandbox state") {
    auto res = c.Get("/sandbox/v1/state");
    REQUIRE(res);
    check_schema(res->body, "sandbox_state.json");
    CHECK(json::parse(res->body)["totalUsers"] == 12);
  }
  SUBCASE("steering") {
    Drainer drainer(service, simulator);
    auto res = c.Post("/sandbox/v1/steer", R"({"type":"SetUserCount","class":"high_velocity","count":0})",
                      "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    check_schema(res->body, "steer_response.json");
    CHECK(json::parse(res->body)["totalUsers"] == 8);

    check_problem(c.Post("/sandbox/v1/steer", R"({"type":"SetUserCount","class":"high_velocity","count":5})",
                         "application/json"),
                  409);
    check_problem(c.Post("/sandbox/v1/steer", R"({"type":"RemoveUser","address":"ue-999"})", "application/json"), 404);
    check_problem(c.Post("/sandbox/v1/steer", R"({"type":"teleport"})", "application/json"), 400);
    check_problem(c.Post("/sandbox/v1/steer", "{not json", "application/json"), 400);
    check_problem(c.Post("/sandbox/v1/steer", R"({"type":"LoadScenario","name":"nowhere"})", "application/json"), 404);

    auto add = c.Post("/sandbox/v1/steer", R"({"type":"AddUser","class":"stationary"})", "application/json");
    REQUIRE(add);
    CHECK(json::parse(add->body)["totalUsers"] == 9);
  }
  SUBCASE("CORS preflight") {
    auto res = c.Options("/sandbox/v1/steer");
    REQUIRE(res);
    CHECK(res->status == 204);
    CHECK(res->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);
  }
}

TEST_CASE("steering times out without a tick agent") {
  sim::Simulator simulator(sim::default_scenario());
  location::LocationService service;
  service.publish(simulator.snapshot());
  Served s;
  http::mount_location_api(s.server(), service, std::chrono::milliseconds(50));
  s.start();
  check_problem(s.client().Post("/sandbox/v1/steer", R"({"type":"AddUser","class":"stationary"})",
                                "application/json"),
                503);
}

TEST_CASE("orchestrator API") {
  orch::Orchestrator o;
  o.create({});
  Served s;
  http::mount_orchestrator_api(s.server(), o);
  s.start();
  auto c = s.client();
  const std::string path = "/apis/apps/v1/namespaces/default/deployments/vod/scale";

  auto get = c.Get(path);
  REQUIRE(get);
  CHECK(get->status == 200);
  check_schema(get->body, "scale.json");
  CHECK(json::parse(get->body) == json::parse(R"({"spec":{"replicas":1},"status":{"replicas":1}})"));

  auto put = c.Put(path, R"({"spec":{"replicas":3},"reason":"manual"})", "application/json");
  REQUIRE(put);
  CHECK(put->status == 200);
  check_schema(put->body, "scale_put_response.json");
  const auto body = json::parse(put->body);
  CHECK(body["spec"]["replicas"] == 3);
  CHECK(body["status"]["replicas"] == 1);
  CHECK(body["event"]["to_replicas"] == 3);
  check_schema(body["event"].dump(), "scale_event.json");

  auto same = c.Put(path, R"({"spec":{"replicas":3}})", "application/json");
  REQUIRE(same);
  CHECK(json::parse(same->body)["event"].is_null());
  check_schema(same->body, "scale_put_response.json");

  check_problem(c.Put(path, R"({"spec":{"replicas":11}})", "application/json"), 422);
  check_problem(c.Put(path, R"({"spec":{"replicas":"2"}})", "application/json"), 400);
  check_problem(c.Put(path, "nope", "application/json"), 400);
  check_problem(c.Get("/apis/apps/v1/namespaces/default/deployments/ghost/scale"), 404);

  o.advance_to(10);
  c.Put(path, R"({"spec":{"replicas":2}})", "application/json");
  auto events = c.Get("/events");
  REQUIRE(events);
  check_schema(events->body, "event_list.json");
  CHECK(json::parse(events->body)["events"].size() == 2);
  auto since = c.Get("/events?since=0");
  CHECK(json::parse(since->body)["events"].size() == 1);
  check_problem(c.Get("/events?since=abc"), 400);
}

TEST_CASE("HTTP adapters drive the decision engine end to end") {
  sim::Simulator simulator(sim::default_scenario());
  location::LocationService service;
  service.publish(simulator.snapshot());
  orch::Orchestrator o;
  o.create({.readiness_latency_s = 0});
  Served loc, orc, de_server;
  http::mount_location_api(loc.server(), service);
  http::mount_orchestrator_api(orc.server(), o);
  loc.start();
  orc.start();

  http::HttpOccupancySource source(loc.url());
  http::HttpScaleClient client(orc.url());
  CHECK(source.zone_user_count("zone3") == sim::zone_user_count(*simulator.snapshot(), "zone3"));
  CHECK_THROWS_AS(source.zone_user_count("zone9"), Error);

  const de::DeploymentRef target;
  CHECK(client.get_scale(target) == orch::ScaleStatus{1, 1});
  auto event = client.set_scale(target, 2, "avg=4 gamma=3");
  REQUIRE(event.has_value());
  CHECK(event->reason == "avg=4 gamma=3");
  CHECK_FALSE(client.set_scale(target, 2, "again").has_value());
  try {
    client.set_scale(target, 50, "x");
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kOutOfBounds);
  }
  try {
    client.get_scale({"default", "ghost"});
    FAIL("expected not found");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNotFound);
  }

  de::DEConfig cfg;
  cfg.max_replicas = 10;
  de::DecisionEngine engine(cfg, source, client);
  http::mount_decision_engine_api(de_server.server(), engine);
  de_server.start();
  engine.control_step(0);

  auto c = de_server.client();
  auto metrics = c.Get("/metrics");
  REQUIRE(metrics);
  CHECK(metrics->get_header_value("Content-Type") == de::kMetricsContentType);
  CHECK(testing::check_exposition(metrics->body).empty());
  CHECK(metrics->body.find("de_zone_users{zone=\"zone3\"}") != std::string::npos);

  auto cfg_res = c.Get("/config");
  REQUIRE(cfg_res);
  check_schema(cfg_res->body, "de_config.json");
  auto patched = c.Patch("/config", R"({"gamma":2})", "application/json");
  REQUIRE(patched);
  CHECK(patched->status == 200);
  CHECK(json::parse(patched->body)["gamma"] == 2.0);
  check_problem(c.Patch("/config", R"({"gamma":0})", "application/json"), 400);
  check_problem(c.Patch("/config", R"({"bogus":1})", "application/json"), 400);
}

TEST_CASE("unreachable upstreams surface as errors") {
  http::HttpOccupancySource source("http://127.0.0.1:1");
  try {
    source.zone_user_count("zone3");
    FAIL("expected transport failure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kUnreachable);
  }
  http::HttpScaleClient client("http://127.0.0.1:1");
  CHECK_THROWS_AS(client.get_scale({}), Error);
  CHECK_THROWS_AS(http::HttpScaleClient("ftp://127.0.0.1"), Error);
  CHECK(http::status_for(ErrorKind::kUnreachable) == 502);
  CHECK(http::status_for(ErrorKind::kIo) == 500);
}
