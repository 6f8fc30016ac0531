#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "edgescale/error.hpp"
#include "edgescale/orchestrator.hpp"
#include "edgescale/rng.hpp"

using namespace edgescale;
using namespace edgescale::orch;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::kIo;
}

}  // namespace

TEST_CASE("fresh VoD deployment reports (1, 1)") {
  Orchestrator o;
  o.create({});
  CHECK(o.get_scale("default", "vod") == ScaleStatus{1, 1});
  CHECK(kind_of([&] { o.get_scale("default", "nope"); }) == ErrorKind::kNotFound);
  CHECK(kind_of([&] { o.get_scale("other", "vod"); }) == ErrorKind::kNotFound);
  CHECK(kind_of([&] { o.create({}); }) == ErrorKind::kValidation);
}

TEST_CASE("upscale is delayed by the readiness latency, downscale is immediate") {
  Orchestrator o;
  o.create({.readiness_latency_s = 5.0});
  o.advance_to(10.0);
  auto up = o.set_scale("default", "vod", 2, "avg=4 gamma=3");
  REQUIRE(up);
  CHECK(up->from_replicas == 1);
  CHECK(up->to_replicas == 2);
  CHECK(up->timestamp == 10.0);
  CHECK(o.get_scale("default", "vod") == ScaleStatus{2, 1});
  o.advance_to(14.0);
  CHECK(o.get_scale("default", "vod") == ScaleStatus{2, 1});
  o.advance_to(15.0);
  CHECK(o.get_scale("default", "vod") == ScaleStatus{2, 2});

  auto down = o.set_scale("default", "vod", 1, "avg=2 gamma=3");
  REQUIRE(down);
  CHECK(down->from_replicas == 2);
  CHECK(down->to_replicas == 1);
  CHECK(o.get_scale("default", "vod") == ScaleStatus{1, 1});
}

TEST_CASE("zero latency makes upscales ready at once") {
  Orchestrator o;
  o.create({.readiness_latency_s = 0.0});
  o.set_scale("default", "vod", 3, "");
  CHECK(o.get_scale("default", "vod") == ScaleStatus{3, 3});
}

TEST_CASE("setting the current value is a no-op") {
  Orchestrator o;
  o.create({});
  REQUIRE(o.set_scale("default", "vod", 2, "up"));
  CHECK_FALSE(o.set_scale("default", "vod", 2, "again").has_value());
  CHECK(o.list_events().size() == 1);
}

TEST_CASE("out-of-bounds requests name the violated bound") {
  Orchestrator o;
  o.create({.min_replicas = 1, .max_replicas = 3});
  try {
    o.set_scale("default", "vod", 4, "");
    FAIL("expected out-of-bounds");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kOutOfBounds);
    CHECK(std::string(e.what()).find("max_replicas") != std::string::npos);
  }
  try {
    o.set_scale("default", "vod", 0, "");
    FAIL("expected out-of-bounds");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("min_replicas") != std::string::npos);
  }
  CHECK(kind_of([&] { o.set_scale("default", "ghost", 2, ""); }) == ErrorKind::kNotFound);
  CHECK(o.list_events().empty());
}

TEST_CASE("list_events filters strictly after since") {
  Orchestrator o;
  o.create({});
  CHECK(o.list_events().empty());
  o.advance_to(5.0);
  o.set_scale("default", "vod", 2, "a");
  o.advance_to(10.0);
  o.set_scale("default", "vod", 1, "b");
  const auto all = o.list_events();
  REQUIRE(all.size() == 2);
  CHECK(all[0].timestamp < all[1].timestamp);
  const auto after_first = o.list_events(all[0].timestamp);
  REQUIRE(after_first.size() == 1);
  CHECK(after_first[0].reason == "b");
  CHECK(o.list_events(10.0).empty());
  CHECK(o.list_events(-1.0).size() == 2);
}

TEST_CASE("the clock never runs backwards") {
  Orchestrator o;
  o.advance_to(10.0);
  o.advance_to(3.0);
  CHECK(o.now() == 10.0);
}

TEST_CASE("random scale sequences: ordered log, replay, readiness invariant") {
  Xoshiro256StarStar rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    Orchestrator o;
    const DeploymentSpec spec{.initial_replicas = 2, .min_replicas = 1, .max_replicas = 6,
                              .readiness_latency_s = static_cast<double>(rng.next() % 8)};
    o.create(spec);
    double t = 0.0;
    for (int step = 0; step < 200; ++step) {
      t += static_cast<double>(rng.next() % 3);
      o.advance_to(t);
      if (rng.next() % 2 == 0) {
        o.set_scale("default", "vod", 1 + static_cast<int>(rng.next() % 6), "r");
      }
      const auto s = o.get_scale("default", "vod");
      REQUIRE(s.ready <= s.desired);
      const auto d = o.deployment("default", "vod");
      if (t >= d.last_change_s + d.readiness_latency_s) REQUIRE(s.ready == s.desired);
    }
    const auto events = o.list_events();
    for (std::size_t i = 1; i < events.size(); ++i) {
      REQUIRE(events[i - 1].timestamp <= events[i].timestamp);
      REQUIRE(events[i].from_replicas == events[i - 1].to_replicas);
    }
    for (const auto& e : events) REQUIRE(e.from_replicas != e.to_replicas);
    CHECK(replay_desired(spec.initial_replicas, events, "vod") ==
          o.get_scale("default", "vod").desired);
  }
}

TEST_CASE("event log file holds one parseable line per event") {
  const auto path = std::filesystem::temp_directory_path() / "edgescale_orch_events.jsonl";
  std::filesystem::remove(path);
  {
    Orchestrator o(path);
    o.create({});
    o.advance_to(5.0);
    o.set_scale("default", "vod", 2, "avg=3.5 gamma=3");
    o.set_scale("default", "vod", 2, "noop");
    o.advance_to(20.0);
    o.set_scale("default", "vod", 1, "avg=1 gamma=3");
    const auto from_file = read_event_log(path);
    CHECK(from_file == o.list_events());
  }
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  CHECK(first ==
        R"({"deployment":"vod","from_replicas":1,"reason":"avg=3.5 gamma=3","timestamp":5.0,"to_replicas":2})");

  std::ofstream(path, std::ios::app) << "{\"timestamp\": 1\n";
  CHECK(kind_of([&] { read_event_log(path); }) == ErrorKind::kValidation);
  std::filesystem::remove(path);
}
