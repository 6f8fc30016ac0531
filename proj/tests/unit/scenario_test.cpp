#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "edgescale/error.hpp"
#include "edgescale/rng.hpp"
#include "edgescale/scenario.hpp"

using namespace edgescale;
using namespace edgescale::sim;

namespace {

std::string validation_message(const ScenarioConfig& config) {
  try {
    validate(config);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kValidation);
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("default scenario is the 2x2 macro layout with 4+4+4 users") {
  const auto config = default_scenario();
  CHECK_NOTHROW(validate(config));
  CHECK(config.name == "4g-5g-wifi-macro");
  CHECK(config.total_users() == 12);
  CHECK(config.max_users == 12);
  REQUIRE(config.zones.size() == 4);
  CHECK(config.zones[2].zone_id == "zone3");
  CHECK(config.find_access_point("ap3")->position == Position{250.0, 750.0});
  CHECK(config.speeds[UserClass::kLowVelocity] == 1.5);
  CHECK(config.speeds[UserClass::kHighVelocity] == 15.0);
  CHECK(config.tick_s == 1.0);
}

TEST_CASE("validation names the first violated invariant") {
  SUBCASE("13 users over a cap of 12") {
    auto c = default_scenario();
    c.user_counts[UserClass::kHighVelocity] = 5;
    CHECK(validation_message(c).find("exceeds max_users") != std::string::npos);
  }
  SUBCASE("duplicate ap_id") {
    auto c = default_scenario();
    c.access_points[1].ap_id = "ap1";
    CHECK(validation_message(c).find("duplicate ap_id 'ap1'") != std::string::npos);
  }
  SUBCASE("dangling zone_id") {
    auto c = default_scenario();
    c.access_points[0].zone_id = "zone9";
    CHECK(validation_message(c).find("undeclared zone 'zone9'") != std::string::npos);
  }
  SUBCASE("access point listed twice") {
    auto c = default_scenario();
    c.zones[1].ap_ids.push_back("ap1");
    CHECK(!validation_message(c).empty());
  }
  SUBCASE("access point not listed") {
    auto c = default_scenario();
    c.zones[3].ap_ids.clear();
    CHECK(validation_message(c).find("not listed") != std::string::npos);
  }
  SUBCASE("no zones") {
    auto c = default_scenario();
    c.zones.clear();
    c.access_points.clear();
    CHECK(validation_message(c).find("no zones") != std::string::npos);
  }
  SUBCASE("speed ordering") {
    auto c = default_scenario();
    c.speeds[UserClass::kHighVelocity] = 1.0;
    CHECK(validation_message(c).find("high_velocity") != std::string::npos);
    c = default_scenario();
    c.speeds[UserClass::kStationary] = 0.1;
    CHECK(validation_message(c).find("stationary") != std::string::npos);
  }
  SUBCASE("non-positive tick") {
    auto c = default_scenario();
    c.tick_s = 0;
    CHECK(validation_message(c).find("tick_s") != std::string::npos);
  }
}

TEST_CASE("zones without access points are allowed") {
  auto c = default_scenario();
  c.access_points.clear();
  for (auto& z : c.zones) z.ap_ids.clear();
  CHECK_NOTHROW(validate(c));
}

TEST_CASE("json round trip preserves randomly generated scenarios") {
  Xoshiro256StarStar rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    ScenarioConfig c;
    c.name = "s" + std::to_string(trial);
    c.map_width_m = rng.uniform(10, 5000);
    c.map_height_m = rng.uniform(10, 5000);
    const int zones = 1 + static_cast<int>(rng.next() % 5);
    for (int z = 0; z < zones; ++z) {
      Zone zone{"z" + std::to_string(z), {}};
      const int aps = static_cast<int>(rng.next() % 3);
      for (int a = 0; a < aps; ++a) {
        const auto id = "z" + std::to_string(z) + "a" + std::to_string(a);
        zone.ap_ids.push_back(id);
        c.access_points.push_back(AccessPoint{id, zone.zone_id,
                                              {rng.uniform(0, c.map_width_m),
                                               rng.uniform(0, c.map_height_m)},
                                              rng.uniform(1, 900),
                                              static_cast<Tech>(rng.next() % 3)});
      }
      c.zones.push_back(zone);
    }
    for (auto uc : kUserClasses) c.user_counts[uc] = static_cast<int>(rng.next() % 5);
    c.max_users = 15;
    c.speeds[UserClass::kLowVelocity] = rng.uniform(0.1, 5);
    c.speeds[UserClass::kHighVelocity] = rng.uniform(6, 40);
    c.seed = rng.next();
    c.tick_s = rng.uniform(0.1, 3);
    REQUIRE_NOTHROW(validate(c));

    ScenarioConfig back;
    from_json(nlohmann::json::parse(nlohmann::json(c).dump()), back);
    CHECK(nlohmann::json(back) == nlohmann::json(c));
  }
}

TEST_CASE("scenario files fill missing keys from the default scenario") {
  const auto path = std::filesystem::temp_directory_path() / "edgescale_partial_scenario.json";
  {
    std::ofstream out(path);
    out << R"({"seed": 77, "user_counts": {"high_velocity": 0}})";
  }
  const auto c = load_scenario_file(path.string());
  CHECK(c.seed == 77);
  CHECK(c.total_users() == 8);
  CHECK(c.zones.size() == 4);

  {
    std::ofstream out(path);
    out << R"({"user_counts": {"flying": 1}})";
  }
  CHECK_THROWS_AS(load_scenario_file(path.string()), Error);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_scenario_file(path.string()), Error);
}

TEST_CASE("shipped scenario file matches the built-in default") {
  const auto c =
      load_scenario_file(std::string(EDGESCALE_SOURCE_DIR) + "/configs/scenarios/4g-5g-wifi-macro.json");
  CHECK(nlohmann::json(c) == nlohmann::json(default_scenario()));
}
