#include "edgescale/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

#include "edgescale/error.hpp"

namespace edgescale::sim {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorKind::kValidation, what);
}

template <typename T>
void read_optional(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) {
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      invalid(std::string("field '") + key + "': " + e.what());
    }
  }
}

constexpr std::array<const char*, 3> kClassKeys = {"stationary", "low_velocity",
                                                   "high_velocity"};

void read_per_class(const json& j, const char* key, auto& table) {
  auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_object()) invalid(std::string("field '") + key + "' must be an object");
  for (const auto& [name, value] : it->items()) {
    auto c = parse_user_class(name);
    if (!c) invalid(std::string("field '") + key + "': unknown user class '" + name + "'");
    try {
      value.get_to(table[*c]);
    } catch (const json::exception& e) {
      invalid(std::string("field '") + key + "." + name + "': " + e.what());
    }
  }
}

}  // namespace

double distance(const Position& a, const Position& b) noexcept {
  return std::hypot(a.x_m - b.x_m, a.y_m - b.y_m);
}

std::string_view to_string(Tech tech) noexcept {
  switch (tech) {
    case Tech::k4g: return "4g";
    case Tech::k5g: return "5g";
    case Tech::kWifi: return "wifi";
  }
  return "5g";
}

std::optional<Tech> parse_tech(std::string_view text) noexcept {
  if (text == "4g") return Tech::k4g;
  if (text == "5g") return Tech::k5g;
  if (text == "wifi") return Tech::kWifi;
  return std::nullopt;
}

std::string_view to_string(UserClass user_class) noexcept {
  return kClassKeys[static_cast<std::size_t>(user_class)];
}

std::optional<UserClass> parse_user_class(std::string_view text) noexcept {
  for (auto c : kUserClasses) {
    if (text == to_string(c)) return c;
  }
  return std::nullopt;
}

int ScenarioConfig::total_users() const noexcept {
  int total = 0;
  for (int n : user_counts.values) total += n;
  return total;
}

const AccessPoint* ScenarioConfig::find_access_point(std::string_view ap_id) const noexcept {
  for (const auto& ap : access_points) {
    if (ap.ap_id == ap_id) return &ap;
  }
  return nullptr;
}

const Zone* ScenarioConfig::find_zone(std::string_view zone_id) const noexcept {
  for (const auto& zone : zones) {
    if (zone.zone_id == zone_id) return &zone;
  }
  return nullptr;
}

void validate(const ScenarioConfig& config) {
  if (!(config.map_width_m > 0.0) || !(config.map_height_m > 0.0)) {
    invalid("map dimensions must be positive");
  }
  if (!(config.tick_s > 0.0)) invalid("tick_s must be positive");
  if (config.zones.empty()) invalid("scenario declares no zones");

  std::set<std::string, std::less<>> zone_ids;
  for (const auto& zone : config.zones) {
    if (zone.zone_id.empty()) invalid("empty zone_id");
    if (!zone_ids.insert(zone.zone_id).second) invalid("duplicate zone_id '" + zone.zone_id + "'");
  }

  std::unordered_map<std::string, std::string> ap_zone;
  for (const auto& ap : config.access_points) {
    if (ap.ap_id.empty()) invalid("empty ap_id");
    if (!ap_zone.emplace(ap.ap_id, ap.zone_id).second) {
      invalid("duplicate ap_id '" + ap.ap_id + "'");
    }
    if (!zone_ids.contains(ap.zone_id)) {
      invalid("access point '" + ap.ap_id + "' references undeclared zone '" + ap.zone_id + "'");
    }
    if (!(ap.radius_m > 0.0)) invalid("access point '" + ap.ap_id + "' radius must be positive");
    if (ap.position.x_m < 0.0 || ap.position.x_m > config.map_width_m ||
        ap.position.y_m < 0.0 || ap.position.y_m > config.map_height_m) {
      invalid("access point '" + ap.ap_id + "' lies outside the map");
    }
  }

  std::set<std::string, std::less<>> listed;
  for (const auto& zone : config.zones) {
    for (const auto& ap_id : zone.ap_ids) {
      auto it = ap_zone.find(ap_id);
      if (it == ap_zone.end()) {
        invalid("zone '" + zone.zone_id + "' lists unknown ap_id '" + ap_id + "'");
      }
      if (!listed.insert(ap_id).second) invalid("ap_id '" + ap_id + "' listed in more than one zone");
      if (it->second != zone.zone_id) {
        invalid("ap_id '" + ap_id + "' listed in zone '" + zone.zone_id + "' but declares zone '" +
                it->second + "'");
      }
    }
  }
  if (listed.size() != ap_zone.size()) invalid("some access points are not listed in any zone");

  for (auto c : kUserClasses) {
    if (config.user_counts[c] < 0) {
      invalid("negative user count for class " + std::string(to_string(c)));
    }
  }
  if (config.max_users < 0) invalid("max_users must be non-negative");
  if (config.total_users() > config.max_users) {
    invalid("user count " + std::to_string(config.total_users()) + " exceeds max_users " +
            std::to_string(config.max_users));
  }

  const auto& v = config.speeds;
  if (v[UserClass::kStationary] != 0.0) invalid("stationary speed must be 0");
  if (!(v[UserClass::kLowVelocity] > 0.0)) invalid("low_velocity speed must be positive");
  if (!(v[UserClass::kHighVelocity] > v[UserClass::kLowVelocity])) {
    invalid("high_velocity speed must exceed low_velocity speed");
  }
}

ScenarioConfig default_scenario() {
  ScenarioConfig config;
  const double w = config.map_width_m;
  const double h = config.map_height_m;
  struct Cell {
    double x, y;
    Tech tech;
  };
  const std::array<Cell, 4> cells = {{{0.25 * w, 0.25 * h, Tech::k4g},
                                      {0.75 * w, 0.25 * h, Tech::k5g},
                                      {0.25 * w, 0.75 * h, Tech::kWifi},
                                      {0.75 * w, 0.75 * h, Tech::k5g}}};
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto n = std::to_string(i + 1);
    config.zones.push_back(Zone{"zone" + n, {"ap" + n}});
    config.access_points.push_back(
        AccessPoint{"ap" + n, "zone" + n, {cells[i].x, cells[i].y}, 400.0, cells[i].tech});
  }
  config.user_counts = PerClass<int>{{4, 4, 4}};
  return config;
}

void to_json(json& j, const Position& p) { j = json{{"x_m", p.x_m}, {"y_m", p.y_m}}; }

void from_json(const json& j, Position& p) {
  j.at("x_m").get_to(p.x_m);
  j.at("y_m").get_to(p.y_m);
}

void to_json(json& j, const ScenarioConfig& config) {
  json zones = json::array();
  for (const auto& zone : config.zones) {
    zones.push_back({{"zone_id", zone.zone_id}, {"ap_ids", zone.ap_ids}});
  }
  json aps = json::array();
  for (const auto& ap : config.access_points) {
    aps.push_back({{"ap_id", ap.ap_id},
                   {"zone_id", ap.zone_id},
                   {"position", ap.position},
                   {"radius_m", ap.radius_m},
                   {"tech", to_string(ap.tech)}});
  }
  json counts = json::object();
  json speeds = json::object();
  for (auto c : kUserClasses) {
    counts[std::string(to_string(c))] = config.user_counts[c];
    speeds[std::string(to_string(c))] = config.speeds[c];
  }
  j = json{{"name", config.name},
           {"map_width_m", config.map_width_m},
           {"map_height_m", config.map_height_m},
           {"zones", zones},
           {"access_points", aps},
           {"user_counts", counts},
           {"speeds", speeds},
           {"seed", config.seed},
           {"tick_s", config.tick_s},
           {"max_users", config.max_users}};
}

void from_json(const json& j, ScenarioConfig& config) {
  if (!j.is_object()) invalid("scenario must be an object");
  read_optional(j, "name", config.name);
  read_optional(j, "map_width_m", config.map_width_m);
  read_optional(j, "map_height_m", config.map_height_m);
  read_optional(j, "seed", config.seed);
  read_optional(j, "tick_s", config.tick_s);
  read_optional(j, "max_users", config.max_users);
  read_per_class(j, "user_counts", config.user_counts);
  read_per_class(j, "speeds", config.speeds);

  try {
    if (auto it = j.find("zones"); it != j.end()) {
      config.zones.clear();
      for (const auto& z : *it) {
        config.zones.push_back(
            Zone{z.at("zone_id").get<std::string>(),
                 z.value("ap_ids", std::vector<std::string>{})});
      }
    }
    if (auto it = j.find("access_points"); it != j.end()) {
      config.access_points.clear();
      for (const auto& a : *it) {
        AccessPoint ap;
        a.at("ap_id").get_to(ap.ap_id);
        a.at("zone_id").get_to(ap.zone_id);
        a.at("position").get_to(ap.position);
        a.at("radius_m").get_to(ap.radius_m);
        const auto tech = a.value("tech", std::string("5g"));
        auto parsed = parse_tech(tech);
        if (!parsed) invalid("access point '" + ap.ap_id + "': unknown tech '" + tech + "'");
        ap.tech = *parsed;
        config.access_points.push_back(std::move(ap));
      }
    }
  } catch (const json::exception& e) {
    invalid(std::string("malformed zones/access_points: ") + e.what());
  }
}

ScenarioConfig load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open scenario file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    invalid("scenario file '" + path + "': " + e.what());
  }
  ScenarioConfig config = default_scenario();
  from_json(j, config);
  validate(config);
  return config;
}

}  // namespace edgescale::sim
