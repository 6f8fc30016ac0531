#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace edgescale::sim {

struct Position {
  double x_m = 0.0;
  double y_m = 0.0;

  friend bool operator==(const Position&, const Position&) = default;
};

double distance(const Position& a, const Position& b) noexcept;

// Radio technology tag; informational only, never used for association.
enum class Tech { k4g, k5g, kWifi };

std::string_view to_string(Tech tech) noexcept;
std::optional<Tech> parse_tech(std::string_view text) noexcept;

struct AccessPoint {
  std::string ap_id;
  std::string zone_id;
  Position position;
  double radius_m = 0.0;
  Tech tech = Tech::k5g;
};

struct Zone {
  std::string zone_id;
  std::vector<std::string> ap_ids;
};

enum class UserClass { kStationary = 0, kLowVelocity = 1, kHighVelocity = 2 };

inline constexpr std::array<UserClass, 3> kUserClasses = {
    UserClass::kStationary, UserClass::kLowVelocity, UserClass::kHighVelocity};

std::string_view to_string(UserClass user_class) noexcept;
std::optional<UserClass> parse_user_class(std::string_view text) noexcept;

/// One value per user class, indexable by UserClass.
template <typename T>
struct PerClass {
  std::array<T, 3> values{};

  T& operator[](UserClass c) noexcept { return values[static_cast<std::size_t>(c)]; }
  const T& operator[](UserClass c) const noexcept {
    return values[static_cast<std::size_t>(c)];
  }
  friend bool operator==(const PerClass&, const PerClass&) = default;
};

inline constexpr double kDefaultLowVelocityMps = 1.5;
inline constexpr double kDefaultHighVelocityMps = 15.0;
inline constexpr int kDefaultMaxUsers = 12;

struct ScenarioConfig {
  std::string name = "4g-5g-wifi-macro";
  double map_width_m = 1000.0;
  double map_height_m = 1000.0;
  std::vector<Zone> zones;
  std::vector<AccessPoint> access_points;
  PerClass<int> user_counts;
  PerClass<double> speeds{{0.0, kDefaultLowVelocityMps, kDefaultHighVelocityMps}};
  std::uint64_t seed = 3;
  double tick_s = 1.0;
  int max_users = kDefaultMaxUsers;

  int total_users() const noexcept;
  const AccessPoint* find_access_point(std::string_view ap_id) const noexcept;
  const Zone* find_zone(std::string_view zone_id) const noexcept;
};

/// Throws Error(kValidation) naming the first violated invariant.
void validate(const ScenarioConfig& config);

/// 1000 m x 1000 m plane, zones zone1..zone4 in a 2x2 grid (zone1 bottom-left,
/// zone2 bottom-right, zone3 top-left, zone4 top-right), one 400 m AP per zone
/// at the quadrant centre, four users of each class. Every point of the map is
/// covered.
ScenarioConfig default_scenario();

void to_json(nlohmann::json& j, const Position& p);
void from_json(const nlohmann::json& j, Position& p);
void to_json(nlohmann::json& j, const ScenarioConfig& config);
/// Missing keys keep their defaults; wrong types throw Error(kValidation).
void from_json(const nlohmann::json& j, ScenarioConfig& config);

ScenarioConfig load_scenario_file(const std::string& path);

}  // namespace edgescale::sim
