#include "edgescale/location_api.hpp"

#include "edgescale/error.hpp"

namespace edgescale::location {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorKind::kValidation, what);
}

sim::UserClass class_field(const json& j) {
  auto it = j.find("class");
  if (it == j.end() || !it->is_string()) invalid("steer command needs a string 'class'");
  auto c = sim::parse_user_class(it->get<std::string>());
  if (!c) invalid("unknown user class '" + it->get<std::string>() + "'");
  return *c;
}

std::string string_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    invalid(std::string("steer command needs a string '") + key + "'");
  }
  return it->get<std::string>();
}

json position_json(const sim::Position& p) { return json{{"x_m", p.x_m}, {"y_m", p.y_m}}; }

}  // namespace

void to_json(json& j, const UserInfo& u) {
  j = json{{"address", u.address},
           {"accessPointId", u.accessPointId},
           {"zoneId", u.zoneId},
           {"timestamp", u.timestamp}};
}

void to_json(json& j, const ZoneInfo& z) {
  j = json{{"zoneId", z.zoneId},
           {"numberOfAccessPoints", z.numberOfAccessPoints},
           {"numberOfUsers", z.numberOfUsers}};
}

std::vector<ZoneInfo> get_zones(const sim::Snapshot& snapshot) {
  std::vector<ZoneInfo> out;
  const auto& zones = snapshot.config().zones;
  out.reserve(zones.size());
  for (std::size_t i = 0; i < zones.size(); ++i) {
    out.push_back(ZoneInfo{zones[i].zone_id, static_cast<int>(zones[i].ap_ids.size()),
                           snapshot.zone_counts[i]});
  }
  return out;
}

ZoneInfo get_zone(const sim::Snapshot& snapshot, std::string_view zone_id) {
  auto idx = snapshot.topology->zone_index(zone_id);
  if (!idx) throw Error(ErrorKind::kNotFound, "unknown zone '" + std::string(zone_id) + "'");
  const auto& zone = snapshot.config().zones[*idx];
  return ZoneInfo{zone.zone_id, static_cast<int>(zone.ap_ids.size()),
                  snapshot.zone_counts[*idx]};
}

std::vector<UserInfo> get_users(const sim::Snapshot& snapshot,
                                const std::optional<std::string>& zone_filter) {
  std::optional<std::size_t> wanted;
  if (zone_filter) {
    wanted = snapshot.topology->zone_index(*zone_filter);
    if (!wanted) throw Error(ErrorKind::kNotFound, "unknown zone '" + *zone_filter + "'");
  }
  const auto& zones = snapshot.config().zones;
  std::vector<UserInfo> out;
  for (const auto& u : snapshot.users) {
    if (!u.association) continue;
    const auto zone = snapshot.topology->zone_of_access_point(*u.association);
    if (wanted && zone != *wanted) continue;
    out.push_back(UserInfo{u.address, *u.association, zones[zone].zone_id, snapshot.sim_time_s});
  }
  return out;
}

json state_to_json(const sim::Snapshot& snapshot) {
  const auto& zones = snapshot.config().zones;
  json users = json::array();
  for (const auto& u : snapshot.users) {
    json entry{{"address", u.address},
               {"class", sim::to_string(u.user_class)},
               {"position", position_json(u.position)},
               {"waypoint", position_json(u.waypoint)},
               {"accessPointId", nullptr},
               {"zoneId", nullptr}};
    if (u.association) {
      entry["accessPointId"] = *u.association;
      entry["zoneId"] = zones[snapshot.topology->zone_of_access_point(*u.association)].zone_id;
    }
    users.push_back(std::move(entry));
  }
  json zone_counts = json::array();
  for (const auto& z : get_zones(snapshot)) zone_counts.push_back(z);
  return json{{"tickIndex", snapshot.tick_index},
              {"simTimeS", snapshot.sim_time_s},
              {"totalUsers", snapshot.users.size()},
              {"unassociatedUsers", snapshot.unassociated},
              {"scenario", snapshot.config()},
              {"zoneList", zone_counts},
              {"users", users}};
}

SteerCommand parse_steer_command(const json& j) {
  if (!j.is_object()) invalid("steer command must be an object");
  const auto type = string_field(j, "type");
  if (type == "AddUser") return AddUser{class_field(j)};
  if (type == "RemoveUser") return RemoveUser{string_field(j, "address")};
  if (type == "SetUserCount") {
    auto it = j.find("count");
    if (it == j.end() || !it->is_number_integer()) invalid("SetUserCount needs an integer 'count'");
    const auto count = it->get<long long>();
    if (count < 0) invalid("SetUserCount count must be non-negative");
    return SetUserCount{class_field(j), static_cast<int>(count)};
  }
  if (type == "LoadScenario") return LoadScenario{string_field(j, "name")};
  invalid("unknown steer command type '" + type + "'");
}

json steer_command_to_json(const SteerCommand& command) {
  return std::visit(
      [](const auto& c) -> json {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, AddUser>) {
          return {{"type", "AddUser"}, {"class", sim::to_string(c.user_class)}};
        } else if constexpr (std::is_same_v<T, RemoveUser>) {
          return {{"type", "RemoveUser"}, {"address", c.address}};
        } else if constexpr (std::is_same_v<T, SetUserCount>) {
          return {{"type", "SetUserCount"},
                  {"class", sim::to_string(c.user_class)},
                  {"count", c.count}};
        } else {
          return {{"type", "LoadScenario"}, {"name", c.name}};
        }
      },
      command);
}

int apply_steer(sim::Simulator& simulator, const SteerCommand& command,
                const ScenarioRegistry& scenarios) {
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, AddUser>) {
          simulator.add_user(c.user_class);
        } else if constexpr (std::is_same_v<T, RemoveUser>) {
          simulator.remove_user(c.address);
        } else if constexpr (std::is_same_v<T, SetUserCount>) {
          simulator.set_user_count(c.user_class, c.count);
        } else {
          auto it = scenarios.find(c.name);
          if (it == scenarios.end()) {
            throw Error(ErrorKind::kNotFound, "unknown scenario '" + c.name + "'");
          }
          simulator.load(it->second);
        }
      },
      command);
  return simulator.total_users();
}

LocationService::LocationService(ScenarioRegistry scenarios) : scenarios_(std::move(scenarios)) {
  auto fallback = sim::default_scenario();
  scenarios_.try_emplace(fallback.name, fallback);
}

void LocationService::publish(std::shared_ptr<const sim::Snapshot> snapshot) {
  std::lock_guard lock(snapshot_mutex_);
  snapshot_ = std::move(snapshot);
}

std::shared_ptr<const sim::Snapshot> LocationService::current() const {
  std::lock_guard lock(snapshot_mutex_);
  if (!snapshot_) throw Error(ErrorKind::kUnavailable, "no snapshot published yet");
  return snapshot_;
}

std::future<int> LocationService::submit(SteerCommand command) {
  std::lock_guard lock(queue_mutex_);
  queue_.push_back(Pending{std::move(command), {}});
  return queue_.back().done.get_future();
}

std::size_t LocationService::drain(sim::Simulator& simulator) {
  std::vector<Pending> batch;
  {
    std::lock_guard lock(queue_mutex_);
    batch.swap(queue_);
  }
  std::vector<std::variant<int, std::exception_ptr>> results;
  results.reserve(batch.size());
  for (auto& p : batch) {
    try {
      results.emplace_back(apply_steer(simulator, p.command, scenarios_));
    } catch (...) {
      results.emplace_back(std::current_exception());
    }
  }
  if (!batch.empty()) publish(simulator.snapshot());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (const int* total = std::get_if<int>(&results[i])) {
      batch[i].done.set_value(*total);
    } else {
      batch[i].done.set_exception(std::get<std::exception_ptr>(results[i]));
    }
  }
  return batch.size();
}

}  // namespace edgescale::location
