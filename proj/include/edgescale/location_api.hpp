#pragma once

#include <chrono>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "edgescale/scenario.hpp"
#include "edgescale/simulator.hpp"

namespace edgescale::location {

struct UserInfo {
  std::string address;
  std::string accessPointId;
  std::string zoneId;
  double timestamp = 0.0;  // sim_time_s of the snapshot

  friend bool operator==(const UserInfo&, const UserInfo&) = default;
};

struct ZoneInfo {
  std::string zoneId;
  int numberOfAccessPoints = 0;
  int numberOfUsers = 0;

  friend bool operator==(const ZoneInfo&, const ZoneInfo&) = default;
};

void to_json(nlohmann::json& j, const UserInfo& u);
void to_json(nlohmann::json& j, const ZoneInfo& z);

/// One entry per declared zone, declaration order.
std::vector<ZoneInfo> get_zones(const sim::Snapshot& snapshot);
/// Throws Error(kNotFound) for an undeclared zone.
ZoneInfo get_zone(const sim::Snapshot& snapshot, std::string_view zone_id);
/// Associated users only, optionally restricted to one zone.
std::vector<UserInfo> get_users(const sim::Snapshot& snapshot,
                                const std::optional<std::string>& zone_filter);

/// Dashboard view: everything in the snapshot, positions included.
nlohmann::json state_to_json(const sim::Snapshot& snapshot);

struct AddUser {
  sim::UserClass user_class;
};
struct RemoveUser {
  std::string address;
};
struct SetUserCount {
  sim::UserClass user_class;
  int count = 0;
};
struct LoadScenario {
  std::string name;
};
using SteerCommand = std::variant<AddUser, RemoveUser, SetUserCount, LoadScenario>;

/// Wire form: {"type": "AddUser"|"RemoveUser"|"SetUserCount"|"LoadScenario", ...}.
/// Throws Error(kValidation) on malformed bodies.
SteerCommand parse_steer_command(const nlohmann::json& j);
nlohmann::json steer_command_to_json(const SteerCommand& command);

using ScenarioRegistry = std::map<std::string, sim::ScenarioConfig, std::less<>>;

/// Applies one command to the simulator, all-or-nothing. Returns the new
/// total user count.
int apply_steer(sim::Simulator& simulator, const SteerCommand& command,
                const ScenarioRegistry& scenarios);

/// Shared between the tick agent and HTTP handlers: the published snapshot
/// and the queue of pending steering commands.
class LocationService {
 public:
  explicit LocationService(ScenarioRegistry scenarios = {});

  void publish(std::shared_ptr<const sim::Snapshot> snapshot);
  /// Throws Error(kUnavailable) before the first publish.
  std::shared_ptr<const sim::Snapshot> current() const;

  /// Queues a command; the future resolves to the new total or rethrows the
  /// apply error once the tick agent drains the queue.
  std::future<int> submit(SteerCommand command);
  /// Called by the tick agent between ticks. Publishes the resulting
  /// snapshot before resolving any future. Returns how many were applied.
  std::size_t drain(sim::Simulator& simulator);

  const ScenarioRegistry& scenarios() const noexcept { return scenarios_; }

 private:
  struct Pending {
    SteerCommand command;
    std::promise<int> done;
  };

  ScenarioRegistry scenarios_;
  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const sim::Snapshot> snapshot_;
  std::mutex queue_mutex_;
  std::vector<Pending> queue_;
};

}  // namespace edgescale::location
