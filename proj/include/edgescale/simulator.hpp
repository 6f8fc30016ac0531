#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "edgescale/rng.hpp"
#include "edgescale/scenario.hpp"

namespace edgescale::sim {

struct UserState {
  std::string address;
  UserClass user_class = UserClass::kStationary;
  Position position;
  Position waypoint;
  std::optional<std::string> association;  // ap_id
  std::uint64_t spawn_seq = 0;              // larger = added later
};

/// Validated scenario plus lookup tables shared by the simulator and every
/// snapshot taken from it.
class Topology {
 public:
  explicit Topology(ScenarioConfig config);

  const ScenarioConfig& config() const noexcept { return config_; }
  std::optional<std::size_t> zone_index(std::string_view zone_id) const;
  /// Index of the zone owning ap_id.
  std::size_t zone_of_access_point(const std::string& ap_id) const;

 private:
  ScenarioConfig config_;
  std::unordered_map<std::string, std::size_t> zone_index_;
  std::unordered_map<std::string, std::size_t> ap_zone_;
};

/// Immutable view of the simulator between two ticks.
struct Snapshot {
  std::shared_ptr<const Topology> topology;
  std::uint64_t tick_index = 0;
  double sim_time_s = 0.0;
  std::vector<UserState> users;
  std::vector<int> zone_counts;  // declaration order
  int unassociated = 0;

  const ScenarioConfig& config() const noexcept { return topology->config(); }
};

/// Nearest access point whose coverage contains position; ties go to the
/// lexicographically smallest ap_id.
std::optional<std::string> associate(const Position& position,
                                     std::span<const AccessPoint> access_points);

/// Throws Error(kNotFound) for an undeclared zone.
int zone_user_count(const Snapshot& snapshot, std::string_view zone_id);

/// Random-waypoint mobility over the scenario plane. Single writer: only the
/// owning agent calls the mutating members.
class Simulator {
 public:
  /// Validates config, places users from the seeded generator, clock at 0.
  explicit Simulator(ScenarioConfig config);

  /// Hand-built state: users are taken as given (associations recomputed,
  /// positions clamped), user_counts is overwritten to match them.
  static Simulator from_users(ScenarioConfig config, std::vector<UserState> users);

  void tick();

  std::uint64_t tick_index() const noexcept { return tick_index_; }
  double sim_time_s() const noexcept;
  const ScenarioConfig& config() const noexcept { return topology_->config(); }
  const std::vector<UserState>& users() const noexcept { return users_; }
  int total_users() const noexcept { return static_cast<int>(users_.size()); }
  int count_of(UserClass user_class) const noexcept;

  int zone_user_count(std::string_view zone_id) const;
  std::shared_ptr<const Snapshot> snapshot() const;

  /// Spawns at a seeded-random covered position. Returns the new address.
  std::string add_user(UserClass user_class);
  /// Throws Error(kNotFound) when the address is unknown.
  void remove_user(std::string_view address);
  /// Adds or removes (most recently added first) users of one class.
  void set_user_count(UserClass user_class, int count);
  /// Replaces the scenario; the clock keeps running from its current time.
  void load(ScenarioConfig config);

 private:
  struct FromUsersTag {};
  Simulator(FromUsersTag, ScenarioConfig config, std::vector<UserState> users);

  void place_initial_users();
  Position random_position();
  Position clamp(Position p) const noexcept;
  void associate_all();
  void require_capacity(int extra) const;

  std::shared_ptr<const Topology> topology_;
  Xoshiro256StarStar rng_;
  std::vector<UserState> users_;
  std::uint64_t tick_index_ = 0;
  std::uint64_t epoch_tick_ = 0;  // tick_index_ at the last scenario load
  double epoch_time_s_ = 0.0;     // sim time at the last scenario load
  std::uint64_t next_address_ = 1;
  std::uint64_t next_spawn_seq_ = 0;
};

}  // namespace edgescale::sim
