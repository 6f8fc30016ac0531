#include "edgescale/simulator.hpp"

#include <algorithm>
#include <cstdio>

#include "edgescale/error.hpp"

namespace edgescale::sim {

namespace {

constexpr int kSpawnAttempts = 1000;

std::string format_address(std::uint64_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ue-%03llu", static_cast<unsigned long long>(n));
  return buf;
}

}  // namespace

Topology::Topology(ScenarioConfig config) : config_(std::move(config)) {
  validate(config_);
  for (std::size_t i = 0; i < config_.zones.size(); ++i) {
    zone_index_.emplace(config_.zones[i].zone_id, i);
  }
  for (const auto& ap : config_.access_points) {
    ap_zone_.emplace(ap.ap_id, zone_index_.at(ap.zone_id));
  }
}

std::optional<std::size_t> Topology::zone_index(std::string_view zone_id) const {
  auto it = zone_index_.find(std::string(zone_id));
  if (it == zone_index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Topology::zone_of_access_point(const std::string& ap_id) const {
  return ap_zone_.at(ap_id);
}

std::optional<std::string> associate(const Position& position,
                                     std::span<const AccessPoint> access_points) {
  const AccessPoint* best = nullptr;
  double best_d = 0.0;
  for (const auto& ap : access_points) {
    const double d = distance(position, ap.position);
    if (d > ap.radius_m) continue;
    if (best == nullptr || d < best_d || (d == best_d && ap.ap_id < best->ap_id)) {
      best = &ap;
      best_d = d;
    }
  }
  if (best == nullptr) return std::nullopt;
  return best->ap_id;
}

int zone_user_count(const Snapshot& snapshot, std::string_view zone_id) {
  auto idx = snapshot.topology->zone_index(zone_id);
  if (!idx) throw Error(ErrorKind::kNotFound, "unknown zone '" + std::string(zone_id) + "'");
  return snapshot.zone_counts[*idx];
}

Simulator::Simulator(ScenarioConfig config)
    : topology_(std::make_shared<const Topology>(std::move(config))),
      rng_(topology_->config().seed) {
  place_initial_users();
}

Simulator::Simulator(FromUsersTag, ScenarioConfig config, std::vector<UserState> users)
    : topology_(nullptr), rng_(config.seed) {
  config.user_counts = {};
  for (const auto& u : users) ++config.user_counts[u.user_class];
  topology_ = std::make_shared<const Topology>(std::move(config));
  users_ = std::move(users);
  for (auto& u : users_) {
    u.position = clamp(u.position);
    u.waypoint = u.user_class == UserClass::kStationary ? u.position : clamp(u.waypoint);
    u.spawn_seq = next_spawn_seq_++;
    ++next_address_;
  }
  associate_all();
}

Simulator Simulator::from_users(ScenarioConfig config, std::vector<UserState> users) {
  return Simulator(FromUsersTag{}, std::move(config), std::move(users));
}

double Simulator::sim_time_s() const noexcept {
  return epoch_time_s_ + static_cast<double>(tick_index_ - epoch_tick_) * config().tick_s;
}

int Simulator::count_of(UserClass user_class) const noexcept {
  return static_cast<int>(std::count_if(users_.begin(), users_.end(), [&](const UserState& u) {
    return u.user_class == user_class;
  }));
}

void Simulator::place_initial_users() {
  // Draw order (part of the determinism contract): users in class order,
  // position x, position y, then waypoint x, y for mobile users.
  for (auto c : kUserClasses) {
    for (int i = 0; i < config().user_counts[c]; ++i) {
      UserState u;
      u.address = format_address(next_address_++);
      u.user_class = c;
      u.position = random_position();
      u.waypoint = c == UserClass::kStationary ? u.position : random_position();
      u.spawn_seq = next_spawn_seq_++;
      users_.push_back(std::move(u));
    }
  }
  associate_all();
}

Position Simulator::random_position() {
  const double x = rng_.uniform(0.0, config().map_width_m);
  const double y = rng_.uniform(0.0, config().map_height_m);
  return {x, y};
}

Position Simulator::clamp(Position p) const noexcept {
  p.x_m = std::clamp(p.x_m, 0.0, config().map_width_m);
  p.y_m = std::clamp(p.y_m, 0.0, config().map_height_m);
  return p;
}

void Simulator::associate_all() {
  for (auto& u : users_) u.association = associate(u.position, config().access_points);
}

void Simulator::tick() {
  const double dt = config().tick_s;
  for (auto& u : users_) {
    if (u.user_class == UserClass::kStationary) continue;
    const double step = config().speeds[u.user_class] * dt;
    const double remaining = distance(u.position, u.waypoint);
    if (remaining <= step) {
      u.position = u.waypoint;
      u.waypoint = random_position();
    } else {
      const double f = step / remaining;
      u.position = clamp({u.position.x_m + (u.waypoint.x_m - u.position.x_m) * f,
                          u.position.y_m + (u.waypoint.y_m - u.position.y_m) * f});
    }
  }
  associate_all();
  ++tick_index_;
}

int Simulator::zone_user_count(std::string_view zone_id) const {
  auto idx = topology_->zone_index(zone_id);
  if (!idx) throw Error(ErrorKind::kNotFound, "unknown zone '" + std::string(zone_id) + "'");
  const auto& zone = config().zones[*idx];
  return static_cast<int>(std::count_if(users_.begin(), users_.end(), [&](const UserState& u) {
    return u.association &&
           std::find(zone.ap_ids.begin(), zone.ap_ids.end(), *u.association) != zone.ap_ids.end();
  }));
}

std::shared_ptr<const Snapshot> Simulator::snapshot() const {
  auto snap = std::make_shared<Snapshot>();
  snap->topology = topology_;
  snap->tick_index = tick_index_;
  snap->sim_time_s = sim_time_s();
  snap->users = users_;
  snap->zone_counts.assign(config().zones.size(), 0);
  for (const auto& u : users_) {
    if (u.association) {
      ++snap->zone_counts[topology_->zone_of_access_point(*u.association)];
    } else {
      ++snap->unassociated;
    }
  }
  return snap;
}

void Simulator::require_capacity(int extra) const {
  if (total_users() + extra > config().max_users) {
    throw Error(ErrorKind::kMaxUsersExceeded,
                "max-users-exceeded: " + std::to_string(total_users() + extra) + " > " +
                    std::to_string(config().max_users));
  }
}

std::string Simulator::add_user(UserClass user_class) {
  require_capacity(1);
  UserState u;
  u.address = format_address(next_address_++);
  u.user_class = user_class;
  u.position = random_position();
  for (int attempt = 1; attempt < kSpawnAttempts &&
                        !associate(u.position, config().access_points).has_value();
       ++attempt) {
    u.position = random_position();
  }
  u.waypoint = user_class == UserClass::kStationary ? u.position : random_position();
  u.association = associate(u.position, config().access_points);
  u.spawn_seq = next_spawn_seq_++;
  users_.push_back(u);
  return u.address;
}

void Simulator::remove_user(std::string_view address) {
  auto it = std::find_if(users_.begin(), users_.end(),
                         [&](const UserState& u) { return u.address == address; });
  if (it == users_.end()) {
    throw Error(ErrorKind::kNotFound, "unknown-address '" + std::string(address) + "'");
  }
  users_.erase(it);
}

void Simulator::set_user_count(UserClass user_class, int count) {
  if (count < 0) throw Error(ErrorKind::kValidation, "user count must be non-negative");
  const int current = count_of(user_class);
  if (count > current) {
    require_capacity(count - current);
    for (int i = current; i < count; ++i) add_user(user_class);
    return;
  }
  for (int i = current; i > count; --i) {
    auto newest = users_.end();
    for (auto it = users_.begin(); it != users_.end(); ++it) {
      if (it->user_class == user_class &&
          (newest == users_.end() || it->spawn_seq > newest->spawn_seq)) {
        newest = it;
      }
    }
    users_.erase(newest);
  }
}

void Simulator::load(ScenarioConfig config) {
  Simulator fresh(std::move(config));
  fresh.epoch_time_s_ = sim_time_s();
  fresh.tick_index_ = tick_index_;
  fresh.epoch_tick_ = tick_index_;
  *this = std::move(fresh);
}

}  // namespace edgescale::sim
