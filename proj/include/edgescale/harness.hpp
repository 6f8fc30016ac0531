#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "edgescale/decision_engine.hpp"
#include "edgescale/location_api.hpp"
#include "edgescale/orchestrator.hpp"
#include "edgescale/scenario.hpp"
#include "edgescale/simulator.hpp"

namespace edgescale::harness {

/// "host:port"; port 0 asks the OS for a free port.
struct ListenAddress {
  std::string host = "127.0.0.1";
  int port = 0;

  std::string to_string() const;
  static ListenAddress parse(const std::string& text);
  friend bool operator==(const ListenAddress&, const ListenAddress&) = default;
};

struct RunConfig {
  sim::ScenarioConfig scenario = sim::default_scenario();
  location::ScenarioRegistry scenarios;  // extra LoadScenario targets
  de::DEConfig de;
  orch::DeploymentSpec deployment;
  std::uint64_t duration_ticks = 600;
  ListenAddress location_listen{"127.0.0.1", 8080};
  ListenAddress orchestrator_listen{"127.0.0.1", 8081};
  ListenAddress de_listen{"127.0.0.1", 8082};
  // When set, the live DE talks to these instead of the local listeners.
  std::optional<std::string> location_url;
  std::optional<std::string> orchestrator_url;
  std::filesystem::path output_dir = "out";
  bool realtime = true;
  std::optional<std::filesystem::path> dashboard_dir;
};

/// Parses a run file. Relative paths inside it resolve against its
/// directory. Throws Error(kValidation) or Error(kIo).
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// Cross-field checks: monitored zone declared, DE target matches the
/// deployment, bounds compatible, distinct listen addresses. Throws
/// Error(kValidation).
void validate(const RunConfig& config, bool headless);

/// Number of ticks between DE polls (at least 1).
std::uint64_t poll_every_ticks(double poll_period_s, double tick_s);

inline constexpr const char* kSeriesFile = "series.csv";
inline constexpr const char* kOrchestratorLogFile = "orchestrator_events.jsonl";
inline constexpr const char* kActionLogFile = "de_actions.jsonl";
inline constexpr const char* kSummaryFile = "summary.json";
inline constexpr const char* kSeriesHeader =
    "tick,sim_time_s,zone_users,avg_users,policy_replicas,desired_replicas,ready_replicas";

struct RunReport {
  std::uint64_t ticks = 0;
  std::uint64_t polls = 0;
  std::uint64_t poll_failures = 0;
  std::uint64_t scale_actions = 0;
  std::uint64_t scale_ups = 0;
  std::uint64_t scale_downs = 0;
  double time_weighted_mean_replicas = 0.0;  // ready replicas over sim time
  std::optional<double> min_avg_users;
  std::optional<double> max_avg_users;
  double wall_seconds = 0.0;
};

void to_json(nlohmann::json& j, const RunReport& report);

/// Wires simulator, location service, orchestrator and DE, and advances
/// them one tick at a time. This is the single tick-advancing agent.
class Runtime {
 public:
  /// With null source/client the DE uses in-process adapters. Output files
  /// are (re)created under config.output_dir.
  Runtime(const RunConfig& config, de::OccupancySource* source = nullptr,
          de::ScaleClient* client = nullptr);
  ~Runtime();

  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  /// Publishes the tick-0 snapshot and runs the tick-0 poll.
  void start();
  /// Drains steering, ticks, publishes, advances the orchestrator, polls if due.
  void step();
  /// Applies queued steering commands without ticking; republishes when any
  /// were applied. Returns how many were applied.
  std::size_t drain_steering();

  RunReport finish();

  sim::Simulator& simulator() noexcept { return simulator_; }
  location::LocationService& location() noexcept { return location_; }
  orch::Orchestrator& orchestrator() noexcept { return *orchestrator_; }
  de::DecisionEngine& engine() noexcept { return *engine_; }

 private:
  void after_tick();
  void poll();

  RunConfig config_;
  sim::Simulator simulator_;
  location::LocationService location_;
  std::unique_ptr<orch::Orchestrator> orchestrator_;
  std::unique_ptr<de::OccupancySource> owned_source_;
  std::unique_ptr<de::ScaleClient> owned_client_;
  std::unique_ptr<de::DecisionEngine> engine_;
  std::ofstream series_;
  std::uint64_t next_poll_tick_ = 0;
  double replica_seconds_ = 0.0;
  RunReport report_;
};

/// Fast, headless run of config.duration_ticks ticks. Writes series.csv, both
/// event logs and summary.json to config.output_dir.
RunReport run_headless(const RunConfig& config);

struct BoundPorts {
  int location = 0;
  int orchestrator = 0;
  int decision_engine = 0;
};

/// Serves every endpoint and advances ticks (wall-clock paced when
/// config.realtime) until stop becomes true or max_ticks ticks have run.
/// on_ready fires once all listeners are bound. Throws Error(kIo) when a
/// port cannot be bound.
RunReport run_live(const RunConfig& config, const std::atomic<bool>& stop,
                   std::optional<std::uint64_t> max_ticks = std::nullopt,
                   const std::function<void(const BoundPorts&)>& on_ready = {});

}  // namespace edgescale::harness
