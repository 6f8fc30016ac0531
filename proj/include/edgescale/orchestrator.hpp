#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace edgescale::orch {

inline constexpr double kDefaultReadinessLatencyS = 5.0;

struct DeploymentSpec {
  std::string ns = "default";
  std::string name = "vod";
  int initial_replicas = 1;
  int min_replicas = 1;
  int max_replicas = 10;
  double readiness_latency_s = kDefaultReadinessLatencyS;
};

void to_json(nlohmann::json& j, const DeploymentSpec& spec);
/// Missing keys keep their current values.
void from_json(const nlohmann::json& j, DeploymentSpec& spec);

struct DeploymentState {
  std::string ns;
  std::string name;
  int desired_replicas = 0;
  int ready_replicas = 0;
  double readiness_latency_s = 0.0;
  int min_replicas = 0;
  int max_replicas = 0;
  double last_change_s = 0.0;
};

struct ScaleEvent {
  double timestamp = 0.0;
  std::string deployment;
  int from_replicas = 0;
  int to_replicas = 0;
  std::string reason;

  friend bool operator==(const ScaleEvent&, const ScaleEvent&) = default;
};

void to_json(nlohmann::json& j, const ScaleEvent& e);
void from_json(const nlohmann::json& j, ScaleEvent& e);

/// Reads a line-delimited event log. Throws Error(kValidation) on the first
/// line that does not parse as a complete ScaleEvent.
std::vector<ScaleEvent> read_event_log(const std::filesystem::path& path);

/// Desired replicas after applying every event for `deployment` in order.
int replay_desired(int initial_replicas, std::span<const ScaleEvent> events,
                   std::string_view deployment);

struct ScaleStatus {
  int desired = 0;
  int ready = 0;

  friend bool operator==(const ScaleStatus&, const ScaleStatus&) = default;
};

/// In-memory stand-in for a cluster's deployment scale subresource. Time is
/// simulation time pushed in through advance_to(); upscales become ready after
/// the deployment's readiness latency, downscales are immediate.
class Orchestrator {
 public:
  /// When event_log is set every event is appended to it as one JSON line.
  explicit Orchestrator(std::optional<std::filesystem::path> event_log = std::nullopt);

  Orchestrator(const Orchestrator&) = delete;
  Orchestrator& operator=(const Orchestrator&) = delete;

  /// Throws Error(kValidation) for bad bounds or a duplicate (ns, name).
  void create(const DeploymentSpec& spec);

  /// Moves the clock forward (never back) and promotes pending replicas.
  void advance_to(double sim_time_s);
  double now() const;

  /// Throws Error(kNotFound).
  ScaleStatus get_scale(std::string_view ns, std::string_view name) const;
  DeploymentState deployment(std::string_view ns, std::string_view name) const;

  /// Returns the appended event, or nullopt (the no-op marker) when replicas
  /// already equals desired. Throws Error(kNotFound) or Error(kOutOfBounds).
  std::optional<ScaleEvent> set_scale(std::string_view ns, std::string_view name, int replicas,
                                      std::string reason);

  /// Events strictly after `since` (all events when absent), in log order.
  std::vector<ScaleEvent> list_events(std::optional<double> since = std::nullopt) const;

 private:
  DeploymentState& find(std::string_view ns, std::string_view name);
  const DeploymentState& find(std::string_view ns, std::string_view name) const;
  void promote_ready();

  mutable std::mutex mutex_;
  double now_s_ = 0.0;
  std::vector<DeploymentState> deployments_;
  std::vector<ScaleEvent> events_;
  std::optional<std::ofstream> log_;
};

}  // namespace edgescale::orch
