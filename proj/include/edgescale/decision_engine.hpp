#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgescale/orchestrator.hpp"

namespace edgescale::location {
class LocationService;
}

namespace edgescale::de {

struct DeploymentRef {
  std::string ns = "default";
  std::string name = "vod";
};

struct DEConfig {
  std::string monitored_zone = "zone3";
  double poll_period_s = 5.0;
  int window_size = 6;
  double gamma = 3.0;
  int min_replicas = 1;
  int max_replicas = 2;
  double cooldown_s = 0.0;
  DeploymentRef target;
};

/// Throws Error(kValidation) naming the first violated constraint.
void validate(const DEConfig& config);

void to_json(nlohmann::json& j, const DEConfig& config);
/// Partial update: only keys present in j are changed. Keys are the field
/// names above, with the target spelled "namespace" and "deployment".
void from_json(const nlohmann::json& j, DEConfig& config);

struct ZoneOccupancySample {
  double sim_time_s = 0.0;
  std::string zone_id;
  int count = 0;
};

/// Fixed-capacity ring of the most recent samples, oldest first.
class SlidingWindow {
 public:
  explicit SlidingWindow(std::size_t capacity);

  /// Evicts the oldest sample when full. Throws Error(kValidation) for a
  /// negative count or a timestamp older than the newest sample.
  void push(ZoneOccupancySample sample);
  /// Keeps the newest min(size, capacity) samples.
  void set_capacity(std::size_t capacity);
  void clear() noexcept;

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }
  std::int64_t sum() const noexcept { return sum_; }
  std::vector<ZoneOccupancySample> samples() const;

 private:
  std::size_t capacity_;
  std::vector<ZoneOccupancySample> ring_;
  std::size_t head_ = 0;  // index of the oldest sample
  std::size_t size_ = 0;
  std::int64_t sum_ = 0;
};

/// Mean of the window's counts. Throws Error(kValidation) on an empty window.
double window_average(const SlidingWindow& window);

/// Threshold rule: one replica per full multiple of gamma reached by avg,
/// plus one, clamped to [min_replicas, max_replicas]. With gamma 3:
/// avg < 3 -> 1, 3 <= avg < 6 -> 2, ...
int desired_replicas(double avg, const DEConfig& config);

/// Swappable policy hook; desired_replicas is the only one shipped.
using ScalingPolicy = std::function<int(double avg, const DEConfig& config)>;

/// Tier-1 sensor. Implementations throw Error(kUnreachable) (or any Error)
/// when the count cannot be fetched.
class OccupancySource {
 public:
  virtual ~OccupancySource() = default;
  virtual int zone_user_count(const std::string& zone_id) = 0;
};

/// Tier-2 actuator.
class ScaleClient {
 public:
  virtual ~ScaleClient() = default;
  virtual orch::ScaleStatus get_scale(const DeploymentRef& target) = 0;
  /// Returns the appended event, or nullopt when the orchestrator reported a
  /// no-op. Throws Error on rejection or transport failure.
  virtual std::optional<orch::ScaleEvent> set_scale(const DeploymentRef& target, int replicas,
                                                    const std::string& reason) = 0;
};

class DirectOccupancySource final : public OccupancySource {
 public:
  explicit DirectOccupancySource(const location::LocationService& service) : service_(service) {}
  int zone_user_count(const std::string& zone_id) override;

 private:
  const location::LocationService& service_;
};

class DirectScaleClient final : public ScaleClient {
 public:
  explicit DirectScaleClient(orch::Orchestrator& orchestrator) : orchestrator_(orchestrator) {}
  orch::ScaleStatus get_scale(const DeploymentRef& target) override;
  std::optional<orch::ScaleEvent> set_scale(const DeploymentRef& target, int replicas,
                                            const std::string& reason) override;

 private:
  orch::Orchestrator& orchestrator_;
};

struct DEMetrics {
  std::string zone;
  std::optional<int> zone_users;   // raw count at the last successful poll
  std::optional<double> avg_users;
  std::optional<int> policy_replicas;
  int desired_replicas = 0;        // last value commanded / observed on the deployment
  int ready_replicas = 0;
  std::uint64_t scale_actions_total = 0;
  std::uint64_t poll_failures_total = 0;
  std::optional<double> last_poll_sim_time_s;
};

/// Prometheus text exposition format 0.0.4, fixed family order.
std::string render_metrics(const DEMetrics& metrics);

inline constexpr const char* kMetricsContentType = "text/plain; version=0.0.4; charset=utf-8";

struct StepOutcome {
  bool poll_failed = false;
  std::optional<ZoneOccupancySample> sample;
  std::optional<double> avg;
  std::optional<int> policy_replicas;
  std::optional<orch::ScaleEvent> action;  // set when a scale event was created
  std::optional<std::string> error;        // rejection or transport error text
};

/// "avg=<avg> gamma=<gamma>" with shortest round-trip numbers.
std::string scale_reason(double avg, double gamma);

/// Single sequential agent: one control_step per poll. metrics() and
/// patch_config() may be called from other threads.
class DecisionEngine {
 public:
  DecisionEngine(DEConfig config, OccupancySource& source, ScaleClient& client,
                 ScalingPolicy policy = desired_replicas);

  DecisionEngine(const DecisionEngine&) = delete;
  DecisionEngine& operator=(const DecisionEngine&) = delete;

  /// Appends one JSON line per scale event the engine created.
  void open_action_log(const std::filesystem::path& path);

  /// Fetch, average, decide, act. At most one set_scale call.
  StepOutcome control_step(double sim_time_s);

  /// Validates the merged config and queues it for the next step. Returns
  /// the merged config. Throws Error(kValidation).
  DEConfig patch_config(const nlohmann::json& patch);
  /// Applies a queued patch, if any. control_step calls this first.
  void apply_pending_config();

  DEConfig config() const;
  DEMetrics metrics() const;
  const SlidingWindow& window() const noexcept { return window_; }

 private:
  void publish_metrics();

  DEConfig config_;
  OccupancySource& source_;
  ScaleClient& client_;
  ScalingPolicy policy_;
  SlidingWindow window_;
  std::optional<int> last_commanded_;
  std::optional<double> last_action_s_;
  std::optional<std::ofstream> action_log_;
  DEMetrics working_;

  mutable std::mutex mutex_;  // guards published_, pending_, config_ reads
  DEMetrics published_;
  std::optional<DEConfig> pending_;
};

}  // namespace edgescale::de
