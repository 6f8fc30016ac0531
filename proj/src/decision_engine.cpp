#include "edgescale/decision_engine.hpp"

#include <algorithm>
#include <cmath>

#include "edgescale/error.hpp"
#include "edgescale/format.hpp"
#include "edgescale/location_api.hpp"

namespace edgescale::de {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorKind::kValidation, what);
}

std::string escape_label(const std::string& value) {
  std::string out;
  out.reserve(value.size());
  for (char c : value) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      case '\n': out += "\\n"; break;
      default: out += c;
    }
  }
  return out;
}

void family(std::string& out, const char* name, const char* type, const char* help) {
  out += "# HELP ";
  out += name;
  out += ' ';
  out += help;
  out += "\n# TYPE ";
  out += name;
  out += ' ';
  out += type;
  out += '\n';
}

void sample(std::string& out, const char* name, const std::string& labels, double value) {
  out += name;
  out += labels;
  out += ' ';
  out += format_number(value);
  out += '\n';
}

}  // namespace

void validate(const DEConfig& config) {
  if (config.monitored_zone.empty()) invalid("monitored_zone must be set");
  if (!(config.poll_period_s > 0.0)) invalid("poll_period_s must be positive");
  if (config.window_size < 1) invalid("window_size must be at least 1");
  if (!(config.gamma > 0.0) || !std::isfinite(config.gamma)) invalid("gamma must be positive");
  if (config.min_replicas < 1) invalid("min_replicas must be at least 1");
  if (config.max_replicas < config.min_replicas) invalid("max_replicas must be >= min_replicas");
  if (!(config.cooldown_s >= 0.0)) invalid("cooldown_s must be non-negative");
  if (config.target.ns.empty() || config.target.name.empty()) {
    invalid("target deployment needs a namespace and a name");
  }
}

void to_json(json& j, const DEConfig& config) {
  j = json{{"monitored_zone", config.monitored_zone},
           {"poll_period_s", config.poll_period_s},
           {"window_size", config.window_size},
           {"gamma", config.gamma},
           {"min_replicas", config.min_replicas},
           {"max_replicas", config.max_replicas},
           {"cooldown_s", config.cooldown_s},
           {"namespace", config.target.ns},
           {"deployment", config.target.name}};
}

void from_json(const json& j, DEConfig& config) {
  if (!j.is_object()) invalid("decision_engine config must be an object");
  static const std::vector<std::string> known = {
      "monitored_zone", "poll_period_s", "window_size", "gamma",     "min_replicas",
      "max_replicas",   "cooldown_s",    "namespace",   "deployment"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      invalid("unknown decision_engine field '" + key + "'");
    }
  }
  try {
    config.monitored_zone = j.value("monitored_zone", config.monitored_zone);
    config.poll_period_s = j.value("poll_period_s", config.poll_period_s);
    config.window_size = j.value("window_size", config.window_size);
    config.gamma = j.value("gamma", config.gamma);
    config.min_replicas = j.value("min_replicas", config.min_replicas);
    config.max_replicas = j.value("max_replicas", config.max_replicas);
    config.cooldown_s = j.value("cooldown_s", config.cooldown_s);
    config.target.ns = j.value("namespace", config.target.ns);
    config.target.name = j.value("deployment", config.target.name);
  } catch (const json::exception& e) {
    invalid(std::string("decision_engine: ") + e.what());
  }
}

SlidingWindow::SlidingWindow(std::size_t capacity) : capacity_(capacity), ring_(capacity) {
  if (capacity == 0) invalid("window capacity must be at least 1");
}

void SlidingWindow::push(ZoneOccupancySample sample) {
  if (sample.count < 0) invalid("negative occupancy sample");
  if (size_ > 0) {
    const auto& newest = ring_[(head_ + size_ - 1) % capacity_];
    if (sample.sim_time_s < newest.sim_time_s) invalid("sample older than window head");
  }
  if (size_ == capacity_) {
    sum_ -= ring_[head_].count;
    ring_[head_] = std::move(sample);
    sum_ += ring_[head_].count;
    head_ = (head_ + 1) % capacity_;
    return;
  }
  auto& slot = ring_[(head_ + size_) % capacity_];
  slot = std::move(sample);
  sum_ += slot.count;
  ++size_;
}

std::vector<ZoneOccupancySample> SlidingWindow::samples() const {
  std::vector<ZoneOccupancySample> out;
  out.reserve(size_);
  for (std::size_t i = 0; i < size_; ++i) out.push_back(ring_[(head_ + i) % capacity_]);
  return out;
}

void SlidingWindow::set_capacity(std::size_t capacity) {
  if (capacity == 0) invalid("window capacity must be at least 1");
  auto kept = samples();
  if (kept.size() > capacity) kept.erase(kept.begin(), kept.end() - capacity);
  capacity_ = capacity;
  ring_.assign(capacity, {});
  head_ = 0;
  size_ = 0;
  sum_ = 0;
  for (auto& s : kept) push(std::move(s));
}

void SlidingWindow::clear() noexcept {
  head_ = 0;
  size_ = 0;
  sum_ = 0;
}

double window_average(const SlidingWindow& window) {
  if (window.empty()) invalid("empty-window: no samples to average");
  return static_cast<double>(window.sum()) / static_cast<double>(window.size());
}

int desired_replicas(double avg, const DEConfig& config) {
  const double q = std::max(avg, 0.0) / config.gamma;
  if (q >= static_cast<double>(config.max_replicas)) return config.max_replicas;
  const int k = static_cast<int>(std::floor(q)) + 1;
  return std::clamp(k, config.min_replicas, config.max_replicas);
}

int DirectOccupancySource::zone_user_count(const std::string& zone_id) {
  return location::get_zone(*service_.current(), zone_id).numberOfUsers;
}

orch::ScaleStatus DirectScaleClient::get_scale(const DeploymentRef& target) {
  return orchestrator_.get_scale(target.ns, target.name);
}

std::optional<orch::ScaleEvent> DirectScaleClient::set_scale(const DeploymentRef& target,
                                                             int replicas,
                                                             const std::string& reason) {
  return orchestrator_.set_scale(target.ns, target.name, replicas, reason);
}

std::string render_metrics(const DEMetrics& m) {
  const std::string zone = "{zone=\"" + escape_label(m.zone) + "\"}";
  std::string out;
  if (m.zone_users) {
    family(out, "de_zone_users", "gauge", "Users in the monitored zone at the last poll.");
    sample(out, "de_zone_users", zone, *m.zone_users);
  }
  if (m.avg_users) {
    family(out, "de_avg_users", "gauge", "Sliding-window average of users in the monitored zone.");
    sample(out, "de_avg_users", zone, *m.avg_users);
  }
  if (m.policy_replicas) {
    family(out, "de_policy_replicas", "gauge", "Replica count the policy asks for.");
    sample(out, "de_policy_replicas", "", *m.policy_replicas);
  }
  family(out, "de_replicas_desired", "gauge", "Desired replicas of the target deployment.");
  sample(out, "de_replicas_desired", "", m.desired_replicas);
  family(out, "de_replicas_ready", "gauge", "Ready replicas of the target deployment.");
  sample(out, "de_replicas_ready", "", m.ready_replicas);
  family(out, "de_scale_actions_total", "counter", "Scale events issued by the decision engine.");
  sample(out, "de_scale_actions_total", "", static_cast<double>(m.scale_actions_total));
  family(out, "de_poll_failures_total", "counter", "Location API polls that failed.");
  sample(out, "de_poll_failures_total", "", static_cast<double>(m.poll_failures_total));
  if (m.last_poll_sim_time_s) {
    family(out, "de_last_poll_sim_time_seconds", "gauge",
           "Simulation time of the last successful poll.");
    sample(out, "de_last_poll_sim_time_seconds", "", *m.last_poll_sim_time_s);
  }
  return out;
}

std::string scale_reason(double avg, double gamma) {
  return "avg=" + format_number(avg) + " gamma=" + format_number(gamma);
}

DecisionEngine::DecisionEngine(DEConfig config, OccupancySource& source, ScaleClient& client,
                               ScalingPolicy policy)
    : config_(std::move(config)),
      source_(source),
      client_(client),
      policy_(std::move(policy)),
      window_((validate(config_), static_cast<std::size_t>(config_.window_size))) {
  working_.zone = config_.monitored_zone;
  published_ = working_;
}

void DecisionEngine::open_action_log(const std::filesystem::path& path) {
  action_log_.emplace(path, std::ios::out | std::ios::app);
  if (!*action_log_) throw Error(ErrorKind::kIo, "cannot open action log '" + path.string() + "'");
}

DEConfig DecisionEngine::patch_config(const json& patch) {
  std::lock_guard lock(mutex_);
  DEConfig merged = pending_ ? *pending_ : config_;
  from_json(patch, merged);
  validate(merged);
  pending_ = merged;
  return merged;
}

void DecisionEngine::apply_pending_config() {
  std::lock_guard lock(mutex_);
  if (!pending_) return;
  const DEConfig next = *std::exchange(pending_, std::nullopt);
  if (next.monitored_zone != config_.monitored_zone) {
    window_.clear();
    working_.zone = next.monitored_zone;
    working_.zone_users.reset();
    working_.avg_users.reset();
    working_.policy_replicas.reset();
  }
  if (next.target.ns != config_.target.ns || next.target.name != config_.target.name) {
    last_commanded_.reset();
    last_action_s_.reset();
  }
  if (next.window_size != config_.window_size) {
    window_.set_capacity(static_cast<std::size_t>(next.window_size));
  }
  config_ = next;
  published_ = working_;
}

DEConfig DecisionEngine::config() const {
  std::lock_guard lock(mutex_);
  return config_;
}

DEMetrics DecisionEngine::metrics() const {
  std::lock_guard lock(mutex_);
  return published_;
}

void DecisionEngine::publish_metrics() {
  std::lock_guard lock(mutex_);
  published_ = working_;
}

StepOutcome DecisionEngine::control_step(double sim_time_s) {
  apply_pending_config();
  StepOutcome out;

  int count = 0;
  try {
    count = source_.zone_user_count(config_.monitored_zone);
  } catch (const Error& e) {
    ++working_.poll_failures_total;
    out.poll_failed = true;
    out.error = e.what();
    publish_metrics();
    return out;
  }

  ZoneOccupancySample s{sim_time_s, config_.monitored_zone, count};
  window_.push(s);
  out.sample = s;
  const double avg = window_average(window_);
  const int want = policy_(avg, config_);
  out.avg = avg;
  out.policy_replicas = want;

  working_.zone_users = count;
  working_.avg_users = avg;
  working_.policy_replicas = want;
  working_.last_poll_sim_time_s = sim_time_s;

  if (!last_commanded_) {
    try {
      last_commanded_ = client_.get_scale(config_.target).desired;
    } catch (const Error& e) {
      out.error = e.what();
    }
  }

  const bool cooled = !last_action_s_ || sim_time_s >= *last_action_s_ + config_.cooldown_s;
  if (last_commanded_ && want != *last_commanded_ && cooled) {
    try {
      auto event = client_.set_scale(config_.target, want, scale_reason(avg, config_.gamma));
      if (event) {
        ++working_.scale_actions_total;
        last_action_s_ = sim_time_s;
        if (action_log_) {
          orch::ScaleEvent record{sim_time_s, config_.target.name, *last_commanded_, want,
                                  event->reason};
          *action_log_ << json(record).dump() << '\n';
          action_log_->flush();
        }
        out.action = std::move(event);
      }
      last_commanded_ = want;
    } catch (const Error& e) {
      // Rejected or unreachable: keep last_commanded_ so the next step retries.
      out.error = e.what();
    }
  }

  try {
    const auto status = client_.get_scale(config_.target);
    working_.desired_replicas = status.desired;
    working_.ready_replicas = status.ready;
  } catch (const Error& e) {
    if (!out.error) out.error = e.what();
    if (last_commanded_) working_.desired_replicas = *last_commanded_;
  }

  publish_metrics();
  return out;
}

}  // namespace edgescale::de
