#include "edgescale/orchestrator.hpp"

#include <algorithm>

#include "edgescale/error.hpp"

namespace edgescale::orch {

using nlohmann::json;

void to_json(json& j, const DeploymentSpec& spec) {
  j = json{{"namespace", spec.ns},
           {"name", spec.name},
           {"initial_replicas", spec.initial_replicas},
           {"min_replicas", spec.min_replicas},
           {"max_replicas", spec.max_replicas},
           {"readiness_latency_s", spec.readiness_latency_s}};
}

void from_json(const json& j, DeploymentSpec& spec) {
  try {
    spec.ns = j.value("namespace", spec.ns);
    spec.name = j.value("name", spec.name);
    spec.initial_replicas = j.value("initial_replicas", spec.initial_replicas);
    spec.min_replicas = j.value("min_replicas", spec.min_replicas);
    spec.max_replicas = j.value("max_replicas", spec.max_replicas);
    spec.readiness_latency_s = j.value("readiness_latency_s", spec.readiness_latency_s);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kValidation, std::string("deployment: ") + e.what());
  }
}

void to_json(json& j, const ScaleEvent& e) {
  j = json{{"timestamp", e.timestamp},
           {"deployment", e.deployment},
           {"from_replicas", e.from_replicas},
           {"to_replicas", e.to_replicas},
           {"reason", e.reason}};
}

void from_json(const json& j, ScaleEvent& e) {
  j.at("timestamp").get_to(e.timestamp);
  j.at("deployment").get_to(e.deployment);
  j.at("from_replicas").get_to(e.from_replicas);
  j.at("to_replicas").get_to(e.to_replicas);
  j.at("reason").get_to(e.reason);
}

std::vector<ScaleEvent> read_event_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open event log '" + path.string() + "'");
  std::vector<ScaleEvent> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    try {
      events.push_back(json::parse(line).get<ScaleEvent>());
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kValidation, path.string() + ":" + std::to_string(line_no) + ": " +
                                              e.what());
    }
  }
  return events;
}

int replay_desired(int initial_replicas, std::span<const ScaleEvent> events,
                   std::string_view deployment) {
  int desired = initial_replicas;
  for (const auto& e : events) {
    if (e.deployment == deployment) desired = e.to_replicas;
  }
  return desired;
}

Orchestrator::Orchestrator(std::optional<std::filesystem::path> event_log) {
  if (event_log) {
    log_.emplace(*event_log, std::ios::out | std::ios::app);
    if (!*log_) throw Error(ErrorKind::kIo, "cannot open event log '" + event_log->string() + "'");
  }
}

void Orchestrator::create(const DeploymentSpec& spec) {
  if (spec.min_replicas < 0 || spec.max_replicas < spec.min_replicas) {
    throw Error(ErrorKind::kValidation, "deployment '" + spec.name + "': need 0 <= min <= max");
  }
  if (spec.initial_replicas < spec.min_replicas || spec.initial_replicas > spec.max_replicas) {
    throw Error(ErrorKind::kValidation,
                "deployment '" + spec.name + "': initial replicas outside [min, max]");
  }
  if (spec.readiness_latency_s < 0.0) {
    throw Error(ErrorKind::kValidation, "deployment '" + spec.name + "': negative latency");
  }
  std::lock_guard lock(mutex_);
  for (const auto& d : deployments_) {
    if (d.ns == spec.ns && d.name == spec.name) {
      throw Error(ErrorKind::kValidation, "deployment '" + spec.ns + "/" + spec.name +
                                              "' already exists");
    }
  }
  deployments_.push_back(DeploymentState{spec.ns, spec.name, spec.initial_replicas,
                                         spec.initial_replicas, spec.readiness_latency_s,
                                         spec.min_replicas, spec.max_replicas, now_s_});
}

void Orchestrator::advance_to(double sim_time_s) {
  std::lock_guard lock(mutex_);
  now_s_ = std::max(now_s_, sim_time_s);
  promote_ready();
}

double Orchestrator::now() const {
  std::lock_guard lock(mutex_);
  return now_s_;
}

void Orchestrator::promote_ready() {
  for (auto& d : deployments_) {
    if (d.ready_replicas < d.desired_replicas && now_s_ >= d.last_change_s + d.readiness_latency_s) {
      d.ready_replicas = d.desired_replicas;
    }
  }
}

DeploymentState& Orchestrator::find(std::string_view ns, std::string_view name) {
  for (auto& d : deployments_) {
    if (d.ns == ns && d.name == name) return d;
  }
  throw Error(ErrorKind::kNotFound,
              "deployment '" + std::string(ns) + "/" + std::string(name) + "' not found");
}

const DeploymentState& Orchestrator::find(std::string_view ns, std::string_view name) const {
  return const_cast<Orchestrator*>(this)->find(ns, name);
}

ScaleStatus Orchestrator::get_scale(std::string_view ns, std::string_view name) const {
  std::lock_guard lock(mutex_);
  const auto& d = find(ns, name);
  return {d.desired_replicas, d.ready_replicas};
}

DeploymentState Orchestrator::deployment(std::string_view ns, std::string_view name) const {
  std::lock_guard lock(mutex_);
  return find(ns, name);
}

std::optional<ScaleEvent> Orchestrator::set_scale(std::string_view ns, std::string_view name,
                                                  int replicas, std::string reason) {
  std::lock_guard lock(mutex_);
  auto& d = find(ns, name);
  if (replicas < d.min_replicas) {
    throw Error(ErrorKind::kOutOfBounds, "replicas " + std::to_string(replicas) +
                                             " below min_replicas " +
                                             std::to_string(d.min_replicas));
  }
  if (replicas > d.max_replicas) {
    throw Error(ErrorKind::kOutOfBounds, "replicas " + std::to_string(replicas) +
                                             " above max_replicas " +
                                             std::to_string(d.max_replicas));
  }
  if (replicas == d.desired_replicas) return std::nullopt;

  ScaleEvent event{now_s_, d.name, d.desired_replicas, replicas, std::move(reason)};
  d.desired_replicas = replicas;
  d.last_change_s = now_s_;
  d.ready_replicas = std::min(d.ready_replicas, replicas);
  promote_ready();

  if (log_) {
    *log_ << json(event).dump() << '\n';
    log_->flush();
  }
  events_.push_back(event);
  return event;
}

std::vector<ScaleEvent> Orchestrator::list_events(std::optional<double> since) const {
  std::lock_guard lock(mutex_);
  if (!since) return events_;
  std::vector<ScaleEvent> out;
  std::copy_if(events_.begin(), events_.end(), std::back_inserter(out),
               [&](const ScaleEvent& e) { return e.timestamp > *since; });
  return out;
}

}  // namespace edgescale::orch
