#include "edgescale/harness.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include <httplib.h>

#include "edgescale/error.hpp"
#include "edgescale/format.hpp"
#include "edgescale/http.hpp"

namespace edgescale::harness {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorKind::kValidation, what);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

sim::ScenarioConfig scenario_from(const json& j, const std::filesystem::path& base_dir) {
  if (j.is_string()) return sim::load_scenario_file(resolve(base_dir, j.get<std::string>()).string());
  sim::ScenarioConfig config = sim::default_scenario();
  sim::from_json(j, config);
  sim::validate(config);
  return config;
}

std::string csv_optional(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string();
}

}  // namespace

std::string ListenAddress::to_string() const { return host + ":" + std::to_string(port); }

ListenAddress ListenAddress::parse(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    invalid("listen address '" + text + "' must look like host:port");
  }
  ListenAddress out;
  out.host = text.substr(0, colon);
  try {
    std::size_t used = 0;
    out.port = std::stoi(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument(text);
  } catch (const std::exception&) {
    invalid("listen address '" + text + "' has a bad port");
  }
  if (out.port < 0 || out.port > 65535) invalid("listen port out of range in '" + text + "'");
  return out;
}

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) invalid("run file must be a JSON object");
  static const std::vector<std::string> known = {
      "scenario", "scenarios", "decision_engine", "deployment", "duration_ticks", "listen",
      "upstream", "output_dir", "realtime",       "dashboard_dir"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      invalid("unknown run file field '" + key + "'");
    }
  }

  RunConfig config;
  try {
    if (auto it = j.find("scenario"); it != j.end()) config.scenario = scenario_from(*it, base_dir);
    if (auto it = j.find("scenarios"); it != j.end()) {
      for (const auto& [name, value] : it->items()) {
        auto scenario = scenario_from(value, base_dir);
        scenario.name = name;
        config.scenarios.insert_or_assign(name, std::move(scenario));
      }
    }
    if (auto it = j.find("deployment"); it != j.end()) orch::from_json(*it, config.deployment);
    config.de.target = {config.deployment.ns, config.deployment.name};
    if (auto it = j.find("decision_engine"); it != j.end()) de::from_json(*it, config.de);
    config.duration_ticks = j.value("duration_ticks", config.duration_ticks);
    if (auto it = j.find("listen"); it != j.end()) {
      if (it->contains("location")) {
        config.location_listen = ListenAddress::parse(it->at("location").get<std::string>());
      }
      if (it->contains("orchestrator")) {
        config.orchestrator_listen =
            ListenAddress::parse(it->at("orchestrator").get<std::string>());
      }
      if (it->contains("decision_engine")) {
        config.de_listen = ListenAddress::parse(it->at("decision_engine").get<std::string>());
      }
    }
    if (auto it = j.find("upstream"); it != j.end()) {
      if (it->contains("location_url")) config.location_url = it->at("location_url").get<std::string>();
      if (it->contains("orchestrator_url")) {
        config.orchestrator_url = it->at("orchestrator_url").get<std::string>();
      }
    }
    if (auto it = j.find("output_dir"); it != j.end()) {
      config.output_dir = resolve(base_dir, it->get<std::string>());
    }
    config.realtime = j.value("realtime", config.realtime);
    if (auto it = j.find("dashboard_dir"); it != j.end()) {
      config.dashboard_dir = resolve(base_dir, it->get<std::string>());
    }
  } catch (const json::exception& e) {
    invalid(std::string("run file: ") + e.what());
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open run file '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    invalid("run file '" + path.string() + "': " + e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

void validate(const RunConfig& config, bool headless) {
  sim::validate(config.scenario);
  for (const auto& [name, scenario] : config.scenarios) sim::validate(scenario);
  de::validate(config.de);
  if (!config.scenario.find_zone(config.de.monitored_zone)) {
    invalid("monitored zone '" + config.de.monitored_zone + "' is not declared by the scenario");
  }
  if (config.de.target.ns != config.deployment.ns ||
      config.de.target.name != config.deployment.name) {
    invalid("decision engine target does not match the deployment");
  }
  const auto& d = config.deployment;
  if (d.min_replicas < 0 || d.max_replicas < d.min_replicas) {
    invalid("deployment needs 0 <= min_replicas <= max_replicas");
  }
  if (d.initial_replicas < d.min_replicas || d.initial_replicas > d.max_replicas) {
    invalid("deployment initial_replicas outside its bounds");
  }
  if (d.readiness_latency_s < 0.0) invalid("deployment readiness_latency_s must be >= 0");
  if (config.de.min_replicas < d.min_replicas || config.de.max_replicas > d.max_replicas) {
    invalid("decision engine replica bounds exceed the deployment's bounds");
  }
  if (headless && config.duration_ticks < 1) invalid("duration_ticks must be at least 1");
  const auto distinct = [](const ListenAddress& a, const ListenAddress& b) {
    return a.port == 0 || b.port == 0 || !(a == b);
  };
  if (!distinct(config.location_listen, config.orchestrator_listen) ||
      !distinct(config.location_listen, config.de_listen) ||
      !distinct(config.orchestrator_listen, config.de_listen)) {
    invalid("listen addresses must be distinct");
  }
}

std::uint64_t poll_every_ticks(double poll_period_s, double tick_s) {
  const auto n = std::llround(poll_period_s / tick_s);
  return n < 1 ? 1 : static_cast<std::uint64_t>(n);
}

void to_json(json& j, const RunReport& r) {
  j = json{{"ticks", r.ticks},
           {"polls", r.polls},
           {"poll_failures", r.poll_failures},
           {"scale_actions", r.scale_actions},
           {"scale_ups", r.scale_ups},
           {"scale_downs", r.scale_downs},
           {"time_weighted_mean_replicas", r.time_weighted_mean_replicas},
           {"min_avg_users", r.min_avg_users ? json(*r.min_avg_users) : json(nullptr)},
           {"max_avg_users", r.max_avg_users ? json(*r.max_avg_users) : json(nullptr)}};
}

Runtime::Runtime(const RunConfig& config, de::OccupancySource* source, de::ScaleClient* client)
    : config_(config), simulator_(config.scenario), location_(config.scenarios) {
  std::error_code ec;
  std::filesystem::create_directories(config_.output_dir, ec);
  if (ec) {
    throw Error(ErrorKind::kIo, "cannot create output dir '" + config_.output_dir.string() +
                                    "': " + ec.message());
  }
  for (const char* name : {kSeriesFile, kOrchestratorLogFile, kActionLogFile, kSummaryFile}) {
    std::filesystem::remove(config_.output_dir / name, ec);
  }

  orchestrator_ = std::make_unique<orch::Orchestrator>(config_.output_dir / kOrchestratorLogFile);
  orchestrator_->create(config_.deployment);

  if (source == nullptr) {
    owned_source_ = std::make_unique<de::DirectOccupancySource>(location_);
    source = owned_source_.get();
  }
  if (client == nullptr) {
    owned_client_ = std::make_unique<de::DirectScaleClient>(*orchestrator_);
    client = owned_client_.get();
  }
  engine_ = std::make_unique<de::DecisionEngine>(config_.de, *source, *client);
  engine_->open_action_log(config_.output_dir / kActionLogFile);

  series_.open(config_.output_dir / kSeriesFile);
  if (!series_) throw Error(ErrorKind::kIo, "cannot write series file");
  series_ << kSeriesHeader << '\n';
}

Runtime::~Runtime() = default;

void Runtime::start() {
  location_.publish(simulator_.snapshot());
  orchestrator_->advance_to(simulator_.sim_time_s());
  next_poll_tick_ = simulator_.tick_index();
  after_tick();
}

std::size_t Runtime::drain_steering() {
  return location_.drain(simulator_);
}

void Runtime::step() {
  location_.drain(simulator_);
  simulator_.tick();
  location_.publish(simulator_.snapshot());
  orchestrator_->advance_to(simulator_.sim_time_s());
  ++report_.ticks;
  after_tick();
  replica_seconds_ +=
      orchestrator_->get_scale(config_.deployment.ns, config_.deployment.name).ready *
      simulator_.config().tick_s;
}

void Runtime::after_tick() {
  engine_->apply_pending_config();
  if (simulator_.tick_index() < next_poll_tick_) return;
  poll();
  next_poll_tick_ = simulator_.tick_index() +
                    poll_every_ticks(engine_->config().poll_period_s, simulator_.config().tick_s);
}

void Runtime::poll() {
  const double now = simulator_.sim_time_s();
  const auto outcome = engine_->control_step(now);
  ++report_.polls;
  if (outcome.poll_failed) {
    ++report_.poll_failures;
    return;
  }
  if (outcome.action) {
    ++report_.scale_actions;
    if (outcome.action->to_replicas > outcome.action->from_replicas) {
      ++report_.scale_ups;
    } else {
      ++report_.scale_downs;
    }
  }
  const double avg = *outcome.avg;
  report_.min_avg_users = std::min(report_.min_avg_users.value_or(avg), avg);
  report_.max_avg_users = std::max(report_.max_avg_users.value_or(avg), avg);

  const auto m = engine_->metrics();
  series_ << simulator_.tick_index() << ',' << format_number(now) << ','
          << outcome.sample->count << ',' << csv_optional(outcome.avg) << ','
          << *outcome.policy_replicas << ',' << m.desired_replicas << ',' << m.ready_replicas
          << '\n';
  series_.flush();
}

RunReport Runtime::finish() {
  const double elapsed = static_cast<double>(report_.ticks) * simulator_.config().tick_s;
  report_.time_weighted_mean_replicas =
      elapsed > 0.0 ? replica_seconds_ / elapsed
                    : orchestrator_->get_scale(config_.deployment.ns, config_.deployment.name).ready;
  series_.flush();
  std::ofstream summary(config_.output_dir / kSummaryFile);
  summary << json(report_).dump(2) << '\n';
  if (!summary) throw Error(ErrorKind::kIo, "cannot write summary");
  return report_;
}

RunReport run_headless(const RunConfig& config) {
  validate(config, true);
  const auto t0 = std::chrono::steady_clock::now();
  Runtime runtime(config);
  runtime.start();
  for (std::uint64_t i = 0; i < config.duration_ticks; ++i) runtime.step();
  auto report = runtime.finish();
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

namespace {

int bind(httplib::Server& server, const ListenAddress& address) {
  // Default options minus SO_REUSEPORT.
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  if (address.port == 0) {
    const int port = server.bind_to_any_port(address.host);
    if (port <= 0) throw Error(ErrorKind::kIo, "cannot bind " + address.to_string());
    return port;
  }
  if (!server.bind_to_port(address.host, address.port)) {
    throw Error(ErrorKind::kIo, "cannot bind " + address.to_string());
  }
  return address.port;
}

std::string local_url(const ListenAddress& address, int port) {
  const std::string host = address.host == "0.0.0.0" ? "127.0.0.1" : address.host;
  return "http://" + host + ":" + std::to_string(port);
}

}  // namespace

RunReport run_live(const RunConfig& config, const std::atomic<bool>& stop,
                   std::optional<std::uint64_t> max_ticks,
                   const std::function<void(const BoundPorts&)>& on_ready) {
  validate(config, false);
  const auto t0 = std::chrono::steady_clock::now();

  httplib::Server location_server;
  httplib::Server orchestrator_server;
  httplib::Server de_server;
  BoundPorts ports;
  ports.location = bind(location_server, config.location_listen);
  ports.orchestrator = bind(orchestrator_server, config.orchestrator_listen);
  ports.decision_engine = bind(de_server, config.de_listen);

  http::HttpOccupancySource source(
      config.location_url.value_or(local_url(config.location_listen, ports.location)));
  http::HttpScaleClient client(
      config.orchestrator_url.value_or(local_url(config.orchestrator_listen, ports.orchestrator)));
  Runtime runtime(config, &source, &client);

  for (auto* server : {&location_server, &orchestrator_server, &de_server}) {
    http::enable_cors(*server);
  }
  http::mount_location_api(location_server, runtime.location());
  http::mount_orchestrator_api(orchestrator_server, runtime.orchestrator());
  http::mount_decision_engine_api(de_server, runtime.engine());
  if (config.dashboard_dir) http::mount_static(de_server, config.dashboard_dir->string());

  std::vector<std::thread> threads;
  for (auto* server : {&location_server, &orchestrator_server, &de_server}) {
    threads.emplace_back([server] { server->listen_after_bind(); });
  }
  for (auto* server : {&location_server, &orchestrator_server, &de_server}) {
    server->wait_until_ready();
  }

  const auto stop_servers = [&] {
    for (auto* server : {&location_server, &orchestrator_server, &de_server}) server->stop();
    for (auto& t : threads) t.join();
  };

  RunReport report;
  try {
    runtime.start();
    if (on_ready) on_ready(ports);

    const auto tick = std::chrono::duration<double>(config.scenario.tick_s);
    auto next = std::chrono::steady_clock::now();
    std::uint64_t ticks = 0;
    while (!stop.load() && (!max_ticks || ticks < *max_ticks)) {
      if (config.realtime) {
        next += std::chrono::duration_cast<std::chrono::steady_clock::duration>(tick);
        while (!stop.load() && std::chrono::steady_clock::now() < next) {
          runtime.drain_steering();
          std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
        if (stop.load()) break;
      }
      runtime.step();
      ++ticks;
    }
    report = runtime.finish();
  } catch (...) {
    stop_servers();
    throw;
  }
  stop_servers();
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace edgescale::harness
