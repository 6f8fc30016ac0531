// edgescale: run (live), bench (headless) and validate subcommands.

#include <csignal>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "edgescale/error.hpp"
#include "edgescale/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

struct Overrides {
  std::string config_path;
  std::optional<double> gamma;
  std::optional<std::string> zone;
  std::optional<double> poll_period;
  std::optional<int> window;
  std::optional<std::uint64_t> seed;
  std::optional<int> min_replicas;
  std::optional<int> max_replicas;
  std::optional<double> cooldown;
  std::optional<std::uint64_t> ticks;
  std::optional<std::string> out;
  std::optional<std::string> dashboard;
  bool fast = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "Run file (JSON)")
      ->required()
      ->envname("EDGESCALE_CONFIG");
  cmd->add_option("--gamma", o.gamma, "Occupancy threshold")->envname("EDGESCALE_GAMMA");
  cmd->add_option("--zone", o.zone, "Monitored zone id")->envname("EDGESCALE_ZONE");
  cmd->add_option("--poll-period", o.poll_period, "DE poll period in seconds")
      ->envname("EDGESCALE_POLL_PERIOD");
  cmd->add_option("--window", o.window, "Samples in the averaging window")
      ->envname("EDGESCALE_WINDOW");
  cmd->add_option("--seed", o.seed, "Scenario seed")->envname("EDGESCALE_SEED");
  cmd->add_option("--min-replicas", o.min_replicas, "DE lower replica bound")
      ->envname("EDGESCALE_MIN_REPLICAS");
  cmd->add_option("--max-replicas", o.max_replicas, "DE upper replica bound")
      ->envname("EDGESCALE_MAX_REPLICAS");
  cmd->add_option("--cooldown", o.cooldown, "Seconds between scale actions")
      ->envname("EDGESCALE_COOLDOWN");
  cmd->add_option("--ticks", o.ticks, "Ticks to run")->envname("EDGESCALE_TICKS");
  cmd->add_option("--out", o.out, "Output directory")->envname("EDGESCALE_OUT");
}

edgescale::harness::RunConfig build_config(const Overrides& o) {
  auto config = edgescale::harness::load_run_config(o.config_path);
  if (o.gamma) config.de.gamma = *o.gamma;
  if (o.zone) config.de.monitored_zone = *o.zone;
  if (o.poll_period) config.de.poll_period_s = *o.poll_period;
  if (o.window) config.de.window_size = *o.window;
  if (o.seed) config.scenario.seed = *o.seed;
  if (o.min_replicas) config.de.min_replicas = *o.min_replicas;
  if (o.max_replicas) config.de.max_replicas = *o.max_replicas;
  if (o.cooldown) config.de.cooldown_s = *o.cooldown;
  if (o.ticks) config.duration_ticks = *o.ticks;
  if (o.out) config.output_dir = *o.out;
  if (o.dashboard) config.dashboard_dir = *o.dashboard;
  if (o.fast) config.realtime = false;
  return config;
}

bool is_config_error(const edgescale::Error& e) {
  return e.kind() == edgescale::ErrorKind::kValidation ||
         e.kind() == edgescale::ErrorKind::kNotFound;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edge autoscaling sandbox: mobility simulator, MEC Location API, "
               "scale orchestrator and decision engine"};
  app.require_subcommand(1);

  Overrides run_o, bench_o, validate_o;
  auto* run = app.add_subcommand("run", "Live run serving every HTTP endpoint");
  add_common(run, run_o);
  run->add_flag("--fast", run_o.fast, "Do not pace ticks to the wall clock");
  run->add_option("--dashboard", run_o.dashboard, "Static dashboard directory")
      ->envname("EDGESCALE_DASHBOARD");

  auto* bench = app.add_subcommand("bench", "Headless run writing series and logs");
  add_common(bench, bench_o);

  auto* check = app.add_subcommand("validate", "Check a run file and exit");
  check->add_option("--config", validate_o.config_path, "Run file (JSON)")
      ->required()
      ->envname("EDGESCALE_CONFIG");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  using namespace edgescale;
  harness::RunConfig config;
  try {
    if (check->parsed()) {
      config = build_config(validate_o);
      harness::validate(config, false);
      std::cout << "ok: scenario '" << config.scenario.name << "', "
                << config.scenario.total_users() << " users, "
                << config.scenario.zones.size() << " zones\n";
      return kExitOk;
    }
    config = build_config(bench->parsed() ? bench_o : run_o);
    harness::validate(config, bench->parsed());
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (bench->parsed()) {
      config.realtime = false;
      const auto report = harness::run_headless(config);
      nlohmann::json j = report;
      j["wall_seconds"] = report.wall_seconds;
      std::cout << j.dump(2) << '\n';
      return kExitOk;
    }
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    const auto report = harness::run_live(config, g_stop, run_o.ticks,
                                          [&](const harness::BoundPorts& p) {
                                            std::cerr << "location api on :" << p.location
                                                      << ", orchestrator on :" << p.orchestrator
                                                      << ", decision engine on :"
                                                      << p.decision_engine << std::endl;
                                          });
    std::cerr << "stopped after " << report.ticks << " ticks, " << report.scale_actions
              << " scale actions\n";
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_config_error(e) ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
