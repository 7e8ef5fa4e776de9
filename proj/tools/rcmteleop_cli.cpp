#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "rcmteleop/rcmteleop.h"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

struct Options {
  std::string config;
  std::string out;
  std::string scenario;
  unsigned long long seed = 0;
  double duration = 0.0;
  int port = -1;
};

int report(rcm_status status) {
  if (status == RCM_OK) {
    return 0;
  }
  std::fprintf(stderr, "error: %s\n", rcm_last_error());
  return status == RCM_ERR_CONFIG || status == RCM_ERR_INVALID_ARGUMENT ? 1 : 2;
}

// Loads the config file (or defaults) and applies command-line overrides.
rcm_status build_config(const Options& opt, const CLI::App& sub, rcm_config** cfg) {
  rcm_status st = opt.config.empty() ? rcm_config_default(cfg) : rcm_config_load(opt.config.c_str(), cfg);
  if (st != RCM_OK) {
    return st;
  }
  std::vector<std::pair<std::string, std::string>> sets;
  if (sub.count("--seed")) sets.emplace_back("seed", std::to_string(opt.seed));
  if (sub.count("--out")) sets.emplace_back("output_dir", "\"" + opt.out + "\"");
  if (sub.count("--scenario")) sets.emplace_back("scenario", "\"" + opt.scenario + "\"");
  if (sub.count("--duration")) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", opt.duration);
    sets.emplace_back("duration", buf);
  }
  const CLI::Option* port = sub.get_option_no_throw("--port");
  if (port && port->count()) sets.emplace_back("server.port", std::to_string(opt.port));
  for (const auto& [key, value] : sets) {
    st = rcm_config_set(*cfg, key.c_str(), value.c_str());
    if (st != RCM_OK) {
      return st;
    }
  }
  return RCM_OK;
}

void print_metrics(const char* label, const rcm_metrics& m) {
  std::printf("%s\n", label);
  std::printf("  ticks                    %llu\n", static_cast<unsigned long long>(m.ticks));
  std::printf("  mean lateral deviation   %.6g m\n", m.mean_lateral_deviation);
  std::printf("  max lateral deviation    %.6g m\n", m.max_lateral_deviation);
  std::printf("  rms tracking error       %.6g m\n", m.rms_tracking_error);
  std::printf("  max tracking error       %.6g m\n", m.max_tracking_error);
  std::printf("  rms force error          %.6g N\n", m.rms_force_error);
  std::printf("  lambda terminal error    %.6g\n", m.lambda_terminal_error);
  std::printf("  max constraint residual  %.3g\n", m.max_constraint_residual);
  std::printf("  rank deficient ticks     %llu\n",
              static_cast<unsigned long long>(m.rank_deficient_ticks));
  std::printf("  tick time p95            %.3g s\n", m.tick_time_p95);
}

int cmd_run(const Options& opt, const CLI::App& sub) {
  rcm_config* cfg = nullptr;
  rcm_status st = build_config(opt, sub, &cfg);
  if (st == RCM_OK) {
    rcm_metrics m{};
    st = rcm_run(cfg, &m);
    if (st == RCM_OK) {
      print_metrics("run summary", m);
    }
  }
  rcm_config_free(cfg);
  return report(st);
}

int cmd_compare(const Options& opt, const CLI::App& sub) {
  rcm_config* cfg = nullptr;
  rcm_status st = build_config(opt, sub, &cfg);
  if (st == RCM_OK) {
    size_t count = 0;
    std::vector<rcm_compare_pair> pairs(256);
    st = rcm_compare(cfg, pairs.data(), pairs.size(), &count);
    pairs.resize(std::min(count, pairs.size()));
    if (st == RCM_OK) {
      std::printf("%-12s %-14s %-14s %-10s %-10s\n", "amplitude_m", "lateral_on_m", "lateral_off_m",
                  "lat_ratio", "f_ratio");
      for (const auto& p : pairs) {
        std::printf("%-12.4g %-14.6g %-14.6g %-10.4g %-10.4g\n", p.amplitude,
                    p.with_admittance.mean_lateral_deviation,
                    p.without_admittance.mean_lateral_deviation, p.lateral_ratio, p.force_ratio);
      }
    }
  }
  rcm_config_free(cfg);
  return report(st);
}

int cmd_serve(const Options& opt, const CLI::App& sub) {
  rcm_config* cfg = nullptr;
  rcm_status st = build_config(opt, sub, &cfg);
  rcm_server* server = nullptr;
  if (st == RCM_OK) {
    st = rcm_server_start(cfg, &server);
  }
  rcm_config_free(cfg);
  if (st != RCM_OK) {
    return report(st);
  }
  std::printf("listening on port %d\n", rcm_server_port(server));
  std::fflush(stdout);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  const bool timed = sub.count("--duration") > 0;
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(opt.duration));
  rcm_server_info stats{};
  while (!g_stop) {
    st = rcm_server_stats(server, &stats);
    if (st != RCM_OK || (timed && std::chrono::steady_clock::now() >= deadline)) {
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  rcm_server_stats(server, &stats);
  std::printf("ticks %llu, commands accepted %llu, malformed %llu, rate limited %llu\n",
              static_cast<unsigned long long>(stats.ticks),
              static_cast<unsigned long long>(stats.accepted),
              static_cast<unsigned long long>(stats.malformed),
              static_cast<unsigned long long>(stats.rate_limited));
  const rcm_status final_status = st;
  rcm_server_stop(server);
  return report(final_status);
}

void add_common(CLI::App* sub, Options& opt) {
  sub->add_option("--config", opt.config, "Experiment config file (JSON)");
  sub->add_option("--seed", opt.seed, "RNG seed override");
  sub->add_option("--out", opt.out, "Output directory override");
  sub->add_option("--scenario", opt.scenario, "circle | line | disturbance_sweep | free");
  sub->add_option("--duration", opt.duration, "Duration override (s)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive RCM teleoperation simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(rcm_version()));
  Options opt;
  CLI::App* run = app.add_subcommand("run", "Run a scenario and write log.csv, config.json, summary.json");
  CLI::App* cmp = app.add_subcommand("compare", "Paired runs with and without admittance");
  CLI::App* serve = app.add_subcommand("serve", "Real-time loop with a WebSocket endpoint");
  add_common(run, opt);
  add_common(cmp, opt);
  add_common(serve, opt);
  serve->add_option("--port", opt.port, "Listen port (0 picks a free port)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (*run) return cmd_run(opt, *run);
  if (*cmp) return cmd_compare(opt, *cmp);
  return cmd_serve(opt, *serve);
}
