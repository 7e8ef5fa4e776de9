#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rcmteleop/rcmteleop.h"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rcmteleop_capi_" + name);
  fs::remove_all(p);
  return p;
}

std::string config_json(const rcm_config* cfg) {
  size_t needed = 0;
  EXPECT_EQ(rcm_config_to_json(cfg, nullptr, 0, &needed), RCM_OK);
  std::vector<char> buf(needed);
  EXPECT_EQ(rcm_config_to_json(cfg, buf.data(), buf.size(), &needed), RCM_OK);
  return std::string(buf.data());
}

struct ConfigHandle {
  rcm_config* ptr = nullptr;
  ~ConfigHandle() { rcm_config_free(ptr); }
};

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
  }
  return n;
}

#ifdef RCMTELEOP_CLI_PATH
int cli(const std::string& args) {
  const std::string cmd = std::string(RCMTELEOP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}
#endif

}  // namespace

TEST(CApi, Version) { EXPECT_STREQ(rcm_version(), "0.1.0"); }

TEST(CApi, DefaultConfigSerializes) {
  ConfigHandle c;
  ASSERT_EQ(rcm_config_default(&c.ptr), RCM_OK);
  const std::string text = config_json(c.ptr);
  EXPECT_NE(text.find("\"scenario\": \"circle\""), std::string::npos);
  ConfigHandle d;
  ASSERT_EQ(rcm_config_parse(text.c_str(), &d.ptr), RCM_OK);
  EXPECT_EQ(config_json(d.ptr), text);
  char small[4];
  size_t needed = 0;
  EXPECT_EQ(rcm_config_to_json(c.ptr, small, sizeof(small), &needed), RCM_ERR_INVALID_ARGUMENT);
  EXPECT_GT(needed, sizeof(small));
}

TEST(CApi, ConfigErrors) {
  rcm_config* c = nullptr;
  EXPECT_EQ(rcm_config_parse("{\"bogus\": 1}", &c), RCM_ERR_CONFIG);
  EXPECT_EQ(c, nullptr);
  EXPECT_NE(std::string(rcm_last_error()).find("bogus"), std::string::npos);
  EXPECT_EQ(rcm_config_parse("{nope", &c), RCM_ERR_CONFIG);
  EXPECT_EQ(rcm_config_load("/nonexistent/cfg.json", &c), RCM_ERR_CONFIG);
  EXPECT_EQ(rcm_config_parse(nullptr, &c), RCM_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(rcm_config_default(nullptr), RCM_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(rcm_run(nullptr, nullptr), RCM_ERR_INVALID_ARGUMENT);
}

TEST(CApi, ConfigLoadShipped) {
  ConfigHandle c;
  ASSERT_EQ(rcm_config_load(RCMTELEOP_CONFIG_DIR "/line.json", &c.ptr), RCM_OK) << rcm_last_error();
  EXPECT_NE(config_json(c.ptr).find("\"scenario\": \"line\""), std::string::npos);
}

TEST(CApi, ConfigSetValidates) {
  ConfigHandle c;
  ASSERT_EQ(rcm_config_default(&c.ptr), RCM_OK);
  ASSERT_EQ(rcm_config_set(c.ptr, "admittance.k_adm", "0.01"), RCM_OK);
  ASSERT_EQ(rcm_config_set(c.ptr, "scenario", "\"line\""), RCM_OK);
  const std::string before = config_json(c.ptr);
  EXPECT_NE(before.find("\"k_adm\": 0.01"), std::string::npos);
  EXPECT_EQ(rcm_config_set(c.ptr, "duration", "-1"), RCM_ERR_CONFIG);
  EXPECT_EQ(rcm_config_set(c.ptr, "solver.nonsense", "1"), RCM_ERR_CONFIG);
  EXPECT_EQ(rcm_config_set(c.ptr, "duration", "{bad"), RCM_ERR_CONFIG);
  EXPECT_EQ(rcm_config_set(c.ptr, "", "1"), RCM_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(config_json(c.ptr), before);
}

TEST(CApi, RunWritesFiles) {
  ConfigHandle c;
  ASSERT_EQ(rcm_config_default(&c.ptr), RCM_OK);
  const fs::path out = scratch("run");
  ASSERT_EQ(rcm_config_set(c.ptr, "duration", "0.01"), RCM_OK);
  ASSERT_EQ(rcm_config_set(c.ptr, "output_dir", ("\"" + out.string() + "\"").c_str()), RCM_OK);
  rcm_metrics m{};
  ASSERT_EQ(rcm_run(c.ptr, &m), RCM_OK) << rcm_last_error();
  EXPECT_EQ(m.ticks, 2U);
  EXPECT_EQ(count_lines(out / "log.csv"), 3U);
  EXPECT_TRUE(fs::exists(out / "summary.json"));
  EXPECT_TRUE(fs::exists(out / "config.json"));
  fs::remove_all(out);
}

TEST(CApi, CompareReportsPairs) {
  ConfigHandle c;
  ASSERT_EQ(rcm_config_default(&c.ptr), RCM_OK);
  const fs::path out = scratch("compare");
  ASSERT_EQ(rcm_config_set(c.ptr, "scenario", "\"disturbance_sweep\""), RCM_OK);
  ASSERT_EQ(rcm_config_set(c.ptr, "duration", "4"), RCM_OK);
  ASSERT_EQ(rcm_config_set(c.ptr, "trocar.disturbance", "{\"amplitude\": [1, 0, 0], \"frequency\": 0.25}"), RCM_OK);
  ASSERT_EQ(rcm_config_set(c.ptr, "compare.amplitudes", "[0.01, 0.02]"), RCM_OK);
  ASSERT_EQ(rcm_config_set(c.ptr, "output_dir", ("\"" + out.string() + "\"").c_str()), RCM_OK);
  rcm_compare_pair pairs[4];
  size_t count = 0;
  ASSERT_EQ(rcm_compare(c.ptr, pairs, 4, &count), RCM_OK) << rcm_last_error();
  ASSERT_EQ(count, 2U);
  for (size_t i = 0; i < count; ++i) {
    EXPECT_LT(pairs[i].with_admittance.mean_lateral_deviation, pairs[i].without_admittance.mean_lateral_deviation);
    EXPECT_GT(pairs[i].lateral_ratio, 1.0);
  }
  EXPECT_DOUBLE_EQ(pairs[1].amplitude, 0.02);
  EXPECT_TRUE(fs::exists(out / "compare.json"));
  fs::remove_all(out);
}

TEST(CApi, SimDragAndState) {
  ConfigHandle c;
  ASSERT_EQ(rcm_config_default(&c.ptr), RCM_OK);
  ASSERT_EQ(rcm_config_set(c.ptr, "scenario", "\"free\""), RCM_OK);
  ASSERT_EQ(rcm_config_set(c.ptr, "trocar.noise_sigma", "0"), RCM_OK);
  rcm_sim* sim = nullptr;
  ASSERT_EQ(rcm_sim_create(c.ptr, &sim), RCM_OK) << rcm_last_error();
  rcm_state s0{};
  ASSERT_EQ(rcm_sim_state(sim, &s0), RCM_OK);
  EXPECT_EQ(s0.t, 0.0);
  EXPECT_EQ(s0.clutch, 0);

  const double pos[3] = {0, 0, 0};
  const double quat[4] = {0, 0, 0, 1};
  ASSERT_EQ(rcm_sim_command(sim, pos, quat, 1, 0.0, 0.0), RCM_OK);
  ASSERT_EQ(rcm_sim_step(sim, 1), RCM_OK);
  const double moved[3] = {0.01, 0, 0};
  ASSERT_EQ(rcm_sim_command(sim, moved, quat, 1, 0.5, 0.01), RCM_OK);
  ASSERT_EQ(rcm_sim_step(sim, 400), RCM_OK);
  rcm_state s{};
  ASSERT_EQ(rcm_sim_state(sim, &s), RCM_OK);
  EXPECT_EQ(s.clutch, 1);
  EXPECT_NEAR(s.t, 401 * 0.005, 1e-12);
  EXPECT_NEAR(s.p_ins[0] - s0.p_ins[0], 0.01, 5e-4);
  EXPECT_NEAR(s.desired_position[0] - s0.p_ins[0], 0.01, 1e-12);
  double qn = 0.0;
  for (double v : s.quat_xyzw) {
    qn += v * v;
  }
  EXPECT_NEAR(qn, 1.0, 1e-12);

  const double bad_quat[4] = {0, 0, 0, 2};
  EXPECT_EQ(rcm_sim_command(sim, pos, bad_quat, 1, 0.0, 0.0), RCM_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(rcm_sim_command(sim, pos, quat, 1, 1.5, 0.0), RCM_ERR_INVALID_ARGUMENT);
  rcm_sim_free(sim);
}

TEST(CApi, ServerLifecycle) {
  ConfigHandle c;
  ASSERT_EQ(rcm_config_default(&c.ptr), RCM_OK);
  ASSERT_EQ(rcm_config_set(c.ptr, "server", "{\"enabled\": true, \"port\": 0}"), RCM_OK);
  rcm_server* server = nullptr;
  ASSERT_EQ(rcm_server_start(c.ptr, &server), RCM_OK) << rcm_last_error();
  EXPECT_GT(rcm_server_port(server), 0);
  rcm_server_info info{};
  EXPECT_EQ(rcm_server_stats(server, &info), RCM_OK);
  rcm_server_stop(server);
  EXPECT_EQ(rcm_server_port(nullptr), -1);
}

#ifdef RCMTELEOP_CLI_PATH

TEST(Cli, RunSucceeds) {
  const fs::path out = scratch("cli_run");
  EXPECT_EQ(cli("run --duration 0.01 --seed 3 --out " + out.string()), 0);
  EXPECT_EQ(count_lines(out / "log.csv"), 3U);
  std::ifstream in(out / "config.json");
  std::stringstream text;
  text << in.rdbuf();
  EXPECT_NE(text.str().find("\"seed\": 3"), std::string::npos);
  fs::remove_all(out);
}

TEST(Cli, RunWithShippedConfig) {
  const fs::path out = scratch("cli_line");
  EXPECT_EQ(cli(std::string("run --config ") + RCMTELEOP_CONFIG_DIR + "/line.json --duration 0.05 --out " +
                out.string()),
            0);
  EXPECT_TRUE(fs::exists(out / "summary.json"));
  fs::remove_all(out);
}

TEST(Cli, CompareSucceeds) {
  const fs::path out = scratch("cli_compare");
  EXPECT_EQ(cli("compare --duration 0.5 --out " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "compare.json"));
  fs::remove_all(out);
}

TEST(Cli, ConfigErrorsExitOne) {
  const fs::path out = scratch("cli_bad");
  EXPECT_EQ(cli("run --duration 0 --out " + out.string()), 1);
  EXPECT_FALSE(fs::exists(out / "log.csv"));
  EXPECT_EQ(cli("run --config /nonexistent/cfg.json"), 1);
  EXPECT_EQ(cli("run --scenario spiral"), 1);
  EXPECT_EQ(cli("run --no-such-flag"), 1);
  EXPECT_EQ(cli("frobnicate"), 1);
  EXPECT_EQ(cli(""), 1);
}

TEST(Cli, RuntimeFaultExitsTwo) {
  ConfigHandle c;
  ASSERT_EQ(rcm_config_default(&c.ptr), RCM_OK);
  ASSERT_EQ(rcm_config_set(c.ptr, "server", "{\"enabled\": true, \"port\": 0}"), RCM_OK);
  rcm_server* server = nullptr;
  ASSERT_EQ(rcm_server_start(c.ptr, &server), RCM_OK);
  const int port = rcm_server_port(server);
  EXPECT_EQ(cli("serve --duration 0.2 --port " + std::to_string(port)), 2);
  rcm_server_stop(server);
}

TEST(Cli, ServeForFixedDuration) {
  EXPECT_EQ(cli("serve --duration 0.2 --port 0"), 0);
}

#endif
