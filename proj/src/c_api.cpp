#include "rcmteleop/rcmteleop.h"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "rcmteleop/errors.hpp"
#include "rcmteleop/harness.hpp"
#include "rcmteleop/rcm_constraint.hpp"
#include "rcmteleop/server.hpp"

using nlohmann::json;
namespace rt = rcmteleop;

struct rcm_config {
  json doc;
  std::filesystem::path base_dir;
  rt::ExperimentConfig resolved;
};

struct rcm_server {
  std::unique_ptr<rt::Server> server;
};

struct rcm_sim {
  std::unique_ptr<rt::ControlLoop> loop;
};

namespace {

thread_local std::string g_last_error;

rcm_status fail(rcm_status code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

template <class F>
rcm_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return RCM_OK;
  } catch (const rt::ConfigError& e) {
    return fail(RCM_ERR_CONFIG, e.what());
  } catch (const json::exception& e) {
    return fail(RCM_ERR_CONFIG, e.what());
  } catch (const rt::Error& e) {
    return fail(RCM_ERR_RUNTIME, e.what());
  } catch (const std::bad_alloc&) {
    return fail(RCM_ERR_RUNTIME, "out of memory");
  } catch (const std::exception& e) {
    return fail(RCM_ERR_RUNTIME, e.what());
  }
}

void copy_metrics(const rt::MetricsSummary& m, rcm_metrics* out) {
  out->mean_lateral_deviation = m.mean_lateral_deviation;
  out->max_lateral_deviation = m.max_lateral_deviation;
  out->rms_tracking_error = m.rms_tracking_error;
  out->max_tracking_error = m.max_tracking_error;
  out->rms_force_error = m.rms_force_error;
  out->mean_force_error = m.mean_force_error;
  out->lambda_terminal_error = m.lambda_terminal_error;
  out->tick_time_mean = m.tick_time_mean;
  out->tick_time_p95 = m.tick_time_p95;
  out->tick_time_max = m.tick_time_max;
  out->max_constraint_residual = m.max_constraint_residual;
  out->rank_deficient_ticks = m.rank_deficient_ticks;
  out->ticks = m.ticks;
  out->joint_limit_events = m.joint_limit_events;
  out->lambda_clamp_events = m.lambda_clamp_events;
}

void copy3(const rt::Vec3& v, double* out) {
  for (int i = 0; i < 3; ++i) {
    out[i] = v[i];
  }
}

rcm_status make_config(json doc, std::filesystem::path base_dir, rcm_config** out) {
  if (!out) {
    return fail(RCM_ERR_INVALID_ARGUMENT, "output handle pointer is null");
  }
  *out = nullptr;
  return guarded([&] {
    auto cfg = std::make_unique<rcm_config>();
    cfg->resolved = rt::ExperimentConfig::from_json(doc, base_dir);
    cfg->doc = std::move(doc);
    cfg->base_dir = std::move(base_dir);
    *out = cfg.release();
  });
}

}  // namespace

extern "C" {

const char* rcm_version(void) { return "0.1.0"; }

const char* rcm_last_error(void) { return g_last_error.c_str(); }

rcm_status rcm_config_default(rcm_config** out) {
  return make_config(rt::ExperimentConfig{}.to_json(), {}, out);
}

rcm_status rcm_config_load(const char* path, rcm_config** out) {
  if (!path) {
    return fail(RCM_ERR_INVALID_ARGUMENT, "config path is null");
  }
  std::ifstream in(path);
  if (!in) {
    if (out) *out = nullptr;
    return fail(RCM_ERR_CONFIG, std::string("cannot open config file ") + path);
  }
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) {
    if (out) *out = nullptr;
    return fail(RCM_ERR_CONFIG, std::string("config file is not valid JSON: ") + path);
  }
  return make_config(std::move(doc), std::filesystem::path(path).parent_path(), out);
}

rcm_status rcm_config_parse(const char* json_text, rcm_config** out) {
  if (!json_text) {
    return fail(RCM_ERR_INVALID_ARGUMENT, "config text is null");
  }
  json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded()) {
    if (out) *out = nullptr;
    return fail(RCM_ERR_CONFIG, "config text is not valid JSON");
  }
  return make_config(std::move(doc), {}, out);
}

rcm_status rcm_config_set(rcm_config* cfg, const char* key, const char* json_value) {
  if (!cfg || !key || !json_value || !*key) {
    return fail(RCM_ERR_INVALID_ARGUMENT, "rcm_config_set: null argument or empty key");
  }
  json value = json::parse(json_value, nullptr, false);
  if (value.is_discarded()) {
    return fail(RCM_ERR_CONFIG, std::string("value for '") + key + "' is not valid JSON");
  }
  return guarded([&] {
    json doc = cfg->doc;
    json* node = &doc;
    std::string path = key;
    std::size_t pos = 0;
    while (true) {
      const std::size_t dot = path.find('.', pos);
      const std::string part = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
      if (part.empty()) {
        throw rt::ConfigError(std::string("malformed key '") + key + "'");
      }
      if (!node->is_object()) {
        throw rt::ConfigError(std::string("key '") + key + "' does not address an object member");
      }
      if (dot == std::string::npos) {
        (*node)[part] = value;
        break;
      }
      node = &(*node)[part];
      if (node->is_null()) {
        *node = json::object();
      }
      pos = dot + 1;
    }
    rt::ExperimentConfig resolved = rt::ExperimentConfig::from_json(doc, cfg->base_dir);
    cfg->doc = std::move(doc);
    cfg->resolved = std::move(resolved);
  });
}

rcm_status rcm_config_to_json(const rcm_config* cfg, char* buf, size_t capacity, size_t* needed) {
  if (!cfg) {
    return fail(RCM_ERR_INVALID_ARGUMENT, "config handle is null");
  }
  const std::string text = cfg->resolved.to_json().dump(2);
  if (needed) {
    *needed = text.size() + 1;
  }
  if (!buf) {
    return RCM_OK;
  }
  if (capacity < text.size() + 1) {
    return fail(RCM_ERR_INVALID_ARGUMENT, "buffer too small for config JSON");
  }
  std::memcpy(buf, text.c_str(), text.size() + 1);
  return RCM_OK;
}

void rcm_config_free(rcm_config* cfg) { delete cfg; }

rcm_status rcm_run(const rcm_config* cfg, rcm_metrics* out) {
  if (!cfg) {
    return fail(RCM_ERR_INVALID_ARGUMENT, "config handle is null");
  }
  return guarded([&] {
    const rt::RunOutput res = rt::run(cfg->resolved, true);
    if (out) {
      copy_metrics(res.summary, out);
    }
  });
}

rcm_status rcm_compare(const rcm_config* cfg, rcm_compare_pair* pairs, size_t capacity,
                       size_t* count) {
  if (!cfg) {
    return fail(RCM_ERR_INVALID_ARGUMENT, "config handle is null");
  }
  return guarded([&] {
    const auto result = rt::compare(cfg->resolved, true);
    if (count) {
      *count = result.size();
    }
    if (pairs) {
      for (std::size_t i = 0; i < std::min(capacity, result.size()); ++i) {
        pairs[i].amplitude = result[i].amplitude;
        copy_metrics(result[i].with_admittance, &pairs[i].with_admittance);
        copy_metrics(result[i].without_admittance, &pairs[i].without_admittance);
        pairs[i].lateral_ratio = result[i].lateral_ratio;
        pairs[i].force_ratio = result[i].force_ratio;
      }
    }
  });
}

rcm_status rcm_server_start(const rcm_config* cfg, rcm_server** out) {
  if (!cfg || !out) {
    return fail(RCM_ERR_INVALID_ARGUMENT, "null config or output handle");
  }
  *out = nullptr;
  return guarded([&] {
    auto handle = std::make_unique<rcm_server>();
    handle->server = std::make_unique<rt::Server>(cfg->resolved);
    handle->server->start();
    *out = handle.release();
  });
}

int rcm_server_port(const rcm_server* server) { return server ? server->server->port() : -1; }

rcm_status rcm_server_stats(const rcm_server* server, rcm_server_info* out) {
  if (!server) {
    return fail(RCM_ERR_INVALID_ARGUMENT, "server handle is null");
  }
  const rt::ServerStats s = server->server->stats();
  if (out) {
    out->received = s.received;
    out->accepted = s.accepted;
    out->malformed = s.malformed;
    out->rate_limited = s.rate_limited;
    out->states_published = s.states_published;
    out->states_dropped = s.states_dropped;
    out->clients = s.clients;
    out->ticks = s.ticks;
  }
  const std::string fault = server->server->fault();
  if (!fault.empty()) {
    return fail(RCM_ERR_RUNTIME, fault);
  }
  return RCM_OK;
}

void rcm_server_stop(rcm_server* server) {
  if (server) {
    server->server->stop();
    delete server;
  }
}

rcm_status rcm_sim_create(const rcm_config* cfg, rcm_sim** out) {
  if (!cfg || !out) {
    return fail(RCM_ERR_INVALID_ARGUMENT, "null config or output handle");
  }
  *out = nullptr;
  return guarded([&] {
    rt::ExperimentConfig c = cfg->resolved;
    c.mode = rt::Mode::teleop;
    auto handle = std::make_unique<rcm_sim>();
    handle->loop = std::make_unique<rt::ControlLoop>(c);
    *out = handle.release();
  });
}

rcm_status rcm_sim_command(rcm_sim* sim, const double position[3], const double quat_xyzw[4],
                           int clutch, double gripper, double timestamp) {
  if (!sim || !position || !quat_xyzw) {
    return fail(RCM_ERR_INVALID_ARGUMENT, "null argument");
  }
  const rt::Vec3 p(position[0], position[1], position[2]);
  const Eigen::Vector4d q(quat_xyzw[0], quat_xyzw[1], quat_xyzw[2], quat_xyzw[3]);
  if (!p.allFinite() || !q.allFinite() || std::abs(q.norm() - 1.0) > 1e-3) {
    return fail(RCM_ERR_INVALID_ARGUMENT, "stylus pose must be finite with a unit quaternion");
  }
  if (!(gripper >= 0.0 && gripper <= 1.0)) {
    return fail(RCM_ERR_INVALID_ARGUMENT, "gripper must lie in [0, 1]");
  }
  rt::TeleopCommand cmd;
  cmd.stylus = rt::Pose::from_position_quaternion(p, q);
  cmd.clutch = clutch != 0;
  cmd.gripper = gripper;
  cmd.timestamp = timestamp;
  sim->loop->submit(cmd);
  g_last_error.clear();
  return RCM_OK;
}

rcm_status rcm_sim_step(rcm_sim* sim, uint64_t ticks) {
  if (!sim) {
    return fail(RCM_ERR_INVALID_ARGUMENT, "sim handle is null");
  }
  return guarded([&] {
    for (uint64_t i = 0; i < ticks; ++i) {
      sim->loop->tick();
    }
  });
}

rcm_status rcm_sim_state(const rcm_sim* sim, rcm_state* out) {
  if (!sim || !out) {
    return fail(RCM_ERR_INVALID_ARGUMENT, "null argument");
  }
  const rt::ControlLoop& loop = *sim->loop;
  const rt::SimState& s = loop.sim().state();
  out->t = s.t;
  for (int i = 0; i < RCM_NUM_JOINTS; ++i) {
    out->q[i] = s.aug.q[i];
  }
  out->lambda = s.aug.lambda;
  copy3(s.kin.instrument.position, out->p_ins);
  const Eigen::Vector4d quat = s.kin.instrument.quaternion_xyzw();
  for (int i = 0; i < 4; ++i) {
    out->quat_xyzw[i] = quat[i];
  }
  copy3(s.kin.p_end, out->p_end);
  copy3(rt::rcm_position(s.kin.p_end, s.kin.instrument.position, s.aug.lambda), out->p_rcm);
  copy3(s.trocar_now, out->trocar);
  copy3(s.f_true, out->f_true);
  copy3(s.f_hat, out->f_hat);
  copy3(loop.desired().position, out->desired_position);
  out->lateral_deviation =
      rt::lateral_deviation(s.kin.p_end, s.kin.instrument.position, s.trocar_now);
  out->clutch = loop.mapper().clutch().engaged ? 1 : 0;
  return RCM_OK;
}

void rcm_sim_free(rcm_sim* sim) { delete sim; }

}  // extern "C"
