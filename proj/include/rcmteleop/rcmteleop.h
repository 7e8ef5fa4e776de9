#ifndef RCMTELEOP_H
#define RCMTELEOP_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define RCM_API __declspec(dllexport)
#else
#define RCM_API __attribute__((visibility("default")))
#endif

#define RCM_NUM_JOINTS 11

/* Values double as CLI exit codes for config (1) and runtime (2) failures. */
typedef enum rcm_status {
  RCM_OK = 0,
  RCM_ERR_CONFIG = 1,
  RCM_ERR_RUNTIME = 2,
  RCM_ERR_INVALID_ARGUMENT = 3,
  RCM_ERR_IO = 4
} rcm_status;

typedef struct rcm_config rcm_config;
typedef struct rcm_server rcm_server;
typedef struct rcm_sim rcm_sim;

typedef struct rcm_metrics {
  double mean_lateral_deviation;
  double max_lateral_deviation;
  double rms_tracking_error;
  double max_tracking_error;
  double rms_force_error;
  double mean_force_error;
  double lambda_terminal_error;
  double tick_time_mean;
  double tick_time_p95;
  double tick_time_max;
  double max_constraint_residual;
  uint64_t rank_deficient_ticks;
  uint64_t ticks;
  uint64_t joint_limit_events;
  uint64_t lambda_clamp_events;
} rcm_metrics;

typedef struct rcm_compare_pair {
  double amplitude;
  rcm_metrics with_admittance;
  rcm_metrics without_admittance;
  double lateral_ratio; /* off / on */
  double force_ratio;
} rcm_compare_pair;

typedef struct rcm_server_info {
  uint64_t received;
  uint64_t accepted;
  uint64_t malformed;
  uint64_t rate_limited;
  uint64_t states_published;
  uint64_t states_dropped;
  uint64_t clients;
  uint64_t ticks;
} rcm_server_info;

typedef struct rcm_state {
  double t;
  double q[RCM_NUM_JOINTS];
  double lambda;
  double p_ins[3];
  double quat_xyzw[4];
  double p_end[3];
  double p_rcm[3];
  double trocar[3];
  double f_true[3];
  double f_hat[3];
  double desired_position[3];
  double lateral_deviation;
  int clutch;
} rcm_state;

RCM_API const char* rcm_version(void);
/* Message for the last failed call on this thread; empty when none. */
RCM_API const char* rcm_last_error(void);

RCM_API rcm_status rcm_config_default(rcm_config** out);
RCM_API rcm_status rcm_config_load(const char* path, rcm_config** out);
RCM_API rcm_status rcm_config_parse(const char* json_text, rcm_config** out);
/* Sets a dotted key (e.g. "admittance.k_adm") to a JSON value ("0.01", "\"line\"").
   The config is left unchanged when the result does not validate. */
RCM_API rcm_status rcm_config_set(rcm_config* cfg, const char* key, const char* json_value);
/* Writes the resolved config as JSON. *needed receives the size including the
   terminator; buf may be NULL to query it. */
RCM_API rcm_status rcm_config_to_json(const rcm_config* cfg, char* buf, size_t capacity,
                                      size_t* needed);
RCM_API void rcm_config_free(rcm_config* cfg);

/* Runs the configured scenario and writes log.csv, config.json, summary.json. */
RCM_API rcm_status rcm_run(const rcm_config* cfg, rcm_metrics* out);
/* Paired runs with and without admittance; writes compare.json. */
RCM_API rcm_status rcm_compare(const rcm_config* cfg, rcm_compare_pair* pairs, size_t capacity,
                               size_t* count);

RCM_API rcm_status rcm_server_start(const rcm_config* cfg, rcm_server** out);
RCM_API int rcm_server_port(const rcm_server* server);
/* Returns RCM_ERR_RUNTIME once the control loop has stopped on a fault. */
RCM_API rcm_status rcm_server_stats(const rcm_server* server, rcm_server_info* out);
/* Stops both threads and frees the handle. */
RCM_API void rcm_server_stop(rcm_server* server);

/* Offline teleop loop, stepped by the caller. */
RCM_API rcm_status rcm_sim_create(const rcm_config* cfg, rcm_sim** out);
RCM_API rcm_status rcm_sim_command(rcm_sim* sim, const double position[3],
                                   const double quat_xyzw[4], int clutch, double gripper,
                                   double timestamp);
RCM_API rcm_status rcm_sim_step(rcm_sim* sim, uint64_t ticks);
RCM_API rcm_status rcm_sim_state(const rcm_sim* sim, rcm_state* out);
RCM_API void rcm_sim_free(rcm_sim* sim);

#ifdef __cplusplus
}
#endif

#endif
