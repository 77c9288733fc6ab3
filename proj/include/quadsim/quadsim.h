/*
 * quadsim C API.
 *
 * Quadrotor rotational-dynamics environment behind opaque handles. Every
 * function returns a quadsim_status; on failure a thread-local diagnostic is
 * available from quadsim_last_error(). Strings returned through char** out
 * parameters are heap-allocated and must be released with quadsim_string_free.
 */
#ifndef QUADSIM_QUADSIM_H
#define QUADSIM_QUADSIM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define QUADSIM_API __declspec(dllexport)
#else
#define QUADSIM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum quadsim_status {
  QUADSIM_OK = 0,
  QUADSIM_ERR_INVALID_ARGUMENT = 1,
  QUADSIM_ERR_INVALID_PARAMS = 2,
  QUADSIM_ERR_INVALID_CONFIG = 3,
  QUADSIM_ERR_INTEGRATION = 4,
  QUADSIM_ERR_LIFECYCLE = 5,
  QUADSIM_ERR_IO = 6,
  QUADSIM_ERR_PROTOCOL = 7,
  QUADSIM_ERR_INTERNAL = 99
} quadsim_status;

typedef struct quadsim_env quadsim_env;
typedef struct quadsim_controller quadsim_controller;

typedef struct quadsim_step_result {
  double observation[6];
  double reward;
  int done;
  double state[6];
  double reference[6];
  double clamped_action[3];
  double realized_torque[3];
  double motor_speeds[4];
  int saturated;
  double time;
} quadsim_step_result;

typedef struct quadsim_limits {
  double w_min;
  double w_max;
  double u_max[3];
  double u_min[3];
  double hard[6];
  double soft[6];
  int steps_per_episode;
} quadsim_limits;

/* Options shared by the high-level entry points. Zero-initialize, then set
 * what you need; NULL strings and has_* == 0 mean "use the config value". */
typedef struct quadsim_options {
  const char* config_path;  /* JSON config file, NULL for built-in defaults */
  int has_seed;
  uint64_t seed;
  const char* dynamics;     /* "linear" | "nonlinear" | NULL */
  int stochastic;           /* nonzero forces stochastic mode */
  const char* out_dir;      /* output directory for artifacts */
  const char* controller;   /* "pid" | "zero" | "random"; comma list for compare */
  const char* axis;         /* "roll" | "pitch" | "yaw" */
  int has_step_amplitude;
  double step_amplitude;    /* rad */
  int workers;
  int episodes;             /* episodes per env (batch) */
  int envs;                 /* number of environments (batch) */
} quadsim_options;

QUADSIM_API const char* quadsim_version(void);
QUADSIM_API const char* quadsim_last_error(void);
QUADSIM_API void quadsim_string_free(char* s);

/* Environment lifecycle. config_json may be NULL or a (partial) JSON object
 * with EnvConfig keys; absent keys take their defaults. */
QUADSIM_API quadsim_status quadsim_env_create(const char* config_json, quadsim_env** out);
QUADSIM_API quadsim_status quadsim_env_create_from_file(const char* path, quadsim_env** out);
QUADSIM_API void quadsim_env_destroy(quadsim_env* env);
QUADSIM_API quadsim_status quadsim_env_reset(quadsim_env* env, double observation[6]);
QUADSIM_API quadsim_status quadsim_env_step(quadsim_env* env, const double action[3], quadsim_step_result* out);
QUADSIM_API quadsim_status quadsim_env_seed(quadsim_env* env, uint64_t seed);
QUADSIM_API quadsim_status quadsim_env_limits(const quadsim_env* env, quadsim_limits* out);
QUADSIM_API quadsim_status quadsim_env_state(const quadsim_env* env, double state[6]);

/* Controllers: kind is "pid", "zero" or "random". pid_json may be NULL or a
 * JSON object with kp/ki/kd/integral_clamp. Limits come from env. */
QUADSIM_API quadsim_status quadsim_controller_create(const char* kind, const char* pid_json, const quadsim_env* env,
                                                     uint64_t seed, quadsim_controller** out);
QUADSIM_API void quadsim_controller_destroy(quadsim_controller* controller);
QUADSIM_API quadsim_status quadsim_controller_act(quadsim_controller* controller, const double observation[6],
                                                  double dt, double action[3]);
QUADSIM_API quadsim_status quadsim_controller_reset(quadsim_controller* controller);

/* Step-response metrics of a sampled response; out_json receives a JSON object. */
QUADSIM_API quadsim_status quadsim_step_metrics(const double* time, const double* response, size_t n,
                                                double step_ref, char** out_json);

/* High-level harness. Each writes a JSON report into *out_json. */
QUADSIM_API quadsim_status quadsim_run(const quadsim_options* opts, char** out_json);
QUADSIM_API quadsim_status quadsim_compare(const quadsim_options* opts, char** out_json);
QUADSIM_API quadsim_status quadsim_batch(const quadsim_options* opts, char** out_json);
QUADSIM_API quadsim_status quadsim_limits_report(const quadsim_options* opts, char** out_text);

/* Blocking servers. port 0 picks an ephemeral port; the bound port is
 * written to stderr before serving. */
QUADSIM_API quadsim_status quadsim_serve_tcp(const quadsim_options* opts, const char* host, int port);
QUADSIM_API quadsim_status quadsim_serve_stdio(const quadsim_options* opts);

#ifdef __cplusplus
}
#endif

#endif /* QUADSIM_QUADSIM_H */
