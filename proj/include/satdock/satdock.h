/* Copyright 2026 The satdock Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to libsatdock. All functions return a satdock_status; on
 * failure satdock_last_error() gives a message for the calling thread.
 * Handles are opaque and owned by the caller (free with the matching
 * *_free function; passing NULL to *_free is allowed). */

#ifndef SATDOCK_SATDOCK_H_
#define SATDOCK_SATDOCK_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(SATDOCK_BUILDING_DLL)
#    define SATDOCK_API __declspec(dllexport)
#  else
#    define SATDOCK_API __declspec(dllimport)
#  endif
#else
#  define SATDOCK_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum satdock_status {
  SATDOCK_OK = 0,
  SATDOCK_INVALID_ARGUMENT = 1,
  SATDOCK_INVALID_CONFIG = 2,
  SATDOCK_SINGULAR_MASS_MATRIX = 3,
  SATDOCK_NON_FINITE_STATE = 4,
  SATDOCK_FUNNEL_BREACH = 5,
  SATDOCK_INFEASIBLE_START = 6,
  SATDOCK_NON_FINITE_GRADIENT = 7,
  SATDOCK_IO_ERROR = 8,
  SATDOCK_SHAPE_MISMATCH = 9,
  SATDOCK_VERIFY_FAILED = 10,
  SATDOCK_INTERNAL = 99
} satdock_status;

#define SATDOCK_STATE_SIZE 18
#define SATDOCK_ACTION_SIZE 9

typedef struct satdock_config satdock_config;
typedef struct satdock_env satdock_env;
typedef struct satdock_agent satdock_agent;

/* Progress lines during long runs. */
typedef void (*satdock_progress_fn)(const char* line, void* user);

SATDOCK_API const char* satdock_version(void);
SATDOCK_API const char* satdock_status_name(satdock_status status);
SATDOCK_API const char* satdock_last_error(void);

/* Configuration. */
SATDOCK_API satdock_status satdock_config_default(satdock_config** out);
SATDOCK_API satdock_status satdock_config_load(const char* path,
                                               satdock_config** out);
SATDOCK_API satdock_status satdock_config_parse(const char* json,
                                                satdock_config** out);
SATDOCK_API void satdock_config_free(satdock_config* config);
/* Writes up to `capacity` bytes (NUL terminated) and the full length
 * without the NUL into *length. */
SATDOCK_API satdock_status satdock_config_json(const satdock_config* config,
                                               char* buffer, size_t capacity,
                                               size_t* length);
SATDOCK_API satdock_status satdock_config_set_mode(satdock_config* config,
                                                   const char* mode);
SATDOCK_API satdock_status satdock_config_set_seed(satdock_config* config,
                                                   uint64_t seed);
SATDOCK_API satdock_status satdock_config_set_iterations(satdock_config* config,
                                                         int iterations);
SATDOCK_API satdock_status satdock_config_set_output_dir(satdock_config* config,
                                                         const char* dir);
SATDOCK_API satdock_status satdock_config_set_workers(satdock_config* config,
                                                      int workers);
SATDOCK_API satdock_status satdock_config_set_eval_episodes(
    satdock_config* config, int episodes);
/* 16 hex digits plus NUL. */
SATDOCK_API satdock_status satdock_config_hash(const satdock_config* config,
                                               char out[17]);

/* Environment. Observations are the 18-dim packed state. */
SATDOCK_API satdock_status satdock_env_create(const satdock_config* config,
                                              satdock_env** out);
SATDOCK_API void satdock_env_free(satdock_env* env);
SATDOCK_API satdock_status satdock_env_reset(satdock_env* env,
                                             double observation[18]);
SATDOCK_API satdock_status satdock_env_step(satdock_env* env,
                                            const double action[9],
                                            double observation[18],
                                            double* reward, int* done,
                                            int* violated);
SATDOCK_API satdock_status satdock_env_time(const satdock_env* env,
                                            double* t);

/* Policy checkpoints. */
SATDOCK_API satdock_status satdock_agent_load(const char* path,
                                              satdock_agent** out);
SATDOCK_API void satdock_agent_free(satdock_agent* agent);
/* Mean action (squashed into the action box). */
SATDOCK_API satdock_status satdock_agent_act(const satdock_agent* agent,
                                             const double observation[18],
                                             double action[9]);

/* Commands; outputs go to the configured output directory. */
SATDOCK_API satdock_status satdock_train(const satdock_config* config,
                                         satdock_progress_fn progress,
                                         void* user);
SATDOCK_API satdock_status satdock_simulate(const satdock_config* config,
                                            const char* checkpoint,
                                            int episodes);
/* Returns SATDOCK_VERIFY_FAILED when a check fails; the manifest is still
 * written. */
SATDOCK_API satdock_status satdock_verify(const satdock_config* config);
SATDOCK_API satdock_status satdock_export(const satdock_config* config);

#ifdef __cplusplus
}
#endif

#endif /* SATDOCK_SATDOCK_H_ */
