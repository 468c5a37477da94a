// Copyright 2026 The satdock Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "satdock/satdock.h"

#include <cstring>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "satdock/config.hpp"
#include "satdock/errors.hpp"
#include "satdock/mission.hpp"
#include "satdock/run.hpp"

struct satdock_config {
  satdock::RunConfig config;
};

struct satdock_env {
  explicit satdock_env(const satdock::RunConfig& c)
      : env(c.mission, c.satellite) {}
  satdock::DockingEnv env;
};

struct satdock_agent {
  satdock::Agent agent;
};

namespace {

thread_local std::string g_last_error;

satdock_status fail(satdock_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs body() and maps exceptions to status codes.
template <typename Fn>
satdock_status guarded(Fn&& body) {
  try {
    g_last_error.clear();
    return body();
  } catch (const satdock::Error& e) {
    return fail(static_cast<satdock_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(SATDOCK_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SATDOCK_INTERNAL, e.what());
  } catch (...) {
    return fail(SATDOCK_INTERNAL, "unknown error");
  }
}

#define SATDOCK_REQUIRE(cond, what) \
  if (!(cond)) return fail(SATDOCK_INVALID_ARGUMENT, what)

}  // namespace

extern "C" {

const char* satdock_version(void) { return "0.1.0"; }

const char* satdock_status_name(satdock_status status) {
  if (status == SATDOCK_VERIFY_FAILED) return "verify_failed";
  return satdock::error_code_name(static_cast<satdock::ErrorCode>(status));
}

const char* satdock_last_error(void) { return g_last_error.c_str(); }

satdock_status satdock_config_default(satdock_config** out) {
  SATDOCK_REQUIRE(out, "out is null");
  return guarded([&] {
    *out = new satdock_config{};
    return SATDOCK_OK;
  });
}

satdock_status satdock_config_load(const char* path, satdock_config** out) {
  SATDOCK_REQUIRE(path && out, "null argument");
  return guarded([&] {
    *out = new satdock_config{satdock::load_config(path)};
    return SATDOCK_OK;
  });
}

satdock_status satdock_config_parse(const char* json, satdock_config** out) {
  SATDOCK_REQUIRE(json && out, "null argument");
  return guarded([&] {
    *out = new satdock_config{satdock::config_from_json(json)};
    return SATDOCK_OK;
  });
}

void satdock_config_free(satdock_config* config) { delete config; }

satdock_status satdock_config_json(const satdock_config* config, char* buffer,
                                   size_t capacity, size_t* length) {
  SATDOCK_REQUIRE(config, "config is null");
  return guarded([&] {
    const std::string text = satdock::to_json(config->config);
    if (length) *length = text.size();
    if (buffer && capacity > 0) {
      const size_t n = std::min(capacity - 1, text.size());
      std::memcpy(buffer, text.data(), n);
      buffer[n] = '\0';
    }
    return SATDOCK_OK;
  });
}

satdock_status satdock_config_set_mode(satdock_config* config, const char* mode) {
  SATDOCK_REQUIRE(config && mode, "null argument");
  return guarded([&] {
    config->config.mission.mode = satdock::parse_mode(mode);
    return SATDOCK_OK;
  });
}

satdock_status satdock_config_set_seed(satdock_config* config, uint64_t seed) {
  SATDOCK_REQUIRE(config, "config is null");
  config->config.seed = seed;
  return SATDOCK_OK;
}

satdock_status satdock_config_set_iterations(satdock_config* config, int iterations) {
  SATDOCK_REQUIRE(config, "config is null");
  if (iterations < 0) return fail(SATDOCK_INVALID_CONFIG, "iterations: must be >= 0");
  config->config.iterations = iterations;
  return SATDOCK_OK;
}

satdock_status satdock_config_set_output_dir(satdock_config* config, const char* dir) {
  SATDOCK_REQUIRE(config && dir, "null argument");
  if (!*dir) return fail(SATDOCK_INVALID_CONFIG, "output_dir: must not be empty");
  return guarded([&] {
    config->config.output_dir = dir;
    return SATDOCK_OK;
  });
}

satdock_status satdock_config_set_workers(satdock_config* config, int workers) {
  SATDOCK_REQUIRE(config, "config is null");
  if (workers < 0) return fail(SATDOCK_INVALID_CONFIG, "workers: must be >= 0");
  config->config.workers = workers;
  return SATDOCK_OK;
}

satdock_status satdock_config_set_eval_episodes(satdock_config* config, int episodes) {
  SATDOCK_REQUIRE(config, "config is null");
  if (episodes < 0) return fail(SATDOCK_INVALID_CONFIG, "eval_episodes: must be >= 0");
  config->config.eval_episodes = episodes;
  return SATDOCK_OK;
}

satdock_status satdock_config_hash(const satdock_config* config, char out[17]) {
  SATDOCK_REQUIRE(config && out, "null argument");
  return guarded([&] {
    const std::string h = satdock::config_hash(config->config);
    std::memcpy(out, h.c_str(), 17);
    return SATDOCK_OK;
  });
}

satdock_status satdock_env_create(const satdock_config* config, satdock_env** out) {
  SATDOCK_REQUIRE(config && out, "null argument");
  return guarded([&] {
    config->config.validate();
    *out = new satdock_env(config->config);
    return SATDOCK_OK;
  });
}

void satdock_env_free(satdock_env* env) { delete env; }

satdock_status satdock_env_reset(satdock_env* env, double observation[18]) {
  SATDOCK_REQUIRE(env, "env is null");
  return guarded([&] {
    const satdock::VectorXd obs = env->env.reset();
    if (observation) std::memcpy(observation, obs.data(), 18 * sizeof(double));
    return SATDOCK_OK;
  });
}

satdock_status satdock_env_step(satdock_env* env, const double action[9],
                                double observation[18], double* reward,
                                int* done, int* violated) {
  SATDOCK_REQUIRE(env && action, "null argument");
  return guarded([&] {
    const satdock::StepOutcome o =
        env->env.advance(Eigen::Map<const satdock::Vec9>(action));
    if (observation) {
      const satdock::Vec18 s = o.next_state.packed();
      std::memcpy(observation, s.data(), 18 * sizeof(double));
    }
    if (reward) *reward = o.reward;
    if (done) *done = o.done ? 1 : 0;
    if (violated) *violated = o.violated ? 1 : 0;
    return SATDOCK_OK;
  });
}

satdock_status satdock_env_time(const satdock_env* env, double* t) {
  SATDOCK_REQUIRE(env && t, "null argument");
  *t = env->env.time();
  return SATDOCK_OK;
}

satdock_status satdock_agent_load(const char* path, satdock_agent** out) {
  SATDOCK_REQUIRE(path && out, "null argument");
  return guarded([&] {
    std::ifstream in(path);
    if (!in) throw satdock::IoError(std::string("cannot open checkpoint '") + path + "'");
    *out = new satdock_agent{satdock::load_checkpoint(in)};
    return SATDOCK_OK;
  });
}

void satdock_agent_free(satdock_agent* agent) { delete agent; }

satdock_status satdock_agent_act(const satdock_agent* agent,
                                 const double observation[18], double action[9]) {
  SATDOCK_REQUIRE(agent && observation && action, "null argument");
  return guarded([&] {
    const auto& policy = agent->agent.policy;
    if (policy.mean.input_size() != 18 || policy.mean.output_size() != 9)
      throw satdock::ShapeMismatch("agent is not an 18 -> 9 policy");
    const satdock::VectorXd obs = Eigen::Map<const satdock::VectorXd>(observation, 18);
    const satdock::VectorXd a = policy.squash(policy.mean.forward(obs));
    std::memcpy(action, a.data(), 9 * sizeof(double));
    return SATDOCK_OK;
  });
}

satdock_status satdock_train(const satdock_config* config,
                             satdock_progress_fn progress, void* user) {
  SATDOCK_REQUIRE(config, "config is null");
  return guarded([&] {
    satdock::TrainOptions options;
    if (progress) {
      options.on_iteration = [&](const satdock::IterationRecord& r) {
        std::ostringstream line;
        line << "iteration=" << r.iteration << " mean_reward=" << r.mean_reward
             << " violations=" << r.violations
             << " intervention_steps=" << r.intervention_steps
             << " kl=" << r.mean_kl;
        progress(line.str().c_str(), user);
      };
      options.on_eval = [&](const satdock::EvalRecord& r) {
        std::ostringstream line;
        line << "eval iteration=" << r.iteration << " mean_reward=" << r.mean_reward
             << " violations_per_100=" << r.violations_per_100
             << " interventions_per_100=" << r.interventions_per_100;
        progress(line.str().c_str(), user);
      };
    }
    satdock::train(config->config, options);
    return SATDOCK_OK;
  });
}

satdock_status satdock_simulate(const satdock_config* config,
                                const char* checkpoint, int episodes) {
  SATDOCK_REQUIRE(config && checkpoint, "null argument");
  return guarded([&] {
    satdock::simulate(config->config, checkpoint, episodes);
    return SATDOCK_OK;
  });
}

satdock_status satdock_verify(const satdock_config* config) {
  SATDOCK_REQUIRE(config, "config is null");
  return guarded([&] {
    const satdock::Manifest m = satdock::verify_run(config->config);
    if (!m.pass) {
      std::string failed;
      for (const auto& c : m.checks)
        if (!c.pass) failed += (failed.empty() ? "" : ",") + c.name;
      return fail(SATDOCK_VERIFY_FAILED, "verification failed: " + failed);
    }
    return SATDOCK_OK;
  });
}

satdock_status satdock_export(const satdock_config* config) {
  SATDOCK_REQUIRE(config, "config is null");
  return guarded([&] {
    satdock::export_reference(config->config);
    return SATDOCK_OK;
  });
}

}  // extern "C"
