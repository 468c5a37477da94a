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

// Batch runners behind the command line: training with periodic evaluation,
// episode simulation from a checkpoint, verification and reference export.

#ifndef SATDOCK_RUN_HPP_
#define SATDOCK_RUN_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "satdock/config.hpp"
#include "satdock/mission.hpp"
#include "satdock/policy.hpp"
#include "satdock/verify.hpp"

namespace satdock {

struct IterationRecord {
  int iteration = 0;
  int episodes = 0;
  double mean_reward = 0.0;
  double min_reward = 0.0;
  double max_reward = 0.0;
  double mean_length = 0.0;
  int violations = 0;          // episodes leaving the tube
  long intervention_steps = 0; // decision steps with alpha > 0
  double mean_kl = 0.0;
  double surrogate = 0.0;
  double value_loss = 0.0;
  int skipped_minibatches = 0;
  int lr_halvings = 0;
};

struct EvalRecord {
  int iteration = 0;
  int episodes = 0;
  double violations_per_100 = 0.0;
  double interventions_per_100 = 0.0;
  double mean_reward = 0.0;
  double max_norm_e1 = 0.0;  // over every substep of every episode
};

struct EpisodeSummary {
  double total_reward = 0.0;
  int steps = 0;
  bool violated = false;
  int intervention_steps = 0;
  double max_norm_e1 = 0.0;
};

// One episode with actions sampled from the policy under `seed`. The
// observer, if set, sees every substep.
EpisodeSummary run_episode(const RunConfig& config, const PolicyParams& policy,
                           std::uint64_t seed,
                           const SubstepObserver& observer = {});

// Episode seeds are derived from (config.seed, iteration), so evaluations
// are reproducible and independent of the worker count.
EvalRecord evaluate(const RunConfig& config, const PolicyParams& policy,
                    int iteration);

struct TrainOptions {
  bool write_files = true;
  std::function<void(const IterationRecord&)> on_iteration;
  std::function<void(const EvalRecord&)> on_eval;
};

struct TrainResult {
  std::vector<IterationRecord> iterations;
  std::vector<EvalRecord> evals;
  Agent agent;
};

// Writes config.json, training.csv, eval.csv, checkpoint.txt and
// checkpoints/iter_NNNN.txt (at evaluation iterations) under output_dir.
TrainResult train(const RunConfig& config, const TrainOptions& options = {});

// Writes episodes/episode_NNN.csv and summary.csv under output_dir.
std::vector<EpisodeSummary> simulate(const RunConfig& config,
                                     const std::string& checkpoint_path,
                                     int episodes);

// Writes manifest.json, timings.json and pd_neighbourhood.csv under
// output_dir.
Manifest verify_run(const RunConfig& config);

// Writes reference.csv (t, y_ref, y_ref rate, psi1 tube bounds) and
// config.json under output_dir.
void export_reference(const RunConfig& config);

void write_training_csv(const std::string& path, const RunConfig& config,
                        const std::vector<IterationRecord>& rows);
void write_eval_csv(const std::string& path, const RunConfig& config,
                    const std::vector<EvalRecord>& rows);

}  // namespace satdock

#endif  // SATDOCK_RUN_HPP_
