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

// Run configuration: every model, task and training setting in one JSON tree.

#ifndef SATDOCK_CONFIG_HPP_
#define SATDOCK_CONFIG_HPP_

#include <cstdint>
#include <string>

#include "satdock/mission.hpp"
#include "satdock/multibody.hpp"
#include "satdock/policy.hpp"

namespace satdock {

struct RunConfig {
  SatelliteParams satellite;
  MissionConfig mission;  // includes the funnel spec
  PpoConfig ppo;
  std::uint64_t seed = 0;
  int iterations = 100;
  int eval_episodes = 100;
  // Evaluations run before training, after iterations 1, 1 + k, 1 + 2k, ...
  // and after the last one.
  int eval_interval = 1;
  int workers = 0;  // 0: hardware concurrency
  std::string output_dir = "run";

  void validate() const;
  int resolved_workers() const;
  bool evaluates_at(int iteration) const;

  bool operator==(const RunConfig&) const = default;
};

// Canonical JSON (sorted keys, round-trip doubles).
std::string to_json(const RunConfig& config, int indent = 2);

// Missing keys keep their defaults; unknown keys are errors. Throws
// InvalidConfig with the offending field path.
RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::string& path);
void save_config(const std::string& path, const RunConfig& config);

// FNV-1a over the canonical JSON of everything that affects results
// (output_dir and workers excluded), as 16 hex digits.
std::string config_hash(const RunConfig& config);

// "# config_hash=<hash> seed=<seed>" header line for output files.
std::string provenance_line(const RunConfig& config);

}  // namespace satdock

#endif  // SATDOCK_CONFIG_HPP_
