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

#include "satdock/run.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <thread>

#include "satdock/errors.hpp"

namespace satdock {
namespace {

namespace fs = std::filesystem;

// Seed streams.
constexpr std::uint64_t kTrainStream = 0;
constexpr std::uint64_t kEvalStream = 1;
constexpr std::uint64_t kUpdateStream = 2;
constexpr std::uint64_t kInitStream = 3;
constexpr std::uint64_t kSimulateStream = 4;

void make_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.precision(17);
  return out;
}

void close_out(std::ofstream& out, const std::string& path) {
  out.close();
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

std::string padded(int value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*d", width, value);
  return buf;
}

// Runs fn(i) for i in [0, n) on up to `workers` threads; results land by
// index so the output does not depend on scheduling.
template <typename T, typename Fn>
std::vector<T> parallel_map(int n, int workers, Fn fn) {
  std::vector<T> out(static_cast<std::size_t>(n));
  const int w = std::clamp(workers, 1, std::max(n, 1));
  if (w == 1) {
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = fn(i);
    return out;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(w));
  std::vector<std::thread> pool;
  for (int k = 0; k < w; ++k) {
    pool.emplace_back([&, k] {
      try {
        for (int i = next++; i < n; i = next++) out[static_cast<std::size_t>(i)] = fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(k)] = std::current_exception();
        next = n;
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

Agent initial_agent(const RunConfig& config) {
  Rng rng(derive_seed(config.seed, 0, 0, kInitStream));
  return Agent::create(18, action_half_width(), config.ppo, rng,
                       observation_scale(config.mission));
}

void save_agent(const std::string& path, const Agent& agent, const RunConfig& config) {
  std::ofstream out = open_out(path);
  save_checkpoint(out, agent, config_hash(config));
  close_out(out, path);
}

}  // namespace

EpisodeSummary run_episode(const RunConfig& config, const PolicyParams& policy,
                           std::uint64_t seed, const SubstepObserver& observer) {
  DockingEnv env(config.mission, config.satellite);
  EpisodeSummary s;
  if (observer) {
    env.set_observer([&](const SubstepRecord& r) {
      s.max_norm_e1 = std::max(s.max_norm_e1, r.norm_e1);
      observer(r);
    });
  } else {
    env.set_observer([&](const SubstepRecord& r) {
      s.max_norm_e1 = std::max(s.max_norm_e1, r.norm_e1);
    });
  }
  Rng rng(seed);
  VectorXd obs = env.reset();
  const int n = config.mission.step_count();
  for (int k = 0; k < n; ++k) {
    const ActionSample a = policy_sample(policy, obs, rng);
    const StepOutcome o = env.advance(Vec9(a.action));
    s.total_reward += o.reward;
    ++s.steps;
    s.violated = s.violated || o.violated;
    if (o.intervened) ++s.intervention_steps;
    obs = o.next_state.packed();
    if (o.done) break;
  }
  return s;
}

EvalRecord evaluate(const RunConfig& config, const PolicyParams& policy,
                    int iteration) {
  const int n = config.eval_episodes;
  const auto episodes = parallel_map<EpisodeSummary>(
      n, config.resolved_workers(), [&](int e) {
        return run_episode(config, policy,
                           derive_seed(config.seed, static_cast<std::uint64_t>(iteration),
                                       static_cast<std::uint64_t>(e), kEvalStream));
      });
  EvalRecord r;
  r.iteration = iteration;
  r.episodes = n;
  if (n == 0) return r;
  int violations = 0;
  long interventions = 0;
  double reward = 0.0;
  for (const EpisodeSummary& s : episodes) {
    violations += s.violated ? 1 : 0;
    interventions += s.intervention_steps;
    reward += s.total_reward;
    r.max_norm_e1 = std::max(r.max_norm_e1, s.max_norm_e1);
  }
  r.violations_per_100 = 100.0 * violations / n;
  r.interventions_per_100 = 100.0 * static_cast<double>(interventions) / n;
  r.mean_reward = reward / n;
  return r;
}

void write_training_csv(const std::string& path, const RunConfig& config,
                        const std::vector<IterationRecord>& rows) {
  std::ofstream out = open_out(path);
  out << provenance_line(config) << '\n';
  out << "iteration,episodes,mean_reward,min_reward,max_reward,mean_length,"
         "violations,intervention_steps,mean_kl,surrogate,value_loss,"
         "skipped_minibatches,lr_halvings\n";
  for (const IterationRecord& r : rows) {
    out << r.iteration << ',' << r.episodes << ',' << r.mean_reward << ','
        << r.min_reward << ',' << r.max_reward << ',' << r.mean_length << ','
        << r.violations << ',' << r.intervention_steps << ',' << r.mean_kl << ','
        << r.surrogate << ',' << r.value_loss << ',' << r.skipped_minibatches
        << ',' << r.lr_halvings << '\n';
  }
  close_out(out, path);
}

void write_eval_csv(const std::string& path, const RunConfig& config,
                    const std::vector<EvalRecord>& rows) {
  std::ofstream out = open_out(path);
  out << provenance_line(config) << '\n';
  out << "iteration,violations_per_100,interventions_per_100,mean_reward,"
         "episodes,max_norm_e1\n";
  for (const EvalRecord& r : rows) {
    out << r.iteration << ',' << r.violations_per_100 << ','
        << r.interventions_per_100 << ',' << r.mean_reward << ',' << r.episodes
        << ',' << r.max_norm_e1 << '\n';
  }
  close_out(out, path);
}

TrainResult train(const RunConfig& config, const TrainOptions& options) {
  config.validate();
  const std::string& dir = config.output_dir;
  if (options.write_files) {
    make_dir(join(dir, "checkpoints"));
    save_config(join(dir, "config.json"), config);
  }

  TrainResult result;
  result.agent = initial_agent(config);
  AdamState optimizer(result.agent.parameter_count());
  const int workers = config.resolved_workers();
  const int max_steps = config.mission.step_count();
  const EnvFactory factory = [&config]() -> std::unique_ptr<Environment> {
    return std::make_unique<DockingEnv>(config.mission, config.satellite);
  };

  auto checkpoint_and_eval = [&](int iteration) {
    if (!config.evaluates_at(iteration)) return;
    if (options.write_files)
      save_agent(join(dir, "checkpoints/iter_" + padded(iteration, 4) + ".txt"),
                 result.agent, config);
    if (config.eval_episodes == 0) return;
    result.evals.push_back(evaluate(config, result.agent.policy, iteration));
    if (options.on_eval) options.on_eval(result.evals.back());
    if (options.write_files) write_eval_csv(join(dir, "eval.csv"), config, result.evals);
  };

  checkpoint_and_eval(0);
  for (int it = 1; it <= config.iterations; ++it) {
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(config.ppo.episodes_per_iteration));
    for (std::size_t e = 0; e < seeds.size(); ++e)
      seeds[e] = derive_seed(config.seed, static_cast<std::uint64_t>(it), e, kTrainStream);
    const std::vector<Trajectory> batch =
        rollout(factory, result.agent.policy, seeds, max_steps, workers);
    const Targets targets = returns_and_advantages(batch, result.agent.value, config.ppo);
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(it), 0, kUpdateStream));
    const UpdateStats stats = ppo_update(batch, targets, result.agent, optimizer, config.ppo, rng);

    IterationRecord r;
    r.iteration = it;
    r.episodes = static_cast<int>(batch.size());
    r.min_reward = batch.front().total_reward();
    r.max_reward = r.min_reward;
    double sum = 0.0, length = 0.0;
    for (const Trajectory& t : batch) {
      const double tr = t.total_reward();
      sum += tr;
      length += static_cast<double>(t.steps.size());
      r.min_reward = std::min(r.min_reward, tr);
      r.max_reward = std::max(r.max_reward, tr);
      r.violations += t.any_violation() ? 1 : 0;
      r.intervention_steps += t.intervention_steps();
    }
    r.mean_reward = sum / static_cast<double>(batch.size());
    r.mean_length = length / static_cast<double>(batch.size());
    r.mean_kl = stats.mean_kl;
    r.surrogate = stats.surrogate;
    r.value_loss = stats.value_loss;
    r.skipped_minibatches = stats.skipped_minibatches;
    r.lr_halvings = stats.lr_halvings;
    result.iterations.push_back(r);
    if (options.on_iteration) options.on_iteration(r);
    if (options.write_files)
      write_training_csv(join(dir, "training.csv"), config, result.iterations);
    checkpoint_and_eval(it);
  }
  if (options.write_files) {
    if (config.iterations == 0) write_training_csv(join(dir, "training.csv"), config, {});
    save_agent(join(dir, "checkpoint.txt"), result.agent, config);
  }
  return result;
}

std::vector<EpisodeSummary> simulate(const RunConfig& config,
                                     const std::string& checkpoint_path,
                                     int episodes) {
  config.validate();
  if (episodes < 1) throw InvalidArgument("simulate: episode count must be >= 1");
  std::ifstream in(checkpoint_path);
  if (!in) throw IoError("cannot open checkpoint '" + checkpoint_path + "'");
  const Agent agent = load_checkpoint(in);
  const Mlp& mean = agent.policy.mean;
  std::vector<int> expected{18};
  expected.insert(expected.end(), config.ppo.hidden_sizes.begin(), config.ppo.hidden_sizes.end());
  expected.push_back(9);
  if (mean.sizes() != expected)
    throw ShapeMismatch("simulate: checkpoint policy shape does not match the config");

  const std::string dir = config.output_dir;
  make_dir(join(dir, "episodes"));
  const std::string provenance = provenance_line(config);
  const auto summaries = parallel_map<EpisodeSummary>(
      episodes, config.resolved_workers(), [&](int e) {
        const std::string path = join(dir, "episodes/episode_" + padded(e, 3) + ".csv");
        std::ofstream out = open_out(path);
        EpisodeCsvWriter writer(out, provenance + " episode=" + std::to_string(e));
        const EpisodeSummary s = run_episode(
            config, agent.policy,
            derive_seed(config.seed, 0, static_cast<std::uint64_t>(e), kSimulateStream),
            [&](const SubstepRecord& r) { writer(r); });
        close_out(out, path);
        return s;
      });

  const std::string path = join(dir, "summary.csv");
  std::ofstream out = open_out(path);
  out << provenance << '\n';
  out << "episode,total_reward,steps,violated,intervention_steps,max_norm_e1\n";
  for (std::size_t e = 0; e < summaries.size(); ++e) {
    const EpisodeSummary& s = summaries[e];
    out << e << ',' << s.total_reward << ',' << s.steps << ',' << (s.violated ? 1 : 0)
        << ',' << s.intervention_steps << ',' << s.max_norm_e1 << '\n';
  }
  close_out(out, path);
  return summaries;
}

Manifest verify_run(const RunConfig& config) {
  config.validate();
  VerifyConfig vc;
  vc.seed = config.seed;
  vc.workers = config.resolved_workers();
  const Manifest m = run_all(config.satellite, vc);
  const std::string dir = config.output_dir;
  make_dir(dir);
  {
    const std::string path = join(dir, "manifest.json");
    std::ofstream out = open_out(path);
    out << manifest_json(m, vc, config_hash(config)) << '\n';
    close_out(out, path);
  }
  {
    const std::string path = join(dir, "timings.json");
    std::ofstream out = open_out(path);
    out << timings_json(m, config_hash(config)) << '\n';
    close_out(out, path);
  }
  {
    const std::string path = join(dir, "pd_neighbourhood.csv");
    std::ofstream out = open_out(path);
    out << provenance_line(config) << '\n';
    write_pd_neighbourhood_csv(out, config.satellite, vc.grid, m.pd);
    close_out(out, path);
  }
  return m;
}

void export_reference(const RunConfig& config) {
  config.validate();
  const std::string dir = config.output_dir;
  make_dir(dir);
  save_config(join(dir, "config.json"), config);
  const Reference ref = docking_reference();
  const std::string path = join(dir, "reference.csv");
  std::ofstream out = open_out(path);
  out << provenance_line(config) << '\n';
  static const char* names[9] = {"x", "y", "z", "phi", "theta", "psi",
                                 "theta1", "psi1", "theta2"};
  out << 't';
  for (const char* n : names) out << ",ref_" << n;
  for (const char* n : names) out << ",ref_" << n << "_rate";
  out << ",psi1_lower,psi1_upper\n";
  const double dt = config.mission.dt_sub;
  const long n = step_count(0.0, config.mission.horizon, dt);
  for (long k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * dt;
    const Vec9 y = ref.value(t);
    const Vec9 yd = ref.rate(t);
    const double radius = config.mission.funnel.boundary.radius(t) /
                          config.mission.funnel.weights[7];
    out << t;
    for (int i = 0; i < 9; ++i) out << ',' << y[i];
    for (int i = 0; i < 9; ++i) out << ',' << yd[i];
    out << ',' << y[7] - radius << ',' << y[7] + radius << '\n';
  }
  close_out(out, path);
}

}  // namespace satdock
