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

#include "satdock/policy.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "satdock/errors.hpp"

namespace satdock {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller; 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * 3.14159265358979323846 * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t iteration,
                          std::uint64_t slot, std::uint64_t stream) {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ iteration);
  h = splitmix64(h ^ slot);
  return splitmix64(h ^ stream);
}

void PpoConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw InvalidConfig("ppo." + field + ": " + why);
  };
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    fail("learning_rate", "must be finite and > 0");
  if (!(discount > 0.0 && discount <= 1.0)) fail("discount", "must lie in (0, 1]");
  if (!(kl_coef >= 0.0) || !std::isfinite(kl_coef))
    fail("kl_coef", "must be finite and >= 0");
  if (minibatch_size < 1) fail("minibatch_size", "must be >= 1");
  if (episodes_per_iteration < 1) fail("episodes_per_iteration", "must be >= 1");
  if (epochs < 1) fail("epochs", "must be >= 1");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) fail("gae_lambda", "must lie in [0, 1]");
  if (!(value_loss_weight >= 0.0) || !std::isfinite(value_loss_weight))
    fail("value_loss_weight", "must be finite and >= 0");
  if (hidden_sizes.empty()) fail("hidden_sizes", "need at least one hidden layer");
  for (int h : hidden_sizes)
    if (h < 1) fail("hidden_sizes", "layer widths must be >= 1");
  if (!(init_std_fraction > 0.0) || !std::isfinite(init_std_fraction))
    fail("init_std_fraction", "must be finite and > 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) fail("adam_beta1", "must lie in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) fail("adam_beta2", "must lie in [0, 1)");
  if (!(adam_epsilon > 0.0)) fail("adam_epsilon", "must be > 0");
  if (max_lr_halvings < 0) fail("max_lr_halvings", "must be >= 0");
}

// ---------------------------------------------------------------------------
// Mlp

Mlp::Mlp(std::vector<int> sizes, Rng& rng, double output_gain)
    : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw InvalidArgument("Mlp: need at least two sizes");
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const int fan_in = sizes_[l];
    const int fan_out = sizes_[l + 1];
    const bool last = l + 2 == sizes_.size();
    const double limit =
        std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)) *
        (last ? output_gain : 1.0);
    MatrixXd W(fan_out, fan_in);
    for (int c = 0; c < fan_in; ++c)
      for (int r = 0; r < fan_out; ++r) W(r, c) = limit * (2.0 * rng.uniform() - 1.0);
    weights_.push_back(std::move(W));
    biases_.push_back(VectorXd::Zero(fan_out));
  }
}

void Mlp::set_scales(VectorXd input_scale, VectorXd output_scale) {
  if (input_scale.size() != 0 && input_scale.size() != sizes_.front())
    throw ShapeMismatch("Mlp: input scale has wrong size");
  if (output_scale.size() != 0 && output_scale.size() != sizes_.back())
    throw ShapeMismatch("Mlp: output scale has wrong size");
  input_scale_ = std::move(input_scale);
  output_scale_ = std::move(output_scale);
}

VectorXd Mlp::forward(const VectorXd& x) const {
  VectorXd h = input_scale_.size() ? VectorXd(x.cwiseProduct(input_scale_)) : x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    VectorXd z = weights_[l] * h + biases_[l];
    h = (l + 1 < weights_.size()) ? VectorXd(z.array().tanh()) : z;
  }
  if (output_scale_.size()) h = h.cwiseProduct(output_scale_);
  return h;
}

VectorXd Mlp::forward(const VectorXd& x, Cache& cache) const {
  cache.activations.clear();
  cache.activations.push_back(input_scale_.size() ? VectorXd(x.cwiseProduct(input_scale_)) : x);
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    VectorXd z = weights_[l] * cache.activations.back() + biases_[l];
    if (l + 1 < weights_.size()) z = z.array().tanh();
    cache.activations.push_back(std::move(z));
  }
  if (output_scale_.size()) cache.activations.back() = cache.activations.back().cwiseProduct(output_scale_);
  return cache.activations.back();
}

void Mlp::backward(const Cache& cache, const VectorXd& grad_out,
                   std::span<double> grad) const {
  // dL/d(pre-activation) of the current layer
  VectorXd delta = output_scale_.size() ? VectorXd(grad_out.cwiseProduct(output_scale_)) : grad_out;
  for (std::size_t l = weights_.size(); l-- > 0;) {
    const VectorXd& input = cache.activations[l];
    const std::size_t off = layer_offset(l);
    const auto rows = weights_[l].rows();
    const auto cols = weights_[l].cols();
    Eigen::Map<MatrixXd> gW(grad.data() + off, rows, cols);
    Eigen::Map<VectorXd> gb(grad.data() + off + rows * cols, rows);
    gW.noalias() += delta * input.transpose();
    gb += delta;
    if (l > 0) {
      VectorXd back = weights_[l].transpose() * delta;
      // input = tanh(previous pre-activation)
      delta = back.array() * (1.0 - input.array().square());
    }
  }
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l)
    n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  return n;
}

std::size_t Mlp::layer_offset(std::size_t layer) const {
  std::size_t off = 0;
  for (std::size_t l = 0; l < layer; ++l)
    off += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  return off;
}

std::size_t Mlp::layer_size(std::size_t layer) const {
  return static_cast<std::size_t>(weights_[layer].size() +
                                  biases_[layer].size());
}

void Mlp::copy_to(std::span<double> out) const {
  std::size_t off = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    std::copy_n(weights_[l].data(), weights_[l].size(), out.data() + off);
    off += static_cast<std::size_t>(weights_[l].size());
    std::copy_n(biases_[l].data(), biases_[l].size(), out.data() + off);
    off += static_cast<std::size_t>(biases_[l].size());
  }
}

void Mlp::copy_from(std::span<const double> in) {
  std::size_t off = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    std::copy_n(in.data() + off, weights_[l].size(), weights_[l].data());
    off += static_cast<std::size_t>(weights_[l].size());
    std::copy_n(in.data() + off, biases_[l].size(), biases_[l].data());
    off += static_cast<std::size_t>(biases_[l].size());
  }
}

// ---------------------------------------------------------------------------
// Policy

VectorXd PolicyParams::squash(const VectorXd& z) const {
  return half_width.array() * (z.array() / half_width.array()).tanh();
}

Agent Agent::create(int observation_size, const VectorXd& half_width,
                    const PpoConfig& config, Rng& rng,
                    const VectorXd& observation_scale) {
  config.validate();
  const int action_size = static_cast<int>(half_width.size());
  std::vector<int> policy_sizes{observation_size};
  policy_sizes.insert(policy_sizes.end(), config.hidden_sizes.begin(),
                      config.hidden_sizes.end());
  std::vector<int> value_sizes = policy_sizes;
  policy_sizes.push_back(action_size);
  value_sizes.push_back(1);

  Agent agent;
  agent.policy.mean = Mlp(policy_sizes, rng, 0.01);
  agent.policy.half_width = half_width;
  agent.policy.log_std =
      (config.init_std_fraction * half_width.array()).log().matrix();
  agent.value.net = Mlp(value_sizes, rng, 1.0);
  agent.policy.mean.set_scales(observation_scale, half_width);
  agent.value.net.set_scales(observation_scale, VectorXd());
  return agent;
}

std::size_t Agent::parameter_count() const {
  return policy.mean.parameter_count() +
         static_cast<std::size_t>(policy.log_std.size()) +
         value.net.parameter_count();
}

VectorXd Agent::flat() const {
  VectorXd out(static_cast<Eigen::Index>(parameter_count()));
  std::span<double> all(out.data(), parameter_count());
  const std::size_t n_mean = policy.mean.parameter_count();
  const auto n_std = static_cast<std::size_t>(policy.log_std.size());
  policy.mean.copy_to(all.subspan(0, n_mean));
  std::copy_n(policy.log_std.data(), n_std, all.data() + n_mean);
  value.net.copy_to(all.subspan(n_mean + n_std));
  return out;
}

void Agent::set_flat(const VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != parameter_count()) {
    throw ShapeMismatch("Agent::set_flat: wrong parameter count");
  }
  std::span<const double> all(flat.data(), parameter_count());
  const std::size_t n_mean = policy.mean.parameter_count();
  const auto n_std = static_cast<std::size_t>(policy.log_std.size());
  policy.mean.copy_from(all.subspan(0, n_mean));
  std::copy_n(all.data() + n_mean, n_std, policy.log_std.data());
  value.net.copy_from(all.subspan(n_mean + n_std));
}

double Agent::value_of(const VectorXd& observation) const {
  return value.net.forward(observation)[0];
}

double gaussian_logprob(const VectorXd& z, const VectorXd& mean,
                        const VectorXd& log_std) {
  const auto scaled = (z - mean).array() * (-log_std.array()).exp();
  return -0.5 * scaled.square().sum() - log_std.sum() -
         0.5 * static_cast<double>(z.size()) * kLog2Pi;
}

double gaussian_kl(const VectorXd& mean_old, const VectorXd& log_std_old,
                   const VectorXd& mean_new, const VectorXd& log_std_new) {
  const auto var_old = (2.0 * log_std_old.array()).exp();
  const auto var_new = (2.0 * log_std_new.array()).exp();
  const auto diff2 = (mean_old - mean_new).array().square();
  return (log_std_new.array() - log_std_old.array() +
          (var_old + diff2) / (2.0 * var_new) - 0.5)
      .sum();
}

ActionSample policy_sample(const PolicyParams& params,
                           const VectorXd& observation, Rng& rng) {
  ActionSample out;
  out.mean = params.mean.forward(observation);
  VectorXd noise(out.mean.size());
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise[i] = rng.normal();
  out.raw = out.mean + (params.log_std.array().exp() * noise.array()).matrix();
  out.action = params.squash(out.raw);
  out.logprob = gaussian_logprob(out.raw, out.mean, params.log_std);
  return out;
}

// ---------------------------------------------------------------------------
// Rollouts

double Trajectory::total_reward() const {
  double sum = 0.0;
  for (const auto& s : steps) sum += s.reward;
  return sum;
}

bool Trajectory::any_violation() const {
  return std::any_of(steps.begin(), steps.end(),
                     [](const Transition& s) { return s.violated; });
}

int Trajectory::intervention_steps() const {
  return static_cast<int>(std::count_if(
      steps.begin(), steps.end(),
      [](const Transition& s) { return s.intervened; }));
}

namespace {

Trajectory run_episode(Environment& env, const PolicyParams& params,
                       std::uint64_t seed, int max_steps) {
  Rng rng(seed);
  Trajectory traj;
  VectorXd obs = env.reset();
  for (int k = 0; k < max_steps; ++k) {
    ActionSample a = policy_sample(params, obs, rng);
    EnvStep step = env.step(a.action);
    Transition tr;
    tr.observation = std::move(obs);
    tr.raw = std::move(a.raw);
    tr.action = std::move(a.action);
    tr.old_mean = std::move(a.mean);
    tr.logprob = a.logprob;
    tr.reward = step.reward;
    tr.done = step.done;
    tr.violated = step.violated;
    tr.intervened = step.intervened;
    traj.steps.push_back(std::move(tr));
    obs = std::move(step.observation);
    if (step.done) break;
  }
  traj.final_observation = std::move(obs);
  return traj;
}

}  // namespace

std::vector<Trajectory> rollout(const EnvFactory& make_env,
                                const PolicyParams& params,
                                std::span<const std::uint64_t> episode_seeds,
                                int max_steps, int workers) {
  const std::size_t n = episode_seeds.size();
  std::vector<Trajectory> batch(n);
  if (n == 0) return batch;
  const std::size_t n_workers =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1, n);

  if (n_workers == 1) {
    auto env = make_env();
    for (std::size_t i = 0; i < n; ++i)
      batch[i] = run_episode(*env, params, episode_seeds[i], max_steps);
    return batch;
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n_workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < n_workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        auto env = make_env();
        for (std::size_t i = next++; i < n; i = next++)
          batch[i] = run_episode(*env, params, episode_seeds[i], max_steps);
      } catch (...) {
        errors[w] = std::current_exception();
        next = n;
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return batch;
}

std::vector<Trajectory> rollout(const EnvFactory& make_env,
                                const PolicyParams& params, int n_episodes,
                                Rng& rng, int max_steps, int workers) {
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(std::max(n_episodes, 0)));
  for (auto& s : seeds) s = rng.next_u64();
  return rollout(make_env, params, seeds, max_steps, workers);
}

// ---------------------------------------------------------------------------
// Targets

Targets returns_and_advantages(std::span<const Trajectory> batch,
                               const ValueParams& value,
                               const PpoConfig& config) {
  if (batch.empty()) throw InvalidArgument("returns_and_advantages: empty batch");
  Targets out;
  const double gamma = config.discount;
  const double lambda = config.gae_lambda;
  for (const Trajectory& traj : batch) {
    const std::size_t n = traj.steps.size();
    std::vector<double> values(n + 1, 0.0);
    for (std::size_t k = 0; k < n; ++k)
      values[k] = value.net.forward(traj.steps[k].observation)[0];
    const bool terminal = n == 0 || traj.steps.back().done;
    if (!terminal) values[n] = value.net.forward(traj.final_observation)[0];

    std::vector<double> ret(n), adv(n);
    double g = values[n];
    double a = 0.0;
    for (std::size_t k = n; k-- > 0;) {
      g = traj.steps[k].reward + gamma * g;
      const double delta = traj.steps[k].reward + gamma * values[k + 1] - values[k];
      a = delta + gamma * lambda * a;
      ret[k] = g;
      adv[k] = a;
    }
    out.returns.insert(out.returns.end(), ret.begin(), ret.end());
    out.advantages.insert(out.advantages.end(), adv.begin(), adv.end());
  }

  const double count = static_cast<double>(out.advantages.size());
  const double mean =
      std::accumulate(out.advantages.begin(), out.advantages.end(), 0.0) / count;
  double var = 0.0;
  for (double a : out.advantages) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / count);
  out.normalized.reserve(out.advantages.size());
  for (double a : out.advantages) out.normalized.push_back((a - mean) / (sd + 1e-8));
  return out;
}

// ---------------------------------------------------------------------------
// Loss and gradient

LossTerms minibatch_loss(const Agent& agent, std::span<const LossSample> samples,
                         const VectorXd& old_log_std, const PpoConfig& config,
                         std::span<double> grad) {
  LossTerms terms;
  if (samples.empty()) return terms;
  const bool want_grad = !grad.empty();
  if (want_grad && grad.size() != agent.parameter_count()) {
    throw ShapeMismatch("minibatch_loss: gradient buffer has wrong size");
  }
  const double inv_b = 1.0 / static_cast<double>(samples.size());
  const double beta = config.kl_coef;
  const double cv = config.value_loss_weight;

  const VectorXd& log_std = agent.policy.log_std;
  const Eigen::ArrayXd inv_var = (-2.0 * log_std.array()).exp();
  const Eigen::ArrayXd var_old = (2.0 * old_log_std.array()).exp();

  const std::size_t n_mean = agent.policy.mean.parameter_count();
  const auto n_std = static_cast<std::size_t>(log_std.size());
  std::span<double> g_mean, g_std, g_value;
  if (want_grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    g_mean = grad.subspan(0, n_mean);
    g_std = grad.subspan(n_mean, n_std);
    g_value = grad.subspan(n_mean + n_std);
  }

  Mlp::Cache pcache, vcache;
  for (const LossSample& s : samples) {
    const Transition& tr = *s.transition;
    const VectorXd mean = want_grad ? agent.policy.mean.forward(tr.observation, pcache)
                                    : agent.policy.mean.forward(tr.observation);
    const double logp = gaussian_logprob(tr.raw, mean, log_std);
    const double ratio = std::exp(logp - tr.logprob);
    const double kl = gaussian_kl(tr.old_mean, old_log_std, mean, log_std);
    const double v = want_grad ? agent.value.net.forward(tr.observation, vcache)[0]
                               : agent.value.net.forward(tr.observation)[0];
    const double verr = v - s.target_return;

    terms.surrogate += inv_b * ratio * s.advantage;
    terms.kl += inv_b * kl;
    terms.value += inv_b * verr * verr;

    if (!want_grad) continue;
    const Eigen::ArrayXd dz = (tr.raw - mean).array();
    const Eigen::ArrayXd dmu_old = (mean - tr.old_mean).array();
    const double ra = ratio * s.advantage;

    // d/dmean and d/dlog_std of -ratio*A + beta*KL.
    const VectorXd g_mu =
        (inv_b * (-ra * dz * inv_var + beta * dmu_old * inv_var)).matrix();
    const Eigen::ArrayXd g_ls =
        inv_b * (-ra * (dz.square() * inv_var - 1.0) +
                 beta * (1.0 - (var_old + dmu_old.square()) * inv_var));
    agent.policy.mean.backward(pcache, g_mu, g_mean);
    for (std::size_t d = 0; d < n_std; ++d) g_std[d] += g_ls[static_cast<Eigen::Index>(d)];

    VectorXd g_v(1);
    g_v[0] = inv_b * 2.0 * cv * verr;
    agent.value.net.backward(vcache, g_v, g_value);
  }
  terms.total = -terms.surrogate + beta * terms.kl + cv * terms.value;
  return terms;
}

AdamState::AdamState(std::size_t n)
    : m_(VectorXd::Zero(static_cast<Eigen::Index>(n))),
      v_(VectorXd::Zero(static_cast<Eigen::Index>(n))) {}

VectorXd AdamState::propose(const VectorXd& params, const VectorXd& grad,
                            double lr, const PpoConfig& config, VectorXd& m_out,
                            VectorXd& v_out) const {
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const long t = t_ + 1;
  m_out = b1 * m_ + (1.0 - b1) * grad;
  v_out = b2 * v_ + (1.0 - b2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
  const Eigen::ArrayXd step =
      (m_out.array() / c1) / ((v_out.array() / c2).sqrt() + config.adam_epsilon);
  return params - lr * step.matrix();
}

void AdamState::commit(VectorXd m, VectorXd v) {
  m_ = std::move(m);
  v_ = std::move(v);
  ++t_;
}

double batch_kl(std::span<const Trajectory> batch, const VectorXd& old_log_std,
                const PolicyParams& params) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const Trajectory& traj : batch)
    for (const Transition& tr : traj.steps) {
      sum += gaussian_kl(tr.old_mean, old_log_std,
                         params.mean.forward(tr.observation), params.log_std);
      ++n;
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

UpdateStats ppo_update(std::span<const Trajectory> batch, const Targets& targets,
                       Agent& agent, AdamState& optimizer,
                       const PpoConfig& config, Rng& rng) {
  std::vector<LossSample> all;
  for (const Trajectory& traj : batch)
    for (const Transition& tr : traj.steps) all.push_back({&tr, 0.0, 0.0});
  if (all.empty()) throw InvalidArgument("ppo_update: empty batch");
  if (all.size() != targets.normalized.size()) {
    throw ShapeMismatch("ppo_update: targets do not match batch");
  }
  for (std::size_t i = 0; i < all.size(); ++i) {
    all[i].advantage = targets.normalized[i];
    all[i].target_return = targets.returns[i];
  }
  if (optimizer.size() != agent.parameter_count()) {
    optimizer = AdamState(agent.parameter_count());
  }

  const VectorXd old_log_std = agent.policy.log_std;
  const std::size_t mb = static_cast<std::size_t>(config.minibatch_size);
  const std::size_t n_batches = std::max<std::size_t>(1, all.size() / mb);
  const std::size_t mb_size = all.size() < mb ? all.size() : mb;

  UpdateStats stats;
  VectorXd grad(static_cast<Eigen::Index>(agent.parameter_count()));
  std::vector<std::size_t> order(all.size());
  std::vector<LossSample> chunk(mb_size);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Fisher-Yates with the run's own generator.
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
      std::swap(order[i - 1], order[j]);
    }
    double surrogate = 0.0, value_loss = 0.0;
    for (std::size_t b = 0; b < n_batches; ++b) {
      for (std::size_t i = 0; i < mb_size; ++i) chunk[i] = all[order[b * mb_size + i]];
      const LossTerms terms = minibatch_loss(
          agent, chunk, old_log_std, config,
          std::span<double>(grad.data(), static_cast<std::size_t>(grad.size())));
      surrogate += terms.surrogate;
      value_loss += terms.value;
      if (!grad.allFinite() || !std::isfinite(terms.total)) {
        ++stats.skipped_minibatches;
        continue;
      }
      const VectorXd params = agent.flat();
      double lr = config.learning_rate;
      for (int attempt = 0;; ++attempt) {
        VectorXd m, v;
        VectorXd proposal = optimizer.propose(params, grad, lr, config, m, v);
        if (proposal.allFinite()) {
          agent.set_flat(proposal);
          optimizer.commit(std::move(m), std::move(v));
          break;
        }
        if (attempt >= config.max_lr_halvings) break;  // update rejected
        lr *= 0.5;
        ++stats.lr_halvings;
      }
    }
    stats.surrogate = surrogate / static_cast<double>(n_batches);
    stats.value_loss = value_loss / static_cast<double>(n_batches);
  }
  stats.mean_kl = batch_kl(batch, old_log_std, agent.policy);
  return stats;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

std::string join_sizes(const std::vector<int>& sizes) {
  std::ostringstream s;
  for (std::size_t i = 0; i < sizes.size(); ++i) s << (i ? "," : "") << sizes[i];
  return s.str();
}

std::vector<int> parse_sizes(const std::string& text) {
  std::vector<int> out;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) out.push_back(std::stoi(item));
  return out;
}

// "key n v1 ... vn"
void write_vector(std::ostream& out, const char* key, const VectorXd& v) {
  out << key << ' ' << v.size();
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << v[i];
  out << '\n';
}

VectorXd read_vector(std::istream& in, const std::string& key) {
  std::string word;
  Eigen::Index n = -1;
  if (!(in >> word) || word != key || !(in >> n) || n < 0 || n > 100000)
    throw IoError("checkpoint: bad '" + key + "' record");
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(in >> v[i])) throw IoError("checkpoint: truncated " + key);
  return v;
}

}  // namespace

void save_checkpoint(std::ostream& out, const Agent& agent,
                     const std::string& config_hash) {
  out << "satdock-agent 2\n";
  out << "config_hash " << config_hash << '\n';
  out << "policy " << join_sizes(agent.policy.mean.sizes()) << '\n';
  out << "value " << join_sizes(agent.value.net.sizes()) << '\n';
  out.precision(17);
  out << "half_width";
  for (Eigen::Index i = 0; i < agent.policy.half_width.size(); ++i)
    out << ' ' << agent.policy.half_width[i];
  out << '\n';
  write_vector(out, "policy_input_scale", agent.policy.mean.input_scale());
  write_vector(out, "value_input_scale", agent.value.net.input_scale());
  const VectorXd flat = agent.flat();
  out << "parameters " << flat.size() << '\n';
  for (Eigen::Index i = 0; i < flat.size(); ++i) out << flat[i] << '\n';
  if (!out) throw IoError("save_checkpoint: write failed");
}

Agent load_checkpoint(std::istream& in, std::string* config_hash) {
  auto expect = [&](const std::string& key) {
    std::string word;
    if (!(in >> word) || word != key)
      throw IoError("checkpoint: expected '" + key + "', got '" + word + "'");
  };
  expect("satdock-agent");
  int version = 0;
  in >> version;
  if (version != 2) throw IoError("checkpoint: unsupported version");
  expect("config_hash");
  std::string hash;
  in >> hash;
  expect("policy");
  std::string policy_sizes, value_sizes;
  in >> policy_sizes;
  expect("value");
  in >> value_sizes;
  const auto ps = parse_sizes(policy_sizes);
  const auto vs = parse_sizes(value_sizes);
  if (ps.size() < 2 || vs.size() < 2 || vs.back() != 1 || ps.front() != vs.front())
    throw ShapeMismatch("checkpoint: inconsistent network shapes");
  expect("half_width");
  VectorXd hw(ps.back());
  for (Eigen::Index i = 0; i < hw.size(); ++i)
    if (!(in >> hw[i])) throw IoError("checkpoint: truncated half_width");
  const VectorXd policy_scale = read_vector(in, "policy_input_scale");
  const VectorXd value_scale = read_vector(in, "value_input_scale");

  Rng scratch(0);
  Agent agent;
  agent.policy.mean = Mlp(ps, scratch, 1.0);
  agent.policy.half_width = hw;
  agent.policy.log_std = VectorXd::Zero(hw.size());
  agent.value.net = Mlp(vs, scratch, 1.0);
  agent.policy.mean.set_scales(policy_scale, hw);
  agent.value.net.set_scales(value_scale, VectorXd());

  expect("parameters");
  std::size_t n = 0;
  in >> n;
  if (n != agent.parameter_count())
    throw ShapeMismatch("checkpoint: parameter count does not match shapes");
  VectorXd flat(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    if (!(in >> flat[static_cast<Eigen::Index>(i)]))
      throw IoError("checkpoint: truncated parameters");
  agent.set_flat(flat);
  if (config_hash) *config_hash = hash;
  return agent;
}

}  // namespace satdock
