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

// Proximal policy optimization with a KL penalty, written against Eigen with
// hand-written backpropagation.
//
// The policy is a diagonal Gaussian over a pre-squash variable z with an MLP
// mean and state-independent log standard deviations. Actions are
// a = h .* tanh(z ./ h) for box half-widths h. Likelihood ratios use the
// Gaussian density of z (no tanh Jacobian correction); both the old and the
// new policy are treated the same way, so ratios stay well defined.

#ifndef SATDOCK_POLICY_HPP_
#define SATDOCK_POLICY_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace satdock {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// std::mt19937_64 is bit-specified by the standard; the distributions are
// not, so uniform/normal transforms are done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);
  std::uint64_t next_u64();
  double uniform();  // [0, 1)
  double normal();
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Deterministic seed derivation for (run seed, iteration, slot, stream).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t iteration,
                          std::uint64_t slot, std::uint64_t stream);

struct PpoConfig {
  double learning_rate = 1e-4;
  double discount = 0.9;
  double kl_coef = 0.1;
  int minibatch_size = 128;
  int episodes_per_iteration = 30;
  int epochs = 10;
  double gae_lambda = 0.95;
  double value_loss_weight = 0.5;
  std::vector<int> hidden_sizes = {64, 64};
  double init_std_fraction = 0.25;  // initial std as a fraction of half-width
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int max_lr_halvings = 8;

  void validate() const;
  bool operator==(const PpoConfig&) const = default;
};

// Fully connected tanh network with a linear output layer.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<int> sizes, Rng& rng, double output_gain);

  struct Cache {
    std::vector<VectorXd> activations;  // input, hidden..., output
  };

  VectorXd forward(const VectorXd& x) const;
  VectorXd forward(const VectorXd& x, Cache& cache) const;

  // Accumulates dL/dparams into `grad` (flat, same layout as flat()).
  void backward(const Cache& cache, const VectorXd& grad_out,
                std::span<double> grad) const;

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }
  std::size_t parameter_count() const;

  void copy_to(std::span<double> out) const;
  void copy_from(std::span<const double> in);

  // Number of weight layers and the flat offset of each layer's weights.
  std::size_t layer_count() const { return weights_.size(); }
  std::size_t layer_offset(std::size_t layer) const;
  std::size_t layer_size(std::size_t layer) const;

  // Fixed element-wise scaling of the input and of the output layer; not
  // trained. Empty means identity.
  void set_scales(VectorXd input_scale, VectorXd output_scale);
  const VectorXd& input_scale() const { return input_scale_; }
  const VectorXd& output_scale() const { return output_scale_; }

 private:
  std::vector<int> sizes_;
  VectorXd input_scale_;
  VectorXd output_scale_;
  std::vector<MatrixXd> weights_;
  std::vector<VectorXd> biases_;
};

struct PolicyParams {
  Mlp mean;            // observation -> mean of z
  VectorXd log_std;    // per action dimension
  VectorXd half_width; // action box half-widths (not trained)

  VectorXd squash(const VectorXd& z) const;
};

struct ValueParams {
  Mlp net;  // observation -> scalar
};

// Policy and value function with one flat parameter layout:
// [policy mean MLP | log_std | value MLP].
struct Agent {
  PolicyParams policy;
  ValueParams value;

  // Observations are multiplied by observation_scale (empty for none) before
  // both networks; the mean network's output is scaled by half_width.
  static Agent create(int observation_size, const VectorXd& half_width,
                      const PpoConfig& config, Rng& rng,
                      const VectorXd& observation_scale = VectorXd());

  std::size_t parameter_count() const;
  VectorXd flat() const;
  void set_flat(const VectorXd& flat);

  double value_of(const VectorXd& observation) const;
};

struct ActionSample {
  VectorXd action;  // squashed, inside the box
  VectorXd raw;     // pre-squash sample z
  VectorXd mean;
  double logprob;   // Gaussian log-density of z
};

ActionSample policy_sample(const PolicyParams& params,
                           const VectorXd& observation, Rng& rng);

double gaussian_logprob(const VectorXd& z, const VectorXd& mean,
                        const VectorXd& log_std);

// KL(old || new) between diagonal Gaussians.
double gaussian_kl(const VectorXd& mean_old, const VectorXd& log_std_old,
                   const VectorXd& mean_new, const VectorXd& log_std_new);

struct EnvStep {
  VectorXd observation;
  double reward = 0.0;
  bool done = false;
  bool violated = false;    // left the performance tube this step
  bool intervened = false;  // safeguard active at some point this step
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual VectorXd reset() = 0;
  virtual EnvStep step(const VectorXd& action) = 0;
};

using EnvFactory = std::function<std::unique_ptr<Environment>()>;

struct Transition {
  VectorXd observation;
  VectorXd raw;
  VectorXd action;
  VectorXd old_mean;
  double logprob = 0.0;
  double reward = 0.0;
  bool done = false;
  bool violated = false;
  bool intervened = false;
};

struct Trajectory {
  std::vector<Transition> steps;
  VectorXd final_observation;
  double total_reward() const;
  bool any_violation() const;
  int intervention_steps() const;
};

// Runs one episode per seed. Episodes are independent of `workers`, so the
// batch is reproducible from the seeds alone.
std::vector<Trajectory> rollout(const EnvFactory& make_env,
                                const PolicyParams& params,
                                std::span<const std::uint64_t> episode_seeds,
                                int max_steps, int workers = 1);

// Convenience overload drawing one seed per episode from rng.
std::vector<Trajectory> rollout(const EnvFactory& make_env,
                                const PolicyParams& params, int n_episodes,
                                Rng& rng, int max_steps, int workers = 1);

// Flattened per-transition targets, in batch order.
struct Targets {
  std::vector<double> returns;     // discounted Monte-Carlo return
  std::vector<double> advantages;  // GAE, raw
  std::vector<double> normalized;  // zero mean, unit variance
};

Targets returns_and_advantages(std::span<const Trajectory> batch,
                               const ValueParams& value,
                               const PpoConfig& config);

struct UpdateStats {
  double mean_kl = 0.0;         // KL(old || new) over the batch after update
  double surrogate = 0.0;       // mean ratio * advantage, last epoch
  double value_loss = 0.0;      // mean squared error, last epoch
  int skipped_minibatches = 0;  // non-finite gradients
  int lr_halvings = 0;
};

// One minibatch sample for the loss.
struct LossSample {
  const Transition* transition;
  double advantage;
  double target_return;
};

struct LossTerms {
  double total = 0.0;
  double surrogate = 0.0;
  double kl = 0.0;
  double value = 0.0;
};

// L = -mean(ratio * A) + kl_coef * mean(KL(old || new)) + c_v * mean((V-R)^2).
// When grad is non-empty it receives dL/dparams in Agent::flat() layout.
LossTerms minibatch_loss(const Agent& agent, std::span<const LossSample> samples,
                         const VectorXd& old_log_std, const PpoConfig& config,
                         std::span<double> grad);

class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(std::size_t n);
  // Returns the proposed parameters; does not commit moments.
  VectorXd propose(const VectorXd& params, const VectorXd& grad, double lr,
                   const PpoConfig& config, VectorXd& m_out,
                   VectorXd& v_out) const;
  void commit(VectorXd m, VectorXd v);
  long steps() const { return t_; }
  std::size_t size() const { return static_cast<std::size_t>(m_.size()); }

 private:
  VectorXd m_;
  VectorXd v_;
  long t_ = 0;
};

// Epochs of shuffled minibatch Adam steps on the KL-penalized surrogate.
UpdateStats ppo_update(std::span<const Trajectory> batch, const Targets& targets,
                       Agent& agent, AdamState& optimizer,
                       const PpoConfig& config, Rng& rng);

// Mean KL(old || new) over the batch for the current agent.
double batch_kl(std::span<const Trajectory> batch, const VectorXd& old_log_std,
                const PolicyParams& params);

// Text checkpoint: header with shapes and a config hash, then parameters at
// 17 significant digits.
void save_checkpoint(std::ostream& out, const Agent& agent,
                     const std::string& config_hash);
Agent load_checkpoint(std::istream& in, std::string* config_hash = nullptr);

}  // namespace satdock

#endif  // SATDOCK_POLICY_HPP_
