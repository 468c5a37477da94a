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

#include "satdock/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <thread>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "satdock/errors.hpp"
#include "satdock/mission.hpp"
#include "satdock/policy.hpp"

namespace satdock {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kAttitudeBound = kPi / 8.0;
constexpr double kJointBound = kPi;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Vec6 q1_from(const Vec6& angles) {
  Vec6 q1 = Vec6::Zero();
  q1.tail<3>() = angles.head<3>();
  return q1;
}

Vec6 sym_eigenvalues(const Mat6& a) {
  Eigen::SelfAdjointEigenSolver<Mat6> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

struct PartialPd {
  long total = 0;
  long non_positive = 0;
  double min_eigenvalue = std::numeric_limits<double>::infinity();
  long argmin = -1;
};

PartialPd scan_range(const SatelliteParams& params, const GridSpec& grid,
                     long begin, long end) {
  PartialPd p;
  for (long i = begin; i < end; ++i) {
    const double m = pd_eigenvalues(params, grid.point(i)).minCoeff();
    ++p.total;
    if (!(m > 0.0)) ++p.non_positive;
    if (m < p.min_eigenvalue) {  // strict: keeps the first index on ties
      p.min_eigenvalue = m;
      p.argmin = i;
    }
  }
  return p;
}

}  // namespace

GridSpec GridSpec::default_grid() {
  GridSpec g;
  for (int i = 0; i < 3; ++i) g.axes[i] = {-kAttitudeBound, kAttitudeBound, 5};
  for (int i = 3; i < 6; ++i) g.axes[i] = {-kJointBound, kJointBound, 9};
  return g;
}

GridSpec GridSpec::single_point(const Vec6& angles) {
  GridSpec g;
  for (int i = 0; i < 6; ++i) g.axes[i] = {angles[i], angles[i], 1};
  return g;
}

long GridSpec::total() const {
  long n = 1;
  for (const GridAxis& a : axes) n *= a.count;
  return n;
}

void GridSpec::validate() const {
  for (int i = 0; i < 6; ++i) {
    const GridAxis& a = axes[i];
    const double bound = i < 3 ? kAttitudeBound : kJointBound;
    const std::string name = "grid axis " + std::to_string(i);
    if (!std::isfinite(a.lo) || !std::isfinite(a.hi))
      throw InvalidArgument(name + ": non-finite range");
    if (a.lo < -bound - 1e-12 || a.hi > bound + 1e-12)
      throw InvalidArgument(name + ": range leaves the certified box");
    if (a.count < 1) throw InvalidArgument(name + ": count must be >= 1");
    if (a.count == 1 && a.lo != a.hi)
      throw InvalidArgument(name + ": a single sample needs lo == hi");
    if (a.count >= 2 && !(a.lo < a.hi))
      throw InvalidArgument(name + ": need lo < hi for count >= 2");
  }
}

Vec6 GridSpec::point(long index) const {
  Vec6 x;
  for (int i = 5; i >= 0; --i) {
    const GridAxis& a = axes[i];
    const long k = index % a.count;
    index /= a.count;
    x[i] = a.count == 1 ? a.lo
                        : a.lo + (a.hi - a.lo) * static_cast<double>(k) /
                                     static_cast<double>(a.count - 1);
  }
  return x;
}

Vec6 pd_eigenvalues(const SatelliteParams& params, const Vec6& angles) {
  const Vec6 q1 = q1_from(angles);
  const Vec3 q2 = angles.tail<3>();
  const Mat6 gm = input_matrix(params, q1, q2) * mass_matrix(params, q1, q2);
  return sym_eigenvalues(gm + gm.transpose());
}

PDReport pd_grid_check(const SatelliteParams& params, const GridSpec& grid,
                       int workers) {
  grid.validate();
  const auto start = Clock::now();
  const long n = grid.total();
  const int w = static_cast<int>(std::clamp<long>(workers, 1, std::max(1L, n)));
  std::vector<PartialPd> parts(static_cast<std::size_t>(w));
  std::vector<std::thread> threads;
  for (int k = 0; k < w; ++k) {
    const long begin = n * k / w;
    const long end = n * (k + 1) / w;
    if (w == 1) {
      parts[0] = scan_range(params, grid, begin, end);
    } else {
      threads.emplace_back([&, k, begin, end] {
        parts[static_cast<std::size_t>(k)] = scan_range(params, grid, begin, end);
      });
    }
  }
  for (auto& t : threads) t.join();

  PDReport r;
  PartialPd acc;
  for (const PartialPd& p : parts) {  // ranges are in index order
    acc.total += p.total;
    acc.non_positive += p.non_positive;
    if (p.min_eigenvalue < acc.min_eigenvalue) {
      acc.min_eigenvalue = p.min_eigenvalue;
      acc.argmin = p.argmin;
    }
  }
  r.total = acc.total;
  r.non_positive = acc.non_positive;
  r.min_eigenvalue = acc.min_eigenvalue;
  if (acc.argmin >= 0) r.argmin = grid.point(acc.argmin);
  r.seconds = seconds_since(start);
  return r;
}

void write_pd_neighbourhood_csv(std::ostream& out, const SatelliteParams& params,
                                const GridSpec& grid, const PDReport& report) {
  out << "phi,theta,psi,theta1,psi1,theta2,min_eigenvalue\n";
  // Grid index of the argmin along each axis.
  std::array<long, 6> centre{};
  for (int i = 0; i < 6; ++i) {
    const GridAxis& a = grid.axes[i];
    centre[i] = a.count == 1 ? 0
                             : std::lround((report.argmin[i] - a.lo) / (a.hi - a.lo) *
                                           static_cast<double>(a.count - 1));
  }
  const auto old = out.precision(17);
  std::array<int, 6> d{};
  for (int combo = 0; combo < 729; ++combo) {
    int c = combo;
    bool inside = true;
    Vec6 x;
    for (int i = 5; i >= 0; --i) {
      d[i] = c % 3 - 1;
      c /= 3;
      const GridAxis& a = grid.axes[i];
      const long k = centre[i] + d[i];
      if (k < 0 || k >= a.count) {
        inside = false;
        break;
      }
      x[i] = a.count == 1 ? a.lo
                          : a.lo + (a.hi - a.lo) * static_cast<double>(k) /
                                       static_cast<double>(a.count - 1);
    }
    if (!inside) continue;
    for (int i = 0; i < 6; ++i) out << x[i] << ',';
    out << pd_eigenvalues(params, x).minCoeff() << '\n';
  }
  out.precision(old);
}

double b_matrix_min_eigenvalue(const SatelliteParams& params, const Vec6& angles) {
  const Vec6 q1 = q1_from(angles);
  const Vec3 q2 = angles.tail<3>();
  const Mat6 m = mass_matrix(params, q1, q2);
  const Mat6 b = m.ldlt().solve(input_matrix(params, q1, q2));
  return sym_eigenvalues(b + b.transpose()).minCoeff() * 0.5;
}

bool b_matrix_check(const SatelliteParams& params, const Vec6& angles) {
  // The identity block is positive definite, so only M^{-1} g^T matters.
  return b_matrix_min_eigenvalue(params, angles) > 0.0;
}

std::vector<ProbePoint> singularity_probe(const SatelliteParams& params,
                                          double lo, double hi, int points) {
  if (points < 2 || !(lo < hi)) throw InvalidArgument("singularity_probe: bad sweep");
  std::vector<ProbePoint> out;
  out.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double theta = lo + (hi - lo) * i / (points - 1);
    Vec6 q1 = Vec6::Zero();
    q1[4] = theta;
    const Mat6 m = mass_matrix(params, q1, Vec3::Zero());
    out.push_back({theta, sym_eigenvalues(m).minCoeff()});
  }
  return out;
}

ConservationResult conservation_check(const SatelliteParams& params,
                                      std::uint64_t seed, double horizon,
                                      double dt) {
  Rng rng(seed);
  GeneralizedState s;
  for (int i = 0; i < 3; ++i) s.q1dot[i] = 0.1 * rng.normal();
  for (int i = 3; i < 6; ++i) s.q1dot[i] = 0.005 * rng.normal();
  const ControlLaw zero = [](double, const GeneralizedState&) { return Vec9::Zero().eval(); };
  const double e0 = kinetic_energy(params, s);
  const Vec3 p0 = linear_momentum(params, s);
  ConservationResult r;
  const long n = step_count(0.0, horizon, dt);
  for (long k = 0; k < n; ++k) {
    s = rk4_step(params, s, static_cast<double>(k) * dt, dt, zero);
    r.energy_relative_drift =
        std::max(r.energy_relative_drift, std::abs(kinetic_energy(params, s) - e0) / e0);
    r.momentum_drift =
        std::max(r.momentum_drift, (linear_momentum(params, s) - p0).norm());
  }
  r.momentum_relative_drift = r.momentum_drift / p0.norm();
  return r;
}

ConvergenceResult convergence_check(const SatelliteParams& params,
                                    double horizon, double coarse_dt,
                                    int refinements) {
  if (refinements < 3) throw InvalidArgument("convergence_check: need >= 3 step sizes");
  GeneralizedState s0;
  s0.q1dot << 0.05, -0.02, 0.01, 0.02, -0.01, 0.03;
  s0.q2dot << 0.2, -0.1, 0.15;
  const ControlLaw forcing = [](double t, const GeneralizedState&) {
    Vec9 u;
    u << 2.0 * std::sin(t), 1.5 * std::cos(0.7 * t), -std::sin(1.3 * t),
        0.3 * std::cos(t), 0.2 * std::sin(0.5 * t), -0.25 * std::cos(1.1 * t),
        0.1 * std::sin(2.0 * t), -0.1 * std::cos(1.5 * t), 0.05 * std::sin(t);
    return u;
  };
  ConvergenceResult r;
  std::vector<Vec18> finals;
  double dt = coarse_dt;
  for (int i = 0; i < refinements; ++i, dt *= 0.5) {
    r.steps.push_back(dt);
    GeneralizedState s = s0;
    const long n = step_count(0.0, horizon, dt);
    for (long k = 0; k < n; ++k) s = rk4_step(params, s, static_cast<double>(k) * dt, dt, forcing);
    finals.push_back(s.packed());
  }
  for (std::size_t i = 0; i + 2 < finals.size(); ++i) {
    const double d1 = (finals[i] - finals[i + 1]).norm();
    const double d2 = (finals[i + 1] - finals[i + 2]).norm();
    r.orders.push_back(std::log2(d1 / d2));
  }
  r.order = r.orders.back();
  return r;
}

ReferenceContinuity reference_continuity_check() {
  const Reference ref = docking_reference();
  ReferenceContinuity r;
  for (int i = 0; i < 9; ++i) {
    const PiecewisePolynomial& p = ref.channel(i);
    for (std::size_t seg = 1; seg < p.segment_count(); ++seg) {
      const double t = p.breaks()[seg];
      r.max_value_jump = std::max(
          r.max_value_jump,
          std::abs(p.evaluate_segment(seg - 1, t, 0) - p.evaluate_segment(seg, t, 0)));
      r.max_rate_jump = std::max(
          r.max_rate_jump,
          std::abs(p.evaluate_segment(seg - 1, t, 1) - p.evaluate_segment(seg, t, 1)));
    }
  }
  // Closed forms of the joint segments at their anchors.
  const double p1_20 = -kPi / 16000.0 * 8000.0 + kPi / 800.0 * 400.0 + kPi / 40.0 * 20.0;
  const double anchors[] = {
      std::abs(ref.channel(7).evaluate_segment(0, 20.0, 0) - kPi / 2.0),
      std::abs(p1_20 - kPi / 2.0),
      std::abs(ref.channel(6).evaluate_segment(1, 40.0, 0) - kPi),
      std::abs(ref.channel(7).evaluate_segment(2, 40.0, 0) - kPi / 2.0),
      std::abs(ref.channel(8).evaluate_segment(1, 40.0, 0) + kPi),
  };
  for (double a : anchors) r.max_anchor_error = std::max(r.max_anchor_error, a);
  for (int k = 0; k <= 6000; ++k) {
    const double t = 0.01 * k;
    r.max_abs_acceleration =
        std::max(r.max_abs_acceleration, ref.acceleration(t).cwiseAbs().maxCoeff());
  }
  return r;
}

std::vector<LayerGradientCheck> policy_gradient_check(std::uint64_t seed,
                                                      int per_layer) {
  Rng rng(seed);
  PpoConfig config;
  Agent agent = Agent::create(18, action_half_width(), config, rng,
                              observation_scale(MissionConfig{}));
  // Move away from the near-zero output initialisation so every block has
  // gradients of ordinary size.
  {
    VectorXd flat = agent.flat();
    for (Eigen::Index i = 0; i < flat.size(); ++i) flat[i] += 0.1 * rng.normal();
    agent.set_flat(flat);
  }
  VectorXd old_log_std = agent.policy.log_std;
  for (Eigen::Index i = 0; i < old_log_std.size(); ++i) old_log_std[i] += 0.1 * rng.normal();

  std::vector<Transition> transitions(32);
  std::vector<LossSample> samples;
  for (Transition& tr : transitions) {
    tr.observation = VectorXd(18);
    for (int i = 0; i < 18; ++i) tr.observation[i] = 0.5 * rng.normal();
    const VectorXd mean = agent.policy.mean.forward(tr.observation);
    tr.old_mean = mean;
    for (Eigen::Index i = 0; i < mean.size(); ++i) tr.old_mean[i] += 0.05 * rng.normal();
    tr.raw = tr.old_mean;
    for (Eigen::Index i = 0; i < mean.size(); ++i)
      tr.raw[i] += std::exp(old_log_std[i]) * rng.normal();
    tr.logprob = gaussian_logprob(tr.raw, tr.old_mean, old_log_std);
    samples.push_back({&tr, rng.normal(), rng.normal()});
  }

  const std::size_t n = agent.parameter_count();
  std::vector<double> grad(n);
  minibatch_loss(agent, samples, old_log_std, config, grad);
  const VectorXd base = agent.flat();
  auto loss_at = [&](std::size_t idx, double delta) {
    VectorXd p = base;
    p[static_cast<Eigen::Index>(idx)] += delta;
    agent.set_flat(p);
    return minibatch_loss(agent, samples, old_log_std, config, {}).total;
  };

  struct Block {
    std::string name;
    std::size_t offset;
    std::size_t size;
  };
  std::vector<Block> blocks;
  const Mlp& mean_net = agent.policy.mean;
  for (std::size_t l = 0; l < mean_net.layer_count(); ++l)
    blocks.push_back({"policy_layer" + std::to_string(l), mean_net.layer_offset(l),
                      mean_net.layer_size(l)});
  const std::size_t n_mean = mean_net.parameter_count();
  blocks.push_back({"log_std", n_mean, static_cast<std::size_t>(agent.policy.log_std.size())});
  const std::size_t value_base = n_mean + static_cast<std::size_t>(agent.policy.log_std.size());
  const Mlp& value_net = agent.value.net;
  for (std::size_t l = 0; l < value_net.layer_count(); ++l)
    blocks.push_back({"value_layer" + std::to_string(l),
                      value_base + value_net.layer_offset(l), value_net.layer_size(l)});

  const double h = 1e-3;
  std::vector<LayerGradientCheck> out;
  for (const Block& b : blocks) {
    LayerGradientCheck c;
    c.layer = b.name;
    const std::size_t count = std::min<std::size_t>(b.size, static_cast<std::size_t>(per_layer));
    for (std::size_t j = 0; j < count; ++j) {
      const std::size_t idx =
          count == b.size ? b.offset + j : b.offset + rng.next_u64() % b.size;
      const double fd = (8.0 * (loss_at(idx, h) - loss_at(idx, -h)) -
                         (loss_at(idx, 2 * h) - loss_at(idx, -2 * h))) /
                        (12.0 * h);
      const double an = grad[idx];
      const double scale = std::max(std::abs(an), std::abs(fd));
      const double rel = scale == 0.0 ? 0.0 : std::abs(an - fd) / scale;
      c.max_relative_error = std::max(c.max_relative_error, rel);
      ++c.coordinates;
    }
    out.push_back(c);
  }
  agent.set_flat(base);
  return out;
}

Manifest run_all(const SatelliteParams& params, const VerifyConfig& config) {
  params.validate();
  Manifest m;
  m.seed = config.seed;

  auto timed = [&](const std::string& name, auto&& body) {
    const auto start = Clock::now();
    CheckResult c;
    c.name = name;
    body(c);
    c.seconds = seconds_since(start);
    m.checks.push_back(std::move(c));
  };

  timed("pd_grid", [&](CheckResult& c) {
    m.pd = pd_grid_check(params, config.grid, config.workers);
    c.pass = m.pd.pass();
    c.metrics = {{"total_points", static_cast<double>(m.pd.total)},
                 {"min_eigenvalue", m.pd.min_eigenvalue},
                 {"non_positive", static_cast<double>(m.pd.non_positive)}};
    for (int i = 0; i < 6; ++i)
      c.metrics.push_back({"argmin_" + std::to_string(i), m.pd.argmin[i]});
  });

  timed("b_matrix", [&](CheckResult& c) {
    Rng rng(derive_seed(config.seed, 0, 0, 11));
    int agree = 0, positive = 0;
    double min_b = std::numeric_limits<double>::infinity();
    for (int k = 0; k < config.spot_states; ++k) {
      Vec6 x;
      for (int i = 0; i < 6; ++i) {
        const double bound = i < 3 ? kAttitudeBound : kJointBound;
        x[i] = -bound + 2.0 * bound * rng.uniform();
      }
      const double b = b_matrix_min_eigenvalue(params, x);
      const double g = pd_eigenvalues(params, x).minCoeff();
      min_b = std::min(min_b, b);
      if ((b > 0.0) == (g > 0.0)) ++agree;
      if (b > 0.0) ++positive;
    }
    const bool origin = b_matrix_check(params, Vec6::Zero());
    c.pass = origin && agree == config.spot_states && positive == config.spot_states;
    c.metrics = {{"states", static_cast<double>(config.spot_states)},
                 {"sign_agreement", static_cast<double>(agree)},
                 {"positive", static_cast<double>(positive)},
                 {"min_eigenvalue", min_b},
                 {"origin_positive", origin ? 1.0 : 0.0}};
  });

  timed("singularity_probe", [&](CheckResult& c) {
    const auto curve = singularity_probe(params, -kPi / 2 - 0.1, -kPi / 2 + 0.1,
                                         config.probe_points);
    double lo = std::numeric_limits<double>::infinity();
    double at = 0.0;
    for (const ProbePoint& p : curve) {
      if (p.min_eigenvalue < lo) {
        lo = p.min_eigenvalue;
        at = p.theta;
      }
    }
    const double at_zero = singularity_probe(params, 0.0, 1e-3, 2).front().min_eigenvalue;
    c.pass = lo >= -1e-9 && at_zero > 0.0;
    c.metrics = {{"points", static_cast<double>(curve.size())},
                 {"min_eigenvalue", lo},
                 {"argmin_theta", at},
                 {"min_eigenvalue_theta0", at_zero}};
  });

  timed("multibody", [&](CheckResult& c) {
    const ConservationResult cons =
        conservation_check(params, derive_seed(config.seed, 0, 0, 12),
                           config.conservation_horizon, config.conservation_dt);
    const ConvergenceResult conv = convergence_check(params, 4.0, 0.2, 5);
    c.pass = cons.energy_relative_drift < 1e-6 && cons.momentum_drift < 1e-9 &&
             conv.order >= 3.7 && conv.order <= 4.3;
    c.metrics = {{"energy_relative_drift", cons.energy_relative_drift},
                 {"momentum_drift", cons.momentum_drift},
                 {"convergence_order", conv.order}};
  });

  timed("reference_continuity", [&](CheckResult& c) {
    const ReferenceContinuity r = reference_continuity_check();
    c.pass = r.max_value_jump < 1e-12 && r.max_rate_jump < 1e-12 &&
             r.max_anchor_error < 1e-12 && r.max_abs_acceleration <= 3 * kPi / 200 + 1e-12;
    c.metrics = {{"max_value_jump", r.max_value_jump},
                 {"max_rate_jump", r.max_rate_jump},
                 {"max_anchor_error", r.max_anchor_error},
                 {"max_abs_acceleration", r.max_abs_acceleration}};
  });

  timed("policy_gradient", [&](CheckResult& c) {
    const auto layers = policy_gradient_check(derive_seed(config.seed, 0, 0, 13),
                                              config.gradient_coordinates);
    c.pass = true;
    for (const LayerGradientCheck& l : layers) {
      const int needed = std::min(50, config.gradient_coordinates);
      c.pass = c.pass && l.max_relative_error < 1e-4 &&
               (l.coordinates >= needed || l.layer == "log_std");
      c.metrics.push_back({l.layer + "_max_relative_error", l.max_relative_error});
      c.metrics.push_back({l.layer + "_coordinates", static_cast<double>(l.coordinates)});
    }
  });

  m.pass = std::all_of(m.checks.begin(), m.checks.end(),
                       [](const CheckResult& c) { return c.pass; });
  return m;
}

std::string manifest_json(const Manifest& manifest, const VerifyConfig& config,
                          const std::string& config_hash) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["status"] = manifest.pass ? "pass" : "fail";
  if (!config_hash.empty()) j["config_hash"] = config_hash;
  j["seed"] = manifest.seed;
  ordered_json grid = ordered_json::array();
  for (const GridAxis& a : config.grid.axes)
    grid.push_back({{"lo", a.lo}, {"hi", a.hi}, {"count", a.count}});
  j["settings"] = {{"grid", grid},
                   {"grid_points", config.grid.total()},
                   {"eigensolver", "Eigen SelfAdjointEigenSolver (tridiagonal QL)"},
                   {"spot_states", config.spot_states},
                   {"probe_points", config.probe_points},
                   {"conservation_horizon", config.conservation_horizon},
                   {"conservation_dt", config.conservation_dt},
                   {"gradient_coordinates", config.gradient_coordinates}};
  ordered_json checks = ordered_json::array();
  for (const CheckResult& c : manifest.checks) {
    ordered_json metrics;
    for (const auto& [k, v] : c.metrics) metrics[k] = v;
    checks.push_back({{"name", c.name}, {"status", c.pass ? "pass" : "fail"},
                      {"metrics", metrics}});
  }
  j["checks"] = checks;
  return j.dump(2);
}

std::string timings_json(const Manifest& manifest, const std::string& config_hash) {
  nlohmann::ordered_json j;
  if (!config_hash.empty()) j["config_hash"] = config_hash;
  j["seed"] = manifest.seed;
  nlohmann::ordered_json seconds;
  for (const CheckResult& c : manifest.checks) seconds[c.name] = c.seconds;
  j["seconds"] = seconds;
  return j.dump(2);
}

}  // namespace satdock
