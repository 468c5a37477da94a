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

#include "satdock/mission.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "satdock/errors.hpp"

namespace satdock {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr const char* kOutputNames[9] = {"x",     "y",      "z",
                                         "phi",   "theta",  "psi",
                                         "theta1", "psi1", "theta2"};

// Integer ratio a / b or -1.
int exact_ratio(double a, double b) {
  const double r = a / b;
  const double n = std::round(r);
  if (n < 1.0 || std::abs(r - n) > 1e-9 * std::max(1.0, n)) return -1;
  return static_cast<int>(n);
}

}  // namespace

const char* mode_name(Mode mode) {
  return mode == Mode::kFunnelRl ? "funnel" : "pure";
}

Mode parse_mode(const std::string& name) {
  if (name == "funnel" || name == "funnel_rl") return Mode::kFunnelRl;
  if (name == "pure" || name == "pure_rl") return Mode::kPureRl;
  throw InvalidConfig("mission.mode: expected 'funnel' or 'pure', got '" + name + "'");
}

int MissionConfig::step_count() const {
  return exact_ratio(horizon, decision_interval);
}

int MissionConfig::substep_count() const {
  return exact_ratio(decision_interval, dt_sub);
}

void MissionConfig::validate() const {
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw InvalidConfig("mission.horizon: must be finite and > 0");
  if (!(decision_interval > 0.0) || !std::isfinite(decision_interval))
    throw InvalidConfig("mission.decision_interval: must be finite and > 0");
  if (!(dt_sub > 0.0) || !std::isfinite(dt_sub))
    throw InvalidConfig("mission.dt_sub: must be finite and > 0");
  if (step_count() < 1)
    throw InvalidConfig("mission.horizon: must be an integer multiple of decision_interval");
  if (substep_count() < 1)
    throw InvalidConfig("mission.dt_sub: must divide decision_interval");
  if (horizon > docking_reference().t_end() + 1e-9)
    throw InvalidConfig("mission.horizon: reference is defined on [0, 60] only");
  funnel.validate();
}

Vec9 action_half_width() {
  Vec9 h;
  h << 0.75, 0.75, 0.75, 0.75, 0.75, 0.75, 0.15, 0.15, 0.15;
  return h;
}

VectorXd observation_scale(const MissionConfig& config) {
  const double phi = config.funnel.phi(0.0);
  VectorXd scale(18);
  scale << VectorXd::Constant(6, phi), VectorXd::Constant(3, 1.0 / kPi),
      VectorXd::Constant(9, phi);
  return scale;
}

Reference docking_reference() {
  const std::vector<double> breaks{0.0, 20.0, 40.0, 60.0};
  auto constant = [&](double a, double b, double c) {
    return PiecewisePolynomial(breaks, {{a}, {b}, {c}});
  };
  // Coefficients in the local variable t - breaks[segment].
  const std::vector<double> p1{0.0, kPi / 40.0, kPi / 800.0, -kPi / 16000.0};
  const std::vector<double> p2{0.0, 0.0, 3.0 * kPi / 400.0, -kPi / 4000.0};
  const std::vector<double> minus_p2{0.0, 0.0, -3.0 * kPi / 400.0, kPi / 4000.0};
  const std::vector<double> p3{kPi / 2.0, 0.0, -kPi / 400.0, kPi / 16000.0};

  std::array<PiecewisePolynomial, 9> ch;
  for (int i = 0; i < 6; ++i) ch[i] = constant(0.0, 0.0, 0.0);
  ch[6] = PiecewisePolynomial(breaks, {{0.0}, p2, {kPi}});           // theta1
  ch[7] = PiecewisePolynomial(breaks, {p1, {kPi / 2.0}, p3});        // psi1
  ch[8] = PiecewisePolynomial(breaks, {{0.0}, minus_p2, {-kPi}});    // theta2
  return Reference(std::move(ch), 0.0, 60.0);
}

double reward_funnel(const Vec9& e, double intervention_integral) {
  return (1.0 - e.norm()) / 10.0 - intervention_integral;
}

bool inside_tube(const Vec9& e, double radius) {
  return (e.array().abs() <= radius).all();
}

PureReward reward_pure(const Vec9& e, double t_k, double radius,
                       double horizon, double decision_interval) {
  const double n = e.norm();
  const double base = (1.0 - n) / 10.0;
  if (inside_tube(e, radius)) return {base, false};
  return {base - ((horizon - t_k) / decision_interval) * (1.0 + n / 10.0), true};
}

// ---------------------------------------------------------------------------
// DockingEnv

DockingEnv::DockingEnv(const MissionConfig& config,
                       const SatelliteParams& params)
    : config_(config),
      params_(params),
      reference_(docking_reference()),
      window_(config.funnel) {
  config_.validate();
  params_.validate();
  reset();
}

double DockingEnv::time() const {
  return static_cast<double>(k_) * config_.decision_interval;
}

VectorXd DockingEnv::reset() {
  reset_to(GeneralizedState{});
  return state_.packed();
}

void DockingEnv::reset_to(const GeneralizedState& state) {
  if (!state.all_finite()) throw InvalidArgument("reset_to: non-finite state");
  state_ = state;
  k_ = 0;
  reward_so_far_ = 0.0;
  window_.reset();
  if (config_.mode == Mode::kFunnelRl) {
    // Built here rather than via error_variables so |e1| >= 1 reports as an
    // infeasible start, not a breach.
    const FunnelSpec& f = config_.funnel;
    const double phi = f.phi(0.0);
    const Vec9 e1 = phi * f.weights.cwiseProduct(state_.output() - reference_.value(0.0));
    const Vec9 edot = f.weights.cwiseProduct(state_.output_rate() - reference_.rate(0.0));
    const double n1 = e1.squaredNorm();
    const Vec9 e2 = n1 < 1.0 ? Vec9(phi * edot + e1 / (1.0 - n1))
                             : Vec9::Constant(std::numeric_limits<double>::infinity());
    check_initial_conditions(e1, e2);
  }
  last_grid_ = evaluate_grid(0.0);
}

DockingEnv::GridPoint DockingEnv::evaluate_grid(double t) {
  GridPoint g;
  const Vec9 y = state_.output();
  const Vec9 yd = state_.output_rate();
  if (config_.mode == Mode::kFunnelRl) {
    const ErrorVariables ev = error_variables(t, y, yd, reference_, config_.funnel);
    g.norm_e1 = ev.e1.norm();
    g.norm_e2 = ev.e2.norm();
    window_.record(t, g.norm_e2);
    g.alpha = window_.alpha(t);
    g.u_funnel = funnel_feedback(ev.e2);
    return g;
  }
  // Pure mode: diagnostics only, the safeguard is off.
  const double phi = config_.funnel.phi(t);
  const Vec9 e = config_.funnel.weights.cwiseProduct(y - reference_.value(t));
  g.norm_e1 = phi * e.norm();
  g.norm_e2 = std::numeric_limits<double>::quiet_NaN();
  if (g.norm_e1 < 1.0) {
    g.norm_e2 = error_variables(t, y, yd, reference_, config_.funnel).e2.norm();
  }
  g.alpha = 0.0;
  g.u_funnel = Vec9::Zero();
  return g;
}

void DockingEnv::emit(double t, const GridPoint& g, const Vec9& u_rl) {
  if (!observer_) return;
  SubstepRecord r;
  r.t = t;
  r.y = state_.output();
  r.y_ref = reference_.value(t);
  r.norm_e1 = g.norm_e1;
  r.norm_e2 = g.norm_e2;
  r.alpha = g.alpha;
  r.norm_u_funnel = g.u_funnel.norm();
  r.u_rl = u_rl;
  r.reward_so_far = reward_so_far_;
  observer_(r);
}

StepOutcome DockingEnv::advance(const Vec9& action) {
  const int n_steps = config_.step_count();
  if (k_ >= n_steps) throw InvalidArgument("step: episode already finished");
  if (!action.allFinite()) throw InvalidArgument("step: non-finite action");
  const Vec9 hw = action_half_width();
  if ((action.array().abs() > hw.array() * (1.0 + 1e-12)).any()) {
    throw InvalidArgument("step: action outside the feasible box");
  }

  const int n_sub = config_.substep_count();
  const double dt = config_.dt_sub;
  const double t_k = time();
  const bool funnel_mode = config_.mode == Mode::kFunnelRl;

  ControlLaw law;
  if (funnel_mode) {
    law = [&](double tau, const GeneralizedState& s) -> Vec9 {
      const ErrorVariables ev = error_variables(
          tau, s.output(), s.output_rate(), reference_, config_.funnel);
      const double alpha = window_.alpha(tau, ev.e2.norm());
      return combined_control(alpha, funnel_feedback(ev.e2), action);
    };
  } else {
    law = [&](double, const GeneralizedState&) -> Vec9 { return action; };
  }

  auto integrand = [&](const GridPoint& g) {
    return g.alpha > 0.0 ? g.alpha * (g.u_funnel - action).norm() : 0.0;
  };

  StepOutcome out;
  if (k_ == 0) emit(0.0, last_grid_, action);
  auto track = [&](const GridPoint& g) {
    out.peak_norm_e1 = std::max(out.peak_norm_e1, g.norm_e1);
    if (std::isfinite(g.norm_e2)) out.peak_norm_e2 = std::max(out.peak_norm_e2, g.norm_e2);
    out.peak_safeguard = std::max(out.peak_safeguard, g.alpha * g.u_funnel.norm());
    out.intervened = out.intervened || g.alpha > 0.0;
  };
  track(last_grid_);

  const long base = static_cast<long>(k_) * n_sub;
  for (int i = 0; i < n_sub; ++i) {
    const double t = static_cast<double>(base + i) * dt;
    state_ = rk4_step(params_, state_, t, dt, law);
    const double t_next = static_cast<double>(base + i + 1) * dt;
    const GridPoint g = evaluate_grid(t_next);
    out.intervention_cost += 0.5 * dt * (integrand(last_grid_) + integrand(g));
    out.intervention += 0.5 * dt * (last_grid_.alpha + g.alpha);
    track(g);
    last_grid_ = g;
    if (i + 1 < n_sub) emit(t_next, g, action);
  }

  const double t_next = static_cast<double>(k_ + 1) * config_.decision_interval;
  const Vec9 e = config_.funnel.weights.cwiseProduct(state_.output() -
                                                     reference_.value(t_next));
  const double radius = config_.funnel.boundary.radius(t_next);
  out.violated = !inside_tube(e, radius);
  if (funnel_mode) {
    out.reward = reward_funnel(e, out.intervention_cost);
  } else {
    out.reward = reward_pure(e, t_k, radius, config_.horizon,
                             config_.decision_interval).reward;
  }
  ++k_;
  out.done = k_ == n_steps || (!funnel_mode && out.violated);
  out.next_state = state_;
  reward_so_far_ += out.reward;
  emit(t_next, last_grid_, action);
  if (out.done) k_ = n_steps;
  return out;
}

EnvStep DockingEnv::step(const VectorXd& action) {
  if (action.size() != 9) throw ShapeMismatch("step: action must have 9 entries");
  const StepOutcome o = advance(Vec9(action));
  EnvStep s;
  s.observation = o.next_state.packed();
  s.reward = o.reward;
  s.done = o.done;
  s.violated = o.violated;
  s.intervened = o.intervened;
  return s;
}

// ---------------------------------------------------------------------------

EpisodeCsvWriter::EpisodeCsvWriter(std::ostream& out,
                                   const std::string& preamble)
    : out_(&out) {
  if (!preamble.empty()) *out_ << preamble << '\n';
  *out_ << 't';
  for (const char* n : kOutputNames) *out_ << ',' << n;
  for (const char* n : kOutputNames) *out_ << ",ref_" << n;
  *out_ << ",norm_e1,norm_e2,alpha,norm_u_funnel";
  for (int i = 0; i < 9; ++i) *out_ << ",u_rl" << i;
  *out_ << ",reward_so_far\n";
}

void EpisodeCsvWriter::operator()(const SubstepRecord& r) {
  std::ostream& o = *out_;
  const auto old = o.precision(17);
  o << r.t;
  for (int i = 0; i < 9; ++i) o << ',' << r.y[i];
  for (int i = 0; i < 9; ++i) o << ',' << r.y_ref[i];
  o << ',' << r.norm_e1 << ',' << r.norm_e2 << ',' << r.alpha << ','
    << r.norm_u_funnel;
  for (int i = 0; i < 9; ++i) o << ',' << r.u_rl[i];
  o << ',' << r.reward_so_far << '\n';
  o.precision(old);
}

}  // namespace satdock
