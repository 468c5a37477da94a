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

// The docking task: a safe reference for the arm joints, the two reward
// functions and a step/reset environment over the satellite model.

#ifndef SATDOCK_MISSION_HPP_
#define SATDOCK_MISSION_HPP_

#include <functional>
#include <iosfwd>
#include <string>

#include "satdock/funnel.hpp"
#include "satdock/multibody.hpp"
#include "satdock/policy.hpp"

namespace satdock {

enum class Mode { kFunnelRl, kPureRl };

const char* mode_name(Mode mode);   // "funnel" / "pure"
Mode parse_mode(const std::string& name);

struct MissionConfig {
  double horizon = 60.0;           // T [s]
  double decision_interval = 1.0;  // delta h [s]
  double dt_sub = 1e-2;            // integrator step [s]
  Mode mode = Mode::kFunnelRl;
  FunnelSpec funnel;

  int step_count() const;     // T / delta h
  int substep_count() const;  // delta h / dt_sub

  void validate() const;
  bool operator==(const MissionConfig&) const = default;
};

// Feasible RL actions: [-0.75, 0.75]^6 x [-0.15, 0.15]^3.
Vec9 action_half_width();

// Fixed network input scaling for the packed state: body coordinates and all
// rates by phi(0), joint angles by 1/pi, so typical entries are O(1).
VectorXd observation_scale(const MissionConfig& config);

// Reference output on [0, 60]: the body holds still while the arm follows
// three cubic segments joined with matching value and slope at t = 20, 40.
Reference docking_reference();

// (1 - |e|)/10 - integral of alpha |u_funnel - u_rl| over the step.
double reward_funnel(const Vec9& e, double intervention_integral);

struct PureReward {
  double reward;
  bool violated;
};

// (1 - |e|)/10, minus (T - t_k)/delta h (1 + |e|/10) when some |e_i| leaves
// the tube. `radius` is 1/phi.
PureReward reward_pure(const Vec9& e, double t_k, double radius,
                       double horizon = 60.0, double decision_interval = 1.0);

// Component-wise tube check |e_i| <= radius (inclusive).
bool inside_tube(const Vec9& e, double radius);

struct StepOutcome {
  GeneralizedState next_state;
  double reward = 0.0;
  bool done = false;
  bool violated = false;
  bool intervened = false;
  double intervention = 0.0;      // trapezoid integral of alpha dt
  double intervention_cost = 0.0; // integral of alpha |u_funnel - u_rl| dt
  double peak_norm_e1 = 0.0;
  double peak_norm_e2 = 0.0;
  double peak_safeguard = 0.0;    // max |alpha u_funnel|
};

// One row of the per-substep episode log.
struct SubstepRecord {
  double t;
  Vec9 y;
  Vec9 y_ref;
  double norm_e1;
  double norm_e2;  // NaN when undefined (pure mode outside the tube)
  double alpha;
  double norm_u_funnel;
  Vec9 u_rl;
  double reward_so_far;
};

using SubstepObserver = std::function<void(const SubstepRecord&)>;

// Single-owner environment. Observations are the packed 18-dim state.
class DockingEnv : public Environment {
 public:
  DockingEnv(const MissionConfig& config, const SatelliteParams& params);

  VectorXd reset() override;
  EnvStep step(const VectorXd& action) override;

  // Starts from an arbitrary state at t = 0 (the initial conditions are
  // still checked in funnel mode).
  void reset_to(const GeneralizedState& state);

  // Full step result; `step` wraps this.
  StepOutcome advance(const Vec9& action);

  void set_observer(SubstepObserver observer) { observer_ = std::move(observer); }

  const GeneralizedState& state() const { return state_; }
  double time() const;
  int step_index() const { return k_; }
  const MissionConfig& config() const { return config_; }
  const Reference& reference() const { return reference_; }

 private:
  // Funnel quantities on the integrator grid.
  struct GridPoint {
    double norm_e1 = 0.0;
    double norm_e2 = 0.0;
    double alpha = 0.0;
    Vec9 u_funnel = Vec9::Zero();
  };

  // Records |e2| into the activation window (funnel mode).
  GridPoint evaluate_grid(double t);
  void emit(double t, const GridPoint& g, const Vec9& u_rl);

  MissionConfig config_;
  SatelliteParams params_;
  Reference reference_;
  ActivationWindow window_;
  GeneralizedState state_;
  int k_ = 0;
  double reward_so_far_ = 0.0;
  GridPoint last_grid_{};
  SubstepObserver observer_;
};

// Episode CSV writer for SubstepRecord rows.
class EpisodeCsvWriter {
 public:
  EpisodeCsvWriter(std::ostream& out, const std::string& preamble);
  void operator()(const SubstepRecord& r);

 private:
  std::ostream* out_;
};

}  // namespace satdock

#endif  // SATDOCK_MISSION_HPP_
