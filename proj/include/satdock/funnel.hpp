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

// Prescribed-performance safeguard for relative-degree-two outputs.
//
// With tracking error e = w .* (y - y_ref) and funnel function phi(t) > 0:
//
//   e1 = phi e
//   e2 = phi e' + e1 / (1 - |e1|^2)
//   u_funnel = -e2 / (1 - |e2|^2)
//
// The safeguard is gated by a dwell-time activation
//
//   alpha(t) = max(0, max_{s in [t - t_d, t]} |e2(s)| - lambda)
//
// and added to the learned input: u = alpha u_funnel + u_rl. Norms are
// Euclidean on R^9. Keeping |e1| < 1 is the performance guarantee
// |y - y_ref| < 1/phi.

#ifndef SATDOCK_FUNNEL_HPP_
#define SATDOCK_FUNNEL_HPP_

#include <deque>
#include <span>
#include <vector>

#include "satdock/multibody.hpp"

namespace satdock {

// Funnel radius 1/phi(t) = (r0 - r_inf) exp(-k t) + r_inf. Constant when
// r0 == r_inf or k == 0.
struct FunnelBoundary {
  double initial_radius = 0.39269908169872414;  // pi / 8
  double final_radius = 0.39269908169872414;
  double decay_rate = 0.0;

  double radius(double t) const;
  double phi(double t) const { return 1.0 / radius(t); }

  bool operator==(const FunnelBoundary&) const = default;
};

struct FunnelSpec {
  FunnelBoundary boundary;
  double threshold = 0.8;   // lambda
  double dwell_time = 1.0;  // t_d [s]
  Vec9 weights = Vec9::Ones();

  double phi(double t) const { return boundary.phi(t); }

  // Throws InvalidConfig with the offending field.
  void validate() const;

  bool operator==(const FunnelSpec&) const = default;
};

// Scalar piecewise polynomial. Segment i covers (breaks[i], breaks[i+1]];
// the first segment also owns breaks[0]. Coefficients are in the local
// variable tau = t - breaks[i], lowest order first.
class PiecewisePolynomial {
 public:
  PiecewisePolynomial() = default;
  PiecewisePolynomial(std::vector<double> breaks,
                      std::vector<std::vector<double>> coefficients);

  double value(double t) const { return evaluate(t, 0); }
  double derivative(double t, int order = 1) const {
    return evaluate(t, order);
  }
  // Evaluates segment `segment` at t even outside its interval, which is
  // how one-sided junction values are obtained.
  double evaluate_segment(std::size_t segment, double t, int order) const;

  std::size_t segment_index(double t) const;
  const std::vector<double>& breaks() const { return breaks_; }
  std::size_t segment_count() const { return coefficients_.size(); }

 private:
  double evaluate(double t, int order) const;

  std::vector<double> breaks_;
  std::vector<std::vector<double>> coefficients_;
};

// Reference output trajectory in R^9, one piecewise polynomial per channel.
class Reference {
 public:
  Reference() = default;
  Reference(std::array<PiecewisePolynomial, 9> channels, double t_begin,
            double t_end);

  // Throws InvalidArgument outside [t_begin, t_end].
  Vec9 value(double t) const;
  Vec9 rate(double t) const;
  Vec9 acceleration(double t) const;

  double t_begin() const { return t_begin_; }
  double t_end() const { return t_end_; }
  const PiecewisePolynomial& channel(int i) const { return channels_[i]; }

 private:
  void check_time(double t) const;

  std::array<PiecewisePolynomial, 9> channels_;
  double t_begin_ = 0.0;
  double t_end_ = 0.0;
};

struct ErrorVariables {
  Vec9 e;
  Vec9 e1;
  Vec9 e2;
};

// Throws FunnelBreach when |e1| >= 1.
ErrorVariables error_variables(double t, const Vec9& y, const Vec9& ydot,
                               const Vec9& y_ref, const Vec9& y_ref_dot,
                               const FunnelSpec& spec);
ErrorVariables error_variables(double t, const Vec9& y, const Vec9& ydot,
                               const Reference& ref, const FunnelSpec& spec);

// -e2 / (1 - |e2|^2). Throws FunnelBreach when |e2| >= 1.
Vec9 funnel_feedback(const Vec9& e2);

struct NormSample {
  double t;
  double norm_e2;
};

// Direct evaluation of the dwell-time activation over a recorded history:
// max over samples with time in [t - t_d, t], minus lambda, floored at 0.
// The window is truncated at the first sample for t < t_d.
double activation(std::span<const NormSample> history, double t,
                  const FunnelSpec& spec);

// Incremental sliding-window maximum for the activation. Queries and
// records must arrive with non-decreasing time. Single owner.
class ActivationWindow {
 public:
  explicit ActivationWindow(const FunnelSpec& spec);

  void reset();
  void record(double t, double norm_e2);

  // Activation at time t with an optional not-yet-recorded current value
  // (used at intermediate integrator stages).
  // Drops samples older than t - t_d, so time must not go backwards.
  double alpha(double t);
  double alpha(double t, double current_norm_e2);

 private:
  void expire(double t);

  double threshold_;
  double dwell_;
  // Monotone (time, value) deque, values strictly decreasing front to back.
  std::deque<NormSample> window_;
};

// alpha * u_funnel + u_rl, no saturation.
Vec9 combined_control(double alpha, const Vec9& u_funnel, const Vec9& u_rl);

// Accepts iff |e1(0)| < 1 and |e2(0)| < 1; throws InfeasibleStart otherwise.
void check_initial_conditions(const Vec9& e1_0, const Vec9& e2_0);

}  // namespace satdock

#endif  // SATDOCK_FUNNEL_HPP_
