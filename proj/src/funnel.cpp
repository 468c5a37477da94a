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

#include "satdock/funnel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "satdock/errors.hpp"

namespace satdock {
namespace {

// Sample times come from t0 + n*dt; allow for rounding at interval edges.
constexpr double kWindowSlack = 1e-9;

}  // namespace

double FunnelBoundary::radius(double t) const {
  return (initial_radius - final_radius) * std::exp(-decay_rate * t) +
         final_radius;
}

void FunnelSpec::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw InvalidConfig("funnel." + field + ": " + why);
  };
  if (!(boundary.initial_radius > 0.0) || !std::isfinite(boundary.initial_radius))
    fail("initial_radius", "must be finite and > 0");
  if (!(boundary.final_radius > 0.0) || !std::isfinite(boundary.final_radius))
    fail("final_radius", "must be finite and > 0");
  if (!(boundary.decay_rate >= 0.0) || !std::isfinite(boundary.decay_rate))
    fail("decay_rate", "must be finite and >= 0");
  if (!(threshold > 0.0 && threshold < 1.0)) fail("threshold", "must lie in (0, 1)");
  if (!(dwell_time > 0.0) || !std::isfinite(dwell_time))
    fail("dwell_time", "must be finite and > 0");
  if (!weights.allFinite() || (weights.array() <= 0.0).any())
    fail("weights", "must be finite and > 0");
}

PiecewisePolynomial::PiecewisePolynomial(
    std::vector<double> breaks, std::vector<std::vector<double>> coefficients)
    : breaks_(std::move(breaks)), coefficients_(std::move(coefficients)) {
  if (breaks_.size() < 2 || coefficients_.size() + 1 != breaks_.size()) {
    throw InvalidArgument("PiecewisePolynomial: need n+1 breaks for n segments");
  }
  if (!std::is_sorted(breaks_.begin(), breaks_.end()) ||
      std::adjacent_find(breaks_.begin(), breaks_.end()) != breaks_.end()) {
    throw InvalidArgument("PiecewisePolynomial: breaks must increase strictly");
  }
}

std::size_t PiecewisePolynomial::segment_index(double t) const {
  // First segment whose right end is >= t.
  const auto it = std::lower_bound(breaks_.begin() + 1, breaks_.end() - 1, t);
  return static_cast<std::size_t>(it - (breaks_.begin() + 1));
}

double PiecewisePolynomial::evaluate_segment(std::size_t segment, double t,
                                             int order) const {
  const auto& c = coefficients_.at(segment);
  const double tau = t - breaks_[segment];
  // Horner on the order-th derivative.
  double acc = 0.0;
  for (int k = static_cast<int>(c.size()) - 1; k >= order; --k) {
    double factor = 1.0;
    for (int j = 0; j < order; ++j) factor *= static_cast<double>(k - j);
    acc = acc * tau + factor * c[static_cast<std::size_t>(k)];
  }
  return acc;
}

double PiecewisePolynomial::evaluate(double t, int order) const {
  return evaluate_segment(segment_index(t), t, order);
}

Reference::Reference(std::array<PiecewisePolynomial, 9> channels,
                     double t_begin, double t_end)
    : channels_(std::move(channels)), t_begin_(t_begin), t_end_(t_end) {}

void Reference::check_time(double t) const {
  if (!(t >= t_begin_ - kWindowSlack && t <= t_end_ + kWindowSlack)) {
    std::ostringstream msg;
    msg << "reference: t = " << t << " outside [" << t_begin_ << ", " << t_end_
        << "]";
    throw InvalidArgument(msg.str());
  }
}

Vec9 Reference::value(double t) const {
  check_time(t);
  Vec9 y;
  for (int i = 0; i < 9; ++i) y[i] = channels_[i].value(t);
  return y;
}

Vec9 Reference::rate(double t) const {
  check_time(t);
  Vec9 y;
  for (int i = 0; i < 9; ++i) y[i] = channels_[i].derivative(t, 1);
  return y;
}

Vec9 Reference::acceleration(double t) const {
  check_time(t);
  Vec9 y;
  for (int i = 0; i < 9; ++i) y[i] = channels_[i].derivative(t, 2);
  return y;
}

ErrorVariables error_variables(double t, const Vec9& y, const Vec9& ydot,
                               const Vec9& y_ref, const Vec9& y_ref_dot,
                               const FunnelSpec& spec) {
  const double phi = spec.phi(t);
  ErrorVariables ev;
  ev.e = spec.weights.cwiseProduct(y - y_ref);
  ev.e1 = phi * ev.e;
  const double n1 = ev.e1.squaredNorm();
  if (!(n1 < 1.0)) {
    std::ostringstream msg;
    msg << "|e1| = " << std::sqrt(n1) << " >= 1 at t = " << t;
    throw FunnelBreach(msg.str());
  }
  const Vec9 edot = spec.weights.cwiseProduct(ydot - y_ref_dot);
  ev.e2 = phi * edot + ev.e1 / (1.0 - n1);
  return ev;
}

ErrorVariables error_variables(double t, const Vec9& y, const Vec9& ydot,
                               const Reference& ref, const FunnelSpec& spec) {
  return error_variables(t, y, ydot, ref.value(t), ref.rate(t), spec);
}

Vec9 funnel_feedback(const Vec9& e2) {
  const double n2 = e2.squaredNorm();
  if (!(n2 < 1.0)) {
    std::ostringstream msg;
    msg << "|e2| = " << std::sqrt(n2) << " >= 1";
    throw FunnelBreach(msg.str());
  }
  return -e2 / (1.0 - n2);
}

double activation(std::span<const NormSample> history, double t,
                  const FunnelSpec& spec) {
  double peak = 0.0;
  bool any = false;
  for (const NormSample& s : history) {
    if (s.t >= t - spec.dwell_time - kWindowSlack && s.t <= t + kWindowSlack) {
      peak = any ? std::max(peak, s.norm_e2) : s.norm_e2;
      any = true;
    }
  }
  return any ? std::max(0.0, peak - spec.threshold) : 0.0;
}

ActivationWindow::ActivationWindow(const FunnelSpec& spec)
    : threshold_(spec.threshold), dwell_(spec.dwell_time) {}

void ActivationWindow::reset() { window_.clear(); }

void ActivationWindow::record(double t, double norm_e2) {
  while (!window_.empty() && window_.back().norm_e2 <= norm_e2) {
    window_.pop_back();
  }
  window_.push_back({t, norm_e2});
  expire(t);
}

void ActivationWindow::expire(double t) {
  while (!window_.empty() && window_.front().t < t - dwell_ - kWindowSlack) {
    window_.pop_front();
  }
}

double ActivationWindow::alpha(double t) {
  expire(t);
  if (window_.empty()) return 0.0;
  return std::max(0.0, window_.front().norm_e2 - threshold_);
}

double ActivationWindow::alpha(double t, double current_norm_e2) {
  expire(t);
  double peak = current_norm_e2;
  if (!window_.empty()) peak = std::max(peak, window_.front().norm_e2);
  return std::max(0.0, peak - threshold_);
}

Vec9 combined_control(double alpha, const Vec9& u_funnel, const Vec9& u_rl) {
  return alpha * u_funnel + u_rl;
}

void check_initial_conditions(const Vec9& e1_0, const Vec9& e2_0) {
  const double n1 = e1_0.norm();
  const double n2 = e2_0.norm();
  if (!(n1 < 1.0) || !(n2 < 1.0)) {
    std::ostringstream msg;
    msg << "infeasible start: |e1(0)| = " << n1 << ", |e2(0)| = " << n2
        << " (both must be < 1)";
    throw InfeasibleStart(msg.str());
  }
}

}  // namespace satdock
