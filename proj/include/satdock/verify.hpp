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

// Numerical checks of the model's structural properties and of the
// integrator, reference and policy-gradient code.

#ifndef SATDOCK_VERIFY_HPP_
#define SATDOCK_VERIFY_HPP_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "satdock/multibody.hpp"

namespace satdock {

struct GridAxis {
  double lo;
  double hi;
  int count;
};

// Attitude (phi, theta, psi) and joint (theta1, psi1, theta2) sample grid.
// Translation does not enter M or g and is held at zero.
struct GridSpec {
  std::array<GridAxis, 6> axes;

  static GridSpec default_grid();  // 5^3 attitude x 9^3 joint points
  static GridSpec single_point(const Vec6& angles);

  long total() const;
  void validate() const;
  // Angles of grid point `index` (last axis fastest).
  Vec6 point(long index) const;
};

struct PDReport {
  long total = 0;
  double min_eigenvalue = 0.0;
  Vec6 argmin = Vec6::Zero();  // (phi, theta, psi, theta1, psi1, theta2)
  long non_positive = 0;
  double seconds = 0.0;

  bool pass() const { return total > 0 && non_positive == 0; }
};

// Eigenvalues of g^T M + (g^T M)^T for given attitude and joint angles.
Vec6 pd_eigenvalues(const SatelliteParams& params, const Vec6& angles);

PDReport pd_grid_check(const SatelliteParams& params, const GridSpec& grid,
                       int workers = 1);

// 3^6 grid neighbourhood of the argmin as CSV rows
// (phi, theta, psi, theta1, psi1, theta2, min_eigenvalue).
void write_pd_neighbourhood_csv(std::ostream& out, const SatelliteParams& params,
                                const GridSpec& grid, const PDReport& report);

// Smallest eigenvalue of the symmetric part of M^{-1} g^T.
double b_matrix_min_eigenvalue(const SatelliteParams& params, const Vec6& angles);

// True iff diag(M^{-1} g^T, I_3) has a positive definite symmetric part.
bool b_matrix_check(const SatelliteParams& params, const Vec6& angles);

struct ProbePoint {
  double theta;
  double min_eigenvalue;  // of M
};

// Min eigenvalue of M along theta in [lo, hi], other angles zero.
std::vector<ProbePoint> singularity_probe(const SatelliteParams& params,
                                          double lo, double hi, int points);

struct ConservationResult {
  double energy_relative_drift = 0.0;   // max |E(t) - E(0)| / E(0)
  double momentum_drift = 0.0;          // max |p(t) - p(0)|
  double momentum_relative_drift = 0.0; // the same over |p(0)|
};

// Torque-free motion with the arm frozen, random body velocities.
ConservationResult conservation_check(const SatelliteParams& params,
                                      std::uint64_t seed, double horizon,
                                      double dt);

struct ConvergenceResult {
  std::vector<double> steps;   // h, h/2, h/4, ...
  std::vector<double> orders;  // log2 ratios of successive differences
  double order = 0.0;          // last estimate
};

// Self-convergence of RK4 on a smooth forced trajectory.
ConvergenceResult convergence_check(const SatelliteParams& params,
                                    double horizon, double coarse_dt,
                                    int refinements);

struct ReferenceContinuity {
  double max_value_jump = 0.0;  // at t = 20, 40
  double max_rate_jump = 0.0;
  double max_anchor_error = 0.0;  // p1(20), p2(40), p3(40) vs closed forms
  double max_abs_acceleration = 0.0;  // sampled over [0, 60]
};

ReferenceContinuity reference_continuity_check();

struct LayerGradientCheck {
  std::string layer;
  int coordinates = 0;
  double max_relative_error = 0.0;
};

// Analytic PPO loss gradient vs five-point central differences on sampled
// coordinates of each parameter block.
std::vector<LayerGradientCheck> policy_gradient_check(std::uint64_t seed,
                                                      int per_layer);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::vector<std::pair<std::string, double>> metrics;
  double seconds = 0.0;
};

struct VerifyConfig {
  GridSpec grid = GridSpec::default_grid();
  std::uint64_t seed = 0;
  int workers = 1;
  int spot_states = 100;
  int probe_points = 201;
  double conservation_horizon = 60.0;
  double conservation_dt = 1e-3;
  int gradient_coordinates = 64;
};

struct Manifest {
  bool pass = false;
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;
  PDReport pd;
};

Manifest run_all(const SatelliteParams& params, const VerifyConfig& config);

// Manifest JSON without timings (stable across runs) and a separate timing
// document. A non-empty config hash is recorded in the manifest.
std::string manifest_json(const Manifest& manifest, const VerifyConfig& config,
                          const std::string& config_hash = "");
std::string timings_json(const Manifest& manifest,
                         const std::string& config_hash = "");

}  // namespace satdock

#endif  // SATDOCK_VERIFY_HPP_
