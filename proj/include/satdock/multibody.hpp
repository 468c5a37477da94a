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

// Rigid-body model of a satellite carrying a two-link robot arm.
//
// Generalized coordinates are q1 = (x, y, z, phi, theta, psi) for the body
// and q2 = (theta1, psi1, theta2) for the arm joints. The body obeys
//
//   M(q) q1'' = f(q, q') + g(q)^T u[0:6]
//
// and the joints are acceleration-controlled, q2'' = u[6:9]. The arm's
// reaction on the body through q2'' is not modelled; q2 acts as prescribed
// motion in the body equations.

#ifndef SATDOCK_MULTIBODY_HPP_
#define SATDOCK_MULTIBODY_HPP_

#include <array>
#include <functional>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

namespace satdock {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Vec18 = Eigen::Matrix<double, 18, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat36 = Eigen::Matrix<double, 3, 6>;

struct SatelliteParams {
  double m1 = 300.0;  // body mass [kg]
  double m2 = 1.0;    // link 1 mass [kg]
  double m3 = 1.0;    // link 2 mass [kg]
  double l_s = 1.0;   // body length [m]
  double b_s = 0.5;   // body width [m]
  double h_s = 0.5;   // body height [m]
  double r1 = 0.1;    // link 1 radius [m]
  double r2 = 0.1;    // link 2 radius [m]
  double l1 = 1.0;    // link 1 length [m]
  double l2 = 1.0;    // link 2 length [m]
  double p_x = 0.4;   // mount point offset along body x [m]
  double p_z = 0.25;  // mount point offset along body z [m]

  // Throws InvalidConfig naming the first non-positive or non-finite field.
  void validate() const;

  double total_mass() const { return m1 + m2 + m3; }

  // Principal inertia about each body's own centre of mass, in its own
  // frame: a uniform cuboid for the body, uniform solid cylinders (axis
  // along local x) for the links.
  std::array<Vec3, 3> principal_inertia() const;

  bool operator==(const SatelliteParams&) const = default;
};

struct GeneralizedState {
  Vec6 q1 = Vec6::Zero();
  Vec3 q2 = Vec3::Zero();
  Vec6 q1dot = Vec6::Zero();
  Vec3 q2dot = Vec3::Zero();

  // (q1, q2, q1dot, q2dot), the 18-dimensional MDP state.
  Vec18 packed() const;
  static GeneralizedState unpack(const Vec18& s);

  // y = (q1, q2) and its rate.
  Vec9 output() const;
  Vec9 output_rate() const;

  bool all_finite() const;
};

struct RotationSet {
  Mat3 x;
  Mat3 y;
  Mat3 z;
};

// Elementary right-handed rotations about x, y, z.
RotationSet rotation_matrices(double phi, double theta, double psi);

// Body-to-world attitude Az(psi) Ay(theta) Ax(phi).
Mat3 attitude(double phi, double theta, double psi);

struct Kinematics {
  std::array<Vec3, 3> com;       // centres of mass, world frame
  std::array<Mat3, 3> rotation;  // body/link to world
};

Kinematics forward_kinematics(const SatelliteParams& params, const Vec6& q1,
                              const Vec3& q2);

// Angular velocities of the three bodies expressed in their own frames.
std::array<Vec3, 3> angular_velocities(const SatelliteParams& params,
                                       const GeneralizedState& state);

// Velocity Jacobians with respect to q1dot. `linear[i]` maps q1dot to the
// world-frame velocity of body i's centre of mass, `angular[i]` to its
// body-frame angular velocity.
struct BodyJacobians {
  std::array<Mat36, 3> linear;
  std::array<Mat36, 3> angular;
};

BodyJacobians jacobians(const SatelliteParams& params, const Vec6& q1,
                        const Vec3& q2);

// sum_i m_i J_i^T J_i + Jw_i^T I_i Jw_i
Mat6 mass_matrix(const SatelliteParams& params, const Vec6& q1,
                 const Vec3& q2);

// g^T = [ J_1^T A | Jw_1^T ], A = Az Ay Ax. Body forces u[0:3] are given in
// the body frame, torques u[3:6] about the body axes.
Mat6 input_matrix(const SatelliteParams& params, const Vec6& q1,
                  const Vec3& q2);

// Velocity-product generalized forces on q1 (Coriolis, centrifugal and the
// gyroscopic terms of the arm's prescribed motion). Quadratic in velocity.
Vec6 bias_forces(const SatelliteParams& params, const GeneralizedState& state);

// Everything the right-hand side needs, from one kinematic sweep.
struct DynamicsTerms {
  Mat6 mass;
  Mat6 input;  // g^T
  Vec6 bias;
};

DynamicsTerms dynamics_terms(const SatelliteParams& params,
                             const GeneralizedState& state);

// Smallest eigenvalue of M below which the right-hand side refuses to solve.
inline constexpr double kMinMassEigenvalue = 1e-9;

// Second-order state derivative. Throws SingularMassMatrix when M is not
// safely invertible and InvalidArgument on non-finite input.
struct StateDerivative {
  Vec6 q1dot;
  Vec3 q2dot;
  Vec6 q1ddot;
  Vec3 q2ddot;

  Vec18 packed() const;
};

StateDerivative dynamics_rhs(const SatelliteParams& params, double t,
                             const GeneralizedState& state, const Vec9& u);

// Joint accelerations of the body for given M, bias and input; the
// factorization is a dense symmetric LDL^T.
Vec6 body_acceleration(const DynamicsTerms& terms, const Vec6& u_body);

double kinetic_energy(const SatelliteParams& params,
                      const GeneralizedState& state);

// Total linear momentum sum_i m_i v_i (world frame).
Vec3 linear_momentum(const SatelliteParams& params,
                     const GeneralizedState& state);

// Control as a function of (t, state). Evaluated at every Runge-Kutta stage.
using ControlLaw = std::function<Vec9(double, const GeneralizedState&)>;

// One classical RK4 step. Throws NonFiniteState if the result is not finite.
GeneralizedState rk4_step(const SatelliteParams& params,
                          const GeneralizedState& state, double t, double dt,
                          const ControlLaw& control);

struct TimedState {
  double t;
  GeneralizedState state;
};

// Fixed-step RK4 from t0 to t1; returns samples at t0, t0+dt, ..., t1.
// dt must divide (t1 - t0) to within 1e-12 (relative to dt).
std::vector<TimedState> integrate(const SatelliteParams& params,
                                  const GeneralizedState& state,
                                  const ControlLaw& control, double t0,
                                  double t1, double dt);

// Number of steps of size dt covering [t0, t1]; throws if dt does not divide.
long step_count(double t0, double t1, double dt);

// CSV rows (t, q1[6], q2[3], q1dot[6], q2dot[3]) at 17 significant digits.
void write_trajectory_csv(std::ostream& out,
                          const std::vector<TimedState>& trajectory);

}  // namespace satdock

#endif  // SATDOCK_MULTIBODY_HPP_
