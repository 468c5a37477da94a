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

#include "satdock/multibody.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "satdock/detail/dual.hpp"
#include "satdock/detail/kinematics.hpp"
#include "satdock/errors.hpp"

namespace satdock {
namespace {

using detail::Dual;
using Jet6 = Dual<double, 6>;
using Jet1 = Dual<double, 1>;
using HyperJet = Dual<Jet1, 1>;

detail::ChainGeometry geometry(const SatelliteParams& p) {
  return {p.p_x, p.p_z, p.l1, p.l2};
}

std::array<double, 9> stack(const Vec6& q1, const Vec3& q2) {
  std::array<double, 9> q;
  for (int i = 0; i < 6; ++i) q[i] = q1[i];
  for (int i = 0; i < 3; ++i) q[6 + i] = q2[i];
  return q;
}

std::array<double, 9> stack_rate(const GeneralizedState& s) {
  return stack(s.q1dot, s.q2dot);
}

// Axial vector of the skew-symmetric part of A.
Vec3 vee(const Mat3& A) {
  return 0.5 * Vec3(A(2, 1) - A(1, 2), A(0, 2) - A(2, 0), A(1, 0) - A(0, 1));
}

// Frames plus their first and second directional derivatives along qdot.
struct FrameRates {
  std::array<Vec3, 3> com;
  std::array<Vec3, 3> com_rate;
  std::array<Vec3, 3> com_accel;  // second directional derivative
  std::array<Mat3, 3> rot;
  std::array<Mat3, 3> rot_rate;
  std::array<Mat3, 3> rot_accel;
};

FrameRates frame_rates(const SatelliteParams& params,
                       const GeneralizedState& state) {
  const auto q = stack(state.q1, state.q2);
  const auto qd = stack_rate(state);
  std::array<HyperJet, 9> hq;
  for (int k = 0; k < 9; ++k) {
    hq[k].a = Jet1(q[k], {qd[k]});
    hq[k].v[0] = Jet1(qd[k], {0.0});
  }
  const auto f = detail::chain_frames(geometry(params), hq);
  FrameRates out;
  for (int i = 0; i < 3; ++i) {
    for (int r = 0; r < 3; ++r) {
      out.com[i][r] = f.com[i][r].a.a;
      out.com_rate[i][r] = f.com[i][r].a.v[0];
      out.com_accel[i][r] = f.com[i][r].v[0].v[0];
      for (int c = 0; c < 3; ++c) {
        out.rot[i](r, c) = f.rot[i][r][c].a.a;
        out.rot_rate[i](r, c) = f.rot[i][r][c].a.v[0];
        out.rot_accel[i](r, c) = f.rot[i][r][c].v[0].v[0];
      }
    }
  }
  return out;
}

struct JacobianSweep {
  BodyJacobians jac;
  std::array<Mat3, 3> rot;
};

JacobianSweep jacobian_sweep(const SatelliteParams& params, const Vec6& q1,
                             const Vec3& q2) {
  std::array<Jet6, 9> jq;
  for (int k = 0; k < 6; ++k) jq[k] = detail::variable<6>(q1[k], k);
  for (int k = 0; k < 3; ++k) jq[6 + k] = Jet6(q2[k]);
  const auto f = detail::chain_frames(geometry(params), jq);

  JacobianSweep out;
  for (int i = 0; i < 3; ++i) {
    Mat3& R = out.rot[i];
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) R(r, c) = f.rot[i][r][c].a;
    for (int j = 0; j < 6; ++j) {
      Mat3 dR;
      for (int r = 0; r < 3; ++r) {
        out.jac.linear[i](r, j) = f.com[i][r].v[j];
        for (int c = 0; c < 3; ++c) dR(r, c) = f.rot[i][r][c].v[j];
      }
      out.jac.angular[i].col(j) = vee(R.transpose() * dR);
    }
  }
  return out;
}

Mat6 assemble_mass(const SatelliteParams& params, const BodyJacobians& jac) {
  const double masses[3] = {params.m1, params.m2, params.m3};
  const auto inertia = params.principal_inertia();
  Mat6 M = Mat6::Zero();
  for (int i = 0; i < 3; ++i) {
    M.noalias() += masses[i] * jac.linear[i].transpose() * jac.linear[i];
    M.noalias() += jac.angular[i].transpose() * inertia[i].asDiagonal() *
                   jac.angular[i];
  }
  // The sum is symmetric in exact arithmetic; remove rounding asymmetry.
  return 0.5 * (M + M.transpose());
}

Mat6 assemble_input(const BodyJacobians& jac, const Mat3& body_rotation) {
  Mat6 gT;
  gT.leftCols<3>() = jac.linear[0].transpose() * body_rotation;
  gT.rightCols<3>() = jac.angular[0].transpose();
  return gT;
}

Vec6 assemble_bias(const SatelliteParams& params, const BodyJacobians& jac,
                   const FrameRates& fr) {
  const double masses[3] = {params.m1, params.m2, params.m3};
  const auto inertia = params.principal_inertia();
  Vec6 f = Vec6::Zero();
  for (int i = 0; i < 3; ++i) {
    const Mat3& R = fr.rot[i];
    const Vec3 omega = vee(R.transpose() * fr.rot_rate[i]);
    // R^T R'' has skew part equal to the body-frame angular acceleration
    // at zero generalized acceleration (R'^T R' is symmetric).
    const Vec3 omega_dot = vee(R.transpose() * fr.rot_accel[i]);
    const Vec3 I_omega = inertia[i].cwiseProduct(omega);
    const Vec3 torque = inertia[i].cwiseProduct(omega_dot) + omega.cross(I_omega);
    f.noalias() -= masses[i] * jac.linear[i].transpose() * fr.com_accel[i];
    f.noalias() -= jac.angular[i].transpose() * torque;
  }
  return f;
}

void require_finite(const GeneralizedState& s, const char* where) {
  if (!s.all_finite()) {
    throw NonFiniteState(std::string("non-finite state in ") + where);
  }
}

}  // namespace

void SatelliteParams::validate() const {
  const std::pair<const char*, double> fields[] = {
      {"m1", m1},   {"m2", m2},   {"m3", m3},   {"l_s", l_s},
      {"b_s", b_s}, {"h_s", h_s}, {"r1", r1},   {"r2", r2},
      {"l1", l1},   {"l2", l2},   {"p_x", p_x}, {"p_z", p_z}};
  for (const auto& [name, value] : fields) {
    if (!std::isfinite(value) || value <= 0.0) {
      std::ostringstream msg;
      msg << "satellite." << name << ": must be finite and > 0 (got " << value
          << ")";
      throw InvalidConfig(msg.str());
    }
  }
}

std::array<Vec3, 3> SatelliteParams::principal_inertia() const {
  auto cylinder = [](double m, double r, double l) {
    const double axial = 0.5 * m * r * r;
    const double transverse = m * (3.0 * r * r + l * l) / 12.0;
    return Vec3(axial, transverse, transverse);
  };
  const Vec3 body(m1 * (b_s * b_s + h_s * h_s) / 12.0,
                  m1 * (l_s * l_s + h_s * h_s) / 12.0,
                  m1 * (l_s * l_s + b_s * b_s) / 12.0);
  return {body, cylinder(m2, r1, l1), cylinder(m3, r2, l2)};
}

Vec18 GeneralizedState::packed() const {
  Vec18 s;
  s << q1, q2, q1dot, q2dot;
  return s;
}

GeneralizedState GeneralizedState::unpack(const Vec18& s) {
  GeneralizedState out;
  out.q1 = s.segment<6>(0);
  out.q2 = s.segment<3>(6);
  out.q1dot = s.segment<6>(9);
  out.q2dot = s.segment<3>(15);
  return out;
}

Vec9 GeneralizedState::output() const {
  Vec9 y;
  y << q1, q2;
  return y;
}

Vec9 GeneralizedState::output_rate() const {
  Vec9 y;
  y << q1dot, q2dot;
  return y;
}

bool GeneralizedState::all_finite() const {
  return q1.allFinite() && q2.allFinite() && q1dot.allFinite() &&
         q2dot.allFinite();
}

Vec18 StateDerivative::packed() const {
  Vec18 s;
  s << q1dot, q2dot, q1ddot, q2ddot;
  return s;
}

RotationSet rotation_matrices(double phi, double theta, double psi) {
  auto to_eigen = [](const detail::M3<double>& A) {
    Mat3 R;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) R(r, c) = A[r][c];
    return R;
  };
  return {to_eigen(detail::rot_x(phi)), to_eigen(detail::rot_y(theta)),
          to_eigen(detail::rot_z(psi))};
}

Mat3 attitude(double phi, double theta, double psi) {
  const RotationSet A = rotation_matrices(phi, theta, psi);
  return A.z * A.y * A.x;
}

Kinematics forward_kinematics(const SatelliteParams& params, const Vec6& q1,
                              const Vec3& q2) {
  const auto f = detail::chain_frames(geometry(params), stack(q1, q2));
  Kinematics out;
  for (int i = 0; i < 3; ++i) {
    out.com[i] = Vec3(f.com[i][0], f.com[i][1], f.com[i][2]);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) out.rotation[i](r, c) = f.rot[i][r][c];
  }
  return out;
}

std::array<Vec3, 3> angular_velocities(const SatelliteParams& params,
                                       const GeneralizedState& state) {
  const auto q = stack(state.q1, state.q2);
  const auto qd = stack_rate(state);
  std::array<Jet1, 9> jq;
  for (int k = 0; k < 9; ++k) jq[k] = Jet1(q[k], {qd[k]});
  const auto f = detail::chain_frames(geometry(params), jq);
  std::array<Vec3, 3> omega;
  for (int i = 0; i < 3; ++i) {
    Mat3 R, Rd;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        R(r, c) = f.rot[i][r][c].a;
        Rd(r, c) = f.rot[i][r][c].v[0];
      }
    omega[i] = vee(R.transpose() * Rd);
  }
  return omega;
}

BodyJacobians jacobians(const SatelliteParams& params, const Vec6& q1,
                        const Vec3& q2) {
  return jacobian_sweep(params, q1, q2).jac;
}

Mat6 mass_matrix(const SatelliteParams& params, const Vec6& q1,
                 const Vec3& q2) {
  return assemble_mass(params, jacobian_sweep(params, q1, q2).jac);
}

Mat6 input_matrix(const SatelliteParams& params, const Vec6& q1,
                  const Vec3& q2) {
  const JacobianSweep sweep = jacobian_sweep(params, q1, q2);
  return assemble_input(sweep.jac, sweep.rot[0]);
}

Vec6 bias_forces(const SatelliteParams& params,
                 const GeneralizedState& state) {
  const JacobianSweep sweep = jacobian_sweep(params, state.q1, state.q2);
  return assemble_bias(params, sweep.jac, frame_rates(params, state));
}

DynamicsTerms dynamics_terms(const SatelliteParams& params,
                             const GeneralizedState& state) {
  const JacobianSweep sweep = jacobian_sweep(params, state.q1, state.q2);
  DynamicsTerms terms;
  terms.mass = assemble_mass(params, sweep.jac);
  terms.input = assemble_input(sweep.jac, sweep.rot[0]);
  terms.bias = assemble_bias(params, sweep.jac, frame_rates(params, state));
  return terms;
}

Vec6 body_acceleration(const DynamicsTerms& terms, const Vec6& u_body) {
  const Eigen::LDLT<Mat6> ldlt(terms.mass);
  // Pivots bound the smallest eigenvalue from above, so a small pivot is a
  // cheap screen; the eigenvalue test decides.
  const bool suspicious = ldlt.info() != Eigen::Success ||
                          !ldlt.isPositive() ||
                          ldlt.vectorD().minCoeff() < 1e-6;
  if (suspicious) {
    const Eigen::SelfAdjointEigenSolver<Mat6> eig(terms.mass,
                                                  Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    if (!(lo > kMinMassEigenvalue)) {
      std::ostringstream msg;
      msg << "mass matrix not invertible (min eigenvalue " << lo << ")";
      throw SingularMassMatrix(msg.str());
    }
  }
  return ldlt.solve(terms.bias + terms.input * u_body);
}

StateDerivative dynamics_rhs(const SatelliteParams& params, double /*t*/,
                             const GeneralizedState& state, const Vec9& u) {
  if (!u.allFinite()) throw InvalidArgument("dynamics_rhs: non-finite input");
  require_finite(state, "dynamics_rhs");
  const DynamicsTerms terms = dynamics_terms(params, state);
  StateDerivative d;
  d.q1dot = state.q1dot;
  d.q2dot = state.q2dot;
  d.q1ddot = body_acceleration(terms, u.head<6>());
  d.q2ddot = u.tail<3>();
  return d;
}

double kinetic_energy(const SatelliteParams& params,
                      const GeneralizedState& state) {
  const double masses[3] = {params.m1, params.m2, params.m3};
  const auto inertia = params.principal_inertia();
  const auto fr = frame_rates(params, state);
  double T = 0.0;
  for (int i = 0; i < 3; ++i) {
    const Vec3 omega = vee(fr.rot[i].transpose() * fr.rot_rate[i]);
    T += 0.5 * masses[i] * fr.com_rate[i].squaredNorm();
    T += 0.5 * omega.dot(inertia[i].cwiseProduct(omega));
  }
  return T;
}

Vec3 linear_momentum(const SatelliteParams& params,
                     const GeneralizedState& state) {
  const double masses[3] = {params.m1, params.m2, params.m3};
  const auto fr = frame_rates(params, state);
  Vec3 p = Vec3::Zero();
  for (int i = 0; i < 3; ++i) p += masses[i] * fr.com_rate[i];
  return p;
}

GeneralizedState rk4_step(const SatelliteParams& params,
                          const GeneralizedState& state, double t, double dt,
                          const ControlLaw& control) {
  auto deriv = [&](double tau, const Vec18& x) {
    const GeneralizedState s = GeneralizedState::unpack(x);
    return dynamics_rhs(params, tau, s, control(tau, s)).packed();
  };
  const Vec18 x = state.packed();
  const Vec18 k1 = deriv(t, x);
  const Vec18 k2 = deriv(t + 0.5 * dt, x + 0.5 * dt * k1);
  const Vec18 k3 = deriv(t + 0.5 * dt, x + 0.5 * dt * k2);
  const Vec18 k4 = deriv(t + dt, x + dt * k3);
  const GeneralizedState next =
      GeneralizedState::unpack(x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  require_finite(next, "rk4_step");
  return next;
}

long step_count(double t0, double t1, double dt) {
  if (!(dt > 0.0) || !(t1 >= t0) || !std::isfinite(t1 - t0)) {
    throw InvalidArgument("integrate: need dt > 0 and t1 >= t0");
  }
  const double ratio = (t1 - t0) / dt;
  const long n = std::lround(ratio);
  if (std::abs((t1 - t0) - static_cast<double>(n) * dt) >
      1e-12 * std::max(1.0, std::abs(t1 - t0))) {
    std::ostringstream msg;
    msg << "integrate: dt " << dt << " does not divide interval " << (t1 - t0);
    throw InvalidArgument(msg.str());
  }
  return n;
}

std::vector<TimedState> integrate(const SatelliteParams& params,
                                  const GeneralizedState& state,
                                  const ControlLaw& control, double t0,
                                  double t1, double dt) {
  require_finite(state, "integrate");
  const long n = step_count(t0, t1, dt);
  std::vector<TimedState> out;
  out.reserve(static_cast<std::size_t>(n) + 1);
  out.push_back({t0, state});
  GeneralizedState s = state;
  for (long k = 0; k < n; ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    s = rk4_step(params, s, t, dt, control);
    out.push_back({t0 + static_cast<double>(k + 1) * dt, s});
  }
  return out;
}

void write_trajectory_csv(std::ostream& out,
                          const std::vector<TimedState>& trajectory) {
  out << "t,x,y,z,phi,theta,psi,theta1,psi1,theta2,"
         "xdot,ydot,zdot,phidot,thetadot,psidot,theta1dot,psi1dot,theta2dot\n";
  const auto old_precision = out.precision(17);
  for (const auto& [t, s] : trajectory) {
    out << t;
    const Vec18 x = s.packed();
    for (int i = 0; i < 18; ++i) out << ',' << x[i];
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace satdock
