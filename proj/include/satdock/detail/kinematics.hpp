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

// Scalar-generic forward kinematics of the satellite body and its two-link
// arm. Instantiated with double for evaluation and with Dual for Jacobians
// and bias accelerations.
//
// Convention:
//   body attitude   R1 = Az(psi) Ay(theta) Ax(phi)   (body -> world)
//   mount point     r1 + R1 (p_x, 0, p_z)
//   link 1          R2 = R1 Az(psi1) Ay(theta1), axis along local +x
//   link 2          R3 = R2 Ay(theta2),         axis along local +x
// Link centres of mass sit at mid-length.

#ifndef SATDOCK_DETAIL_KINEMATICS_HPP_
#define SATDOCK_DETAIL_KINEMATICS_HPP_

#include <array>
#include <cmath>

namespace satdock::detail {

template <typename S>
using V3 = std::array<S, 3>;
template <typename S>
using M3 = std::array<std::array<S, 3>, 3>;

template <typename S>
M3<S> rot_x(const S& a) {
  using std::cos;
  using std::sin;
  const S c = cos(a), s = sin(a);
  return {{{S(1.0), S(0.0), S(0.0)}, {S(0.0), c, -s}, {S(0.0), s, c}}};
}

template <typename S>
M3<S> rot_y(const S& a) {
  using std::cos;
  using std::sin;
  const S c = cos(a), s = sin(a);
  return {{{c, S(0.0), s}, {S(0.0), S(1.0), S(0.0)}, {-s, S(0.0), c}}};
}

template <typename S>
M3<S> rot_z(const S& a) {
  using std::cos;
  using std::sin;
  const S c = cos(a), s = sin(a);
  return {{{c, -s, S(0.0)}, {s, c, S(0.0)}, {S(0.0), S(0.0), S(1.0)}}};
}

template <typename S>
M3<S> mul(const M3<S>& A, const M3<S>& B) {
  M3<S> C;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      S acc = A[i][0] * B[0][j];
      acc += A[i][1] * B[1][j];
      acc += A[i][2] * B[2][j];
      C[i][j] = acc;
    }
  return C;
}

// A * (x, 0, z): the only local offsets the chain uses.
template <typename S>
V3<S> mul_xz(const M3<S>& A, double x, double z) {
  return {A[0][0] * x + A[0][2] * z, A[1][0] * x + A[1][2] * z,
          A[2][0] * x + A[2][2] * z};
}

template <typename S>
V3<S> add(const V3<S>& a, const V3<S>& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

struct ChainGeometry {
  double mount_x;
  double mount_z;
  double link1;
  double link2;
};

template <typename S>
struct Frames {
  std::array<V3<S>, 3> com;
  std::array<M3<S>, 3> rot;
};

// q = (x, y, z, phi, theta, psi, theta1, psi1, theta2).
template <typename S>
Frames<S> chain_frames(const ChainGeometry& g, const std::array<S, 9>& q) {
  Frames<S> f;
  f.rot[0] = mul(mul(rot_z(q[5]), rot_y(q[4])), rot_x(q[3]));
  f.com[0] = {q[0], q[1], q[2]};
  const V3<S> mount = add(f.com[0], mul_xz(f.rot[0], g.mount_x, g.mount_z));
  f.rot[1] = mul(mul(f.rot[0], rot_z(q[7])), rot_y(q[6]));
  f.com[1] = add(mount, mul_xz(f.rot[1], 0.5 * g.link1, 0.0));
  const V3<S> elbow = add(mount, mul_xz(f.rot[1], g.link1, 0.0));
  f.rot[2] = mul(f.rot[1], rot_y(q[8]));
  f.com[2] = add(elbow, mul_xz(f.rot[2], 0.5 * g.link2, 0.0));
  return f;
}

}  // namespace satdock::detail

#endif  // SATDOCK_DETAIL_KINEMATICS_HPP_
