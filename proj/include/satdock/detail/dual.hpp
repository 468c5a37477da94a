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

// Forward-mode dual numbers with N infinitesimal directions. The scalar type
// may itself be a Dual, which gives nested (hyper-dual) numbers for second
// directional derivatives.

#ifndef SATDOCK_DETAIL_DUAL_HPP_
#define SATDOCK_DETAIL_DUAL_HPP_

#include <array>
#include <cmath>

namespace satdock::detail {

template <typename T, int N>
struct Dual {
  T a{};                 // value
  std::array<T, N> v{};  // partials

  Dual() = default;
  Dual(double x) : a(x) {}  // NOLINT: implicit lift of constants
  Dual(T x, const std::array<T, N>& d) : a(x), v(d) {}

  Dual& operator+=(const Dual& o) {
    a += o.a;
    for (int i = 0; i < N; ++i) v[i] += o.v[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    a -= o.a;
    for (int i = 0; i < N; ++i) v[i] -= o.v[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    for (int i = 0; i < N; ++i) v[i] = v[i] * o.a + a * o.v[i];
    a *= o.a;
    return *this;
  }
};

template <typename T, int N>
Dual<T, N> operator-(const Dual<T, N>& x) {
  Dual<T, N> r;
  r.a = -x.a;
  for (int i = 0; i < N; ++i) r.v[i] = -x.v[i];
  return r;
}

template <typename T, int N>
Dual<T, N> operator+(Dual<T, N> x, const Dual<T, N>& y) {
  return x += y;
}

template <typename T, int N>
Dual<T, N> operator-(Dual<T, N> x, const Dual<T, N>& y) {
  return x -= y;
}

template <typename T, int N>
Dual<T, N> operator*(Dual<T, N> x, const Dual<T, N>& y) {
  return x *= y;
}

template <typename T, int N>
Dual<T, N> operator*(Dual<T, N> x, double s) {
  x.a = x.a * s;
  for (int i = 0; i < N; ++i) x.v[i] = x.v[i] * s;
  return x;
}

template <typename T, int N>
Dual<T, N> operator*(double s, const Dual<T, N>& x) {
  return x * s;
}

template <typename T, int N>
Dual<T, N> operator+(Dual<T, N> x, double s) {
  x.a = x.a + s;
  return x;
}

template <typename T, int N>
Dual<T, N> operator+(double s, const Dual<T, N>& x) {
  return x + s;
}

template <typename T, int N>
Dual<T, N> operator-(Dual<T, N> x, double s) {
  x.a = x.a - s;
  return x;
}

template <typename T, int N>
Dual<T, N> operator-(double s, const Dual<T, N>& x) {
  return -x + s;
}

template <typename T, int N>
Dual<T, N> sin(const Dual<T, N>& x) {
  using std::cos;
  using std::sin;
  const T c = cos(x.a);
  Dual<T, N> r;
  r.a = sin(x.a);
  for (int i = 0; i < N; ++i) r.v[i] = c * x.v[i];
  return r;
}

template <typename T, int N>
Dual<T, N> cos(const Dual<T, N>& x) {
  using std::cos;
  using std::sin;
  const T s = sin(x.a);
  Dual<T, N> r;
  r.a = cos(x.a);
  for (int i = 0; i < N; ++i) r.v[i] = -(s * x.v[i]);
  return r;
}

// Seeds x as variable `index` of an N-direction dual.
template <int N>
Dual<double, N> variable(double x, int index) {
  Dual<double, N> r(x);
  r.v[index] = 1.0;
  return r;
}

}  // namespace satdock::detail

#endif  // SATDOCK_DETAIL_DUAL_HPP_
