// Copyright 2026 The fvin Authors
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

#include "fvin/liegroup.hpp"

#include <cmath>

namespace fvin {

double orthogonality_error(const Mat3& m) {
  return (m.transpose() * m - Mat3::Identity()).norm();
}

Rotation::Rotation(const Mat3& m) : m_(m) {
  const double err = orthogonality_error(m);
  if (!(err <= kTol)) {
    throw NotARotation("matrix is not orthogonal: ||R'R - I|| = " +
                       std::to_string(err));
  }
  const double det = m.determinant();
  if (!(std::abs(det - 1.0) <= kTol)) {
    throw NotARotation("matrix has det " + std::to_string(det) +
                       ", not a proper rotation");
  }
}

Rotation Rotation::from_row_major(const std::array<double, 9>& a) {
  Mat3 m;
  m << a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7], a[8];
  return Rotation(m);
}

std::array<double, 9> Rotation::to_row_major() const {
  std::array<double, 9> a;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) a[3 * r + c] = m_(r, c);
  return a;
}

Rotation Rotation::transposed() const {
  Rotation out;
  out.m_ = m_.transpose();
  return out;
}

Mat3 hat(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

Vec3 vee(const Mat3& m) {
  const double skew_defect = (m + m.transpose()).norm();
  if (!(skew_defect <= 1e-8)) {
    throw NonSkewInput("vee of a non-skew matrix: ||M + M'|| = " +
                       std::to_string(skew_defect));
  }
  return 0.5 * Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
}

Rotation cayley(const Vec3& z) {
  // (I + S)(I - S)^-1 = ((1 - z'z)I + 2S(z) + 2zz') / (1 + z'z)
  const double zz = z.squaredNorm();
  Mat3 m = ((1.0 - zz) * Mat3::Identity() + 2.0 * hat(z) +
            2.0 * (z * z.transpose())) /
           (1.0 + zz);
  return Rotation(m);
}

Rotation exp_so3(const Vec3& w) {
  const double t = w.norm();
  double a, b;  // sin(t)/t, (1 - cos(t))/t^2
  if (t < 1e-8) {
    const double t2 = t * t;
    a = 1.0 - t2 / 6.0;
    b = 0.5 - t2 / 24.0;
  } else {
    a = std::sin(t) / t;
    b = (1.0 - std::cos(t)) / (t * t);
  }
  const Mat3 S = hat(w);
  return Rotation(Mat3(Mat3::Identity() + a * S + b * (S * S)));
}

Vec3 log_so3(const Rotation& R) {
  const Mat3& m = R.matrix();
  const double c = std::clamp(0.5 * (m.trace() - 1.0), -1.0, 1.0);
  const Vec3 u(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
  // sin(theta) read off the skew part keeps full absolute accuracy near pi,
  // where acos followed by sin would lose half the digits
  const double s = 0.5 * u.norm();
  const double theta = std::atan2(s, c);
  if (theta < 1e-8) {
    return 0.5 * u;
  }
  if (theta > M_PI - 1e-4) {
    // u is too small to scale reliably; the symmetric part gives the axis
    // projector nn' = ((R + R')/2 - cI) / (1 - c) free of the O(pi - theta)
    // skew contamination
    const Mat3 P =
        (0.5 * (m + m.transpose()) - c * Mat3::Identity()) / (1.0 - c);
    int k = 0;
    P.diagonal().maxCoeff(&k);
    Vec3 axis = P.col(k) / std::sqrt(P(k, k));
    if (s > 1e-12) {
      // just below pi the sign of the axis is still visible in u
      if (u.dot(axis) < 0.0) axis = -axis;
    } else {
      for (int i = 0; i < 3; ++i) {
        if (std::abs(axis[i]) > 1e-8) {
          if (axis[i] < 0.0) axis = -axis;
          break;
        }
      }
    }
    return theta * axis;
  }
  return (theta / (2.0 * s)) * u;
}

}  // namespace fvin
