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

#pragma once

#include <array>

#include <Eigen/Dense>

#include "fvin/errors.hpp"

namespace fvin {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Frobenius norm of R'R - I. Zero for exact rotations, and the quantity the
// structure-preservation claims are stated in.
double orthogonality_error(const Mat3& m);

// 3x3 rotation matrix with constructor-enforced group membership.
// Construction checks orthogonality and det(R) = +1 to 1e-9; integration code
// never re-orthonormalizes, so any drift would surface here as an exception.
class Rotation {
 public:
  static constexpr double kTol = 1e-9;

  Rotation() : m_(Mat3::Identity()) {}
  explicit Rotation(const Mat3& m);

  static Rotation identity() { return Rotation(); }
  static Rotation from_row_major(const std::array<double, 9>& a);

  const Mat3& matrix() const { return m_; }
  std::array<double, 9> to_row_major() const;

  Rotation transposed() const;
  Rotation operator*(const Rotation& o) const { return Rotation(m_ * o.m_); }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

 private:
  Mat3 m_;
};

// so(3) hat map: hat(v)w = v x w.
Mat3 hat(const Vec3& v);

// Inverse of hat. Throws NonSkewInput if ||M + M'||_F > 1e-8; extraction
// averages the off-diagonal pairs so exact skew matrices round-trip to 1e-15.
Vec3 vee(const Mat3& m);

// Cayley map cay(z) = (I + hat(z))(I - hat(z))^-1, evaluated in the
// denominator-free closed form. Onto rotations with angle < pi.
Rotation cayley(const Vec3& z);

// Rodrigues exponential.
Rotation exp_so3(const Vec3& w);

// Principal log, ||log|| <= pi. Near theta = pi the axis comes from the
// symmetric part of R; at exactly pi the sign convention is first nonzero
// component positive.
Vec3 log_so3(const Rotation& R);

struct SE3Pose {
  Vec3 x = Vec3::Zero();
  Rotation R;
};

}  // namespace fvin
