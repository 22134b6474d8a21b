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

#include <functional>
#include <vector>

#include "fvin/liegroup.hpp"

namespace fvin {

// Step size and trapezoidal quadrature weight of the discrete Lagrangian.
struct IntegratorParams {
  IntegratorParams(double h, double alpha = 0.5);
  double h;
  double alpha;
};

// The attitude update solves a 3d algebraic equation per step; training code
// differentiates through a fixed number of iterations instead of a
// tolerance-terminated loop so the computation graph has a fixed shape.
struct NewtonConfig {
  int max_iters = 10;
  double tol = 1e-12;
  int unroll_for_grad = 3;
};

struct SE3State {
  Vec3 x = Vec3::Zero();  // position, world frame
  Rotation R;             // body-to-world
  Vec3 v = Vec3::Zero();  // dx/dt, world frame
  Vec3 omega = Vec3::Zero();  // angular velocity, body frame
};

struct SO3State {
  Rotation R;
  Vec3 omega = Vec3::Zero();
};

// Left/right discrete forcing impulses of one step. These approximate the
// integral of the continuous generalized force against the variations over
// [kh, (k+1)h], so for a continuous gain g_c one has f ~ h*g_c*u.
struct DiscreteForces {
  Vec3 fR_minus = Vec3::Zero();
  Vec3 fR_plus = Vec3::Zero();
  Vec3 fx_minus = Vec3::Zero();
  Vec3 fx_plus = Vec3::Zero();
  static DiscreteForces zero() { return DiscreteForces{}; }
};

struct PotentialEval {
  double U = 0.0;
  Vec3 dU_dx = Vec3::Zero();
  Mat3 dU_dR = Mat3::Zero();
};

// What the integrator needs from a mechanical model, analytic or learnt.
struct ModelQueries {
  std::function<double()> mass;
  std::function<Mat3(const Vec3&, const Rotation&)> inertia;
  std::function<PotentialEval(const Vec3&, const Rotation&)> potential;
  std::function<DiscreteForces(const Vec3&, const Rotation&,
                               const Eigen::VectorXd&)>
      forces;
};

// J_d = 1/2 tr(J) I - J, the inertia that multiplies the group element in the
// discrete equations. Satisfies hat(z) J_d + J_d hat(z) = hat(J z).
Mat3 nonstandard_inertia(const Mat3& J);

// Moment of the potential about the attitude: hat(xi) = (dU/dR)' R - R' (dU/dR).
Vec3 xi_of(const Rotation& R, const Mat3& dU_dR);

struct AttitudeSolve {
  Vec3 z;
  Rotation Z;
  int iters;
  double residual;
};

// Solves hat(a) = Z J_d - J_d Z' for Z = cay(z) via the equivalent vector
// equation phi(z) = a + a x z + z (a'z) - 2 J z = 0, Newton iteration from
// z0 = (2J)^-1 a. Throws NewtonDiverged if the tolerance is not met.
AttitudeSolve solve_attitude(const Vec3& a, const Mat3& J,
                             const NewtonConfig& cfg = {});

// One step of the forced variational integrator in Hamiltonian form.
SE3State step_se3(const SE3State& s, const DiscreteForces& f,
                  const ModelQueries& model, const IntegratorParams& p,
                  const NewtonConfig& newton = {});

// Restriction to the rotational subsystem.
SO3State step_so3(const SO3State& s, const DiscreteForces& f,
                  const ModelQueries& model, const IntegratorParams& p,
                  const NewtonConfig& newton = {});

// Two-pose form of the same flow (discrete Euler-Lagrange equations): advances
// (q_prev, q_curr) to q_next without velocities. f_prev carries the plus
// impulses of the previous step, f_curr the minus impulses of the current one.
SE3Pose step_position_only(const SE3Pose& q_prev, const SE3Pose& q_curr,
                           const DiscreteForces& f_prev,
                           const DiscreteForces& f_curr,
                           const ModelQueries& model,
                           const IntegratorParams& p,
                           const NewtonConfig& newton = {});

// Iterates step_se3 under a control sequence; returns the N+1 visited states.
std::vector<SE3State> rollout(const SE3State& s0,
                              const std::vector<Eigen::VectorXd>& controls,
                              const ModelQueries& model,
                              const IntegratorParams& p,
                              const NewtonConfig& newton = {});

// 1/2 m|v|^2 + 1/2 w'Jw + U(q).
double total_energy(const SE3State& s, const ModelQueries& model);

}  // namespace fvin
