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

#include <cstdint>
#include <utility>
#include <vector>

#include "fvin/trainer.hpp"

namespace fvin {

// Planar pendulum, phi measured from the hanging position:
//   J33 phidd = -U0 sin(phi) + gain * u, i.e. phidd = -15 sin(phi) + 3u.
struct PendulumTruth {
  double J33 = 1.0 / 3.0;
  double U0 = 5.0;    // U(phi) = U0 (1 - cos phi), scale 2*U0 = 10
  double gain = 1.0;  // torque per unit control
};

// Reference continuous-time step: classic RK4 with 10 substeps.
std::pair<double, double> pendulum_step(const PendulumTruth& t, double phi,
                                        double phid, double u, double h);

// Rotation about e3 by phi; angular velocity (0, 0, phid).
SO3State pendulum_embed(double phi, double phid);
std::pair<double, double> pendulum_extract(const SO3State& s);

// Analytic model bound to the integrator interface. Discrete force impulses
// carry the step factor: f^{R-} = h * gain * u * e3.
ModelQueries pendulum_truth_queries(const PendulumTruth& t, double h);

// Rigid-body quadrotor with body-frame velocity dynamics
//   xd = R v_b, Rd = R hat(w), m vd_b = -m w x v_b + f e3 - m g R'e3,
//   J wd = -w x (J w) + tau,
// controls u = (f, tau1, tau2, tau3) with box limits below.
struct QuadrotorTruth {
  double mass = 0.027;
  Vec3 inertia_diag = Vec3(1.4e-5, 1.4e-5, 2.17e-5);
  double gravity = 9.81;
  double f_max = 0.595;  // thrust in [0, f_max]
  Vec3 tau_max = 1e-3 * Vec3(5.9, 5.9, 7.4);
};

// RK4 at h/10 with the rotation re-projected to the group after each substep.
// SE3State.v is the world-frame velocity; conversion happens inside.
SE3State quad_step(const QuadrotorTruth& t, const SE3State& s,
                   const Eigen::Vector4d& u, double h);

Eigen::Vector4d quad_clamp_control(const QuadrotorTruth& t,
                                   const Eigen::Vector4d& u);

ModelQueries quad_truth_queries(const QuadrotorTruth& t, double h);

double quad_true_energy(const QuadrotorTruth& t, const SE3State& s);
double pendulum_true_energy(const PendulumTruth& t, double phi, double phid);

struct DataGenSpec {
  double h = 0.02;
  std::uint64_t seed = 0;
  // pendulum: constant torque per trajectory, uniform start
  int trajectories = 512;
  int steps_per_traj = 10;
  double u_min = -3.0, u_max = 3.0;
  double phi_max = M_PI, phid_max = 1.0;
  // quadrotor: PD-flown set-point trajectories
  int quad_trajectories = 36;
  int quad_steps = 200;        // 4 s at h = 0.02
  int quad_keep_per_traj = 75; // stride-2 subsample of starting indices
  Vec3 cube_center = Vec3(0.0, 0.0, 1.0);
  double cube_half = 0.5;
  double att_perturb = 0.2;
  double pos_kp = 4.0, pos_kd = 3.0;
  // attitude loop poles must sit well inside the 50 Hz sampling rate:
  // kd/J ~ 21/s and wn = sqrt(kp/J) ~ 12/s keep h * pole < 0.5
  double att_kp = 2e-3, att_kd = 3e-4;
};

std::vector<TransitionPV> generate_pendulum_dataset(const DataGenSpec& spec);
std::vector<TransitionP> generate_pendulum_dataset_p(const DataGenSpec& spec);
std::vector<TransitionPV> generate_quadrotor_dataset(const DataGenSpec& spec);
std::vector<TransitionP> generate_quadrotor_dataset_p(const DataGenSpec& spec);

// Steppers over the true parameters, for planning without learning.
class PendulumTruthStepper : public TapeStepper {
 public:
  PendulumTruthStepper(const PendulumTruth& t, const IntegratorParams& p,
                       int newton_iters)
      : t_(t), p_(p), iters_(newton_iters) {}
  int control_dim() const override { return 1; }
  bool attitude_only() const override { return true; }
  StateRefs emit_step(Tape& tape, const StateRefs& s, VR u) const override;

 private:
  PendulumTruth t_;
  IntegratorParams p_;
  int iters_;
};

class QuadTruthStepper : public TapeStepper {
 public:
  QuadTruthStepper(const QuadrotorTruth& t, const IntegratorParams& p,
                   int newton_iters)
      : t_(t), p_(p), iters_(newton_iters) {}
  int control_dim() const override { return 4; }
  bool attitude_only() const override { return false; }
  StateRefs emit_step(Tape& tape, const StateRefs& s, VR u) const override;

 private:
  QuadrotorTruth t_;
  IntegratorParams p_;
  int iters_;
};

}  // namespace fvin
