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

#include "fvin/step_graph.hpp"

namespace fvin {

// Quadratic-style tracking cost
//   w_pos |x - x_ref|^2 + w_att tr(I - R_goal' R) + w_vel |v|^2
//   + w_omega |w|^2 + w_u |u|^2.
// Position and velocity terms only apply to full-pose models.
struct CostSpec {
  Mat3 R_goal = Mat3::Identity();
  double w_pos = 0.0;
  double w_att = 1.0;
  double w_vel = 0.0;
  double w_omega = 0.1;
  double w_u = 1e-4;

  bool uses_position() const { return w_pos > 0.0 || w_vel > 0.0; }

  // Upright target for the e3-axis pendulum; cost 4 at the hanging state.
  static CostSpec pendulum_swingup();
  // Hover or waypoint tracking about the identity attitude.
  static CostSpec quadrotor_track();
};

double stage_cost(const CostSpec& c, const SE3State& s,
                  const Eigen::VectorXd& u, const Vec3& x_ref = Vec3::Zero());

struct MPCProblem {
  int horizon = 20;
  CostSpec cost;
  // The terminal stage cost is scaled by this factor. Values above one
  // approximate the cost tail beyond the horizon and sharpen tracking
  // when the horizon is short.
  double terminal_weight = 1.0;
  Eigen::VectorXd u_lo, u_hi;  // box limits, one entry per control channel
  int iters = 50;
  double lr = 0.1;
};

struct ControlPlan {
  std::vector<Eigen::VectorXd> u;
  double cost = 0.0;
  int iters_used = 0;
};

// Receding-horizon planner by direct shooting through the discrete step on a
// tape. The graph (horizon rollout plus summed stage costs, with the terminal
// state charged against the last control) is built once; each solve rebinds
// the initial state and runs projected Adam with backtracking on the controls.
class MPCPlanner {
 public:
  MPCPlanner(const TapeStepper& stepper, const MPCProblem& prob);

  const MPCProblem& problem() const { return prob_; }
  bool uses_position_ref() const { return use_ref_; }
  int control_dim() const { return udim_; }

  // refs must hold horizon + 1 positions when the cost tracks position
  // (stage k compares against refs[k]); pass {} otherwise. For attitude-only
  // models the x and v fields of s are ignored.
  ControlPlan solve(const SE3State& s, const std::vector<Vec3>& refs = {},
                    const std::vector<Eigen::VectorXd>* warm = nullptr);

 private:
  const TapeStepper* stepper_;
  MPCProblem prob_;
  int udim_;
  bool att_only_;
  bool use_ref_ = false;
  Tape tape_;
  VR cost_ = {};
  VR x_in_ = {}, R_in_ = {}, v_in_ = {}, w_in_ = {};
  std::vector<VR> ref_in_;

  void build();
  double eval(const std::vector<double>& u);
};

using PlantStep =
    std::function<SE3State(const SE3State&, const Eigen::VectorXd&)>;
using PositionRef = std::function<Vec3(int)>;

struct ClosedLoopResult {
  std::vector<SE3State> states;           // steps + 1 entries
  std::vector<Eigen::VectorXd> controls;  // steps entries
  std::vector<double> planned_costs;      // predicted cost of each plan
};

// Plans, applies the first control through the plant, then shifts the plan
// one slot (duplicating the last entry) to warm-start the next solve. ref,
// when given, maps the absolute step index to the position target.
ClosedLoopResult run_closed_loop(MPCPlanner& planner, const SE3State& s0,
                                 int steps, const PlantStep& plant,
                                 const PositionRef& ref = {});

}  // namespace fvin
