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

#include "fvin/mpcctl.hpp"

#include <algorithm>
#include <cmath>

namespace fvin {

CostSpec CostSpec::pendulum_swingup() {
  CostSpec c;
  c.R_goal = Vec3(-1.0, -1.0, 1.0).asDiagonal();
  c.w_att = 1.0;
  c.w_omega = 0.1;
  c.w_u = 1e-4;
  return c;
}

CostSpec CostSpec::quadrotor_track() {
  CostSpec c;
  c.R_goal = Mat3::Identity();
  c.w_pos = 1.2;
  c.w_att = 1e-5;
  c.w_vel = 1.2;
  c.w_omega = 1e-4;
  c.w_u = 1e-6;
  return c;
}

double stage_cost(const CostSpec& c, const SE3State& s,
                  const Eigen::VectorXd& u, const Vec3& x_ref) {
  double out = c.w_att * (3.0 - (c.R_goal.transpose() * s.R.matrix()).trace());
  out += c.w_omega * s.omega.squaredNorm() + c.w_u * u.squaredNorm();
  if (c.uses_position())
    out += c.w_pos * (s.x - x_ref).squaredNorm() + c.w_vel * s.v.squaredNorm();
  return out;
}

MPCPlanner::MPCPlanner(const TapeStepper& stepper, const MPCProblem& prob)
    : stepper_(&stepper), prob_(prob) {
  udim_ = stepper.control_dim();
  att_only_ = stepper.attitude_only();
  if (prob_.horizon < 1) throw InvalidInput("MPC horizon must be positive");
  if (prob_.u_lo.size() != udim_ || prob_.u_hi.size() != udim_)
    throw InvalidInput("MPC control bounds do not match the control dimension");
  if ((prob_.u_hi - prob_.u_lo).minCoeff() < 0.0)
    throw InvalidInput("MPC control bounds are inverted");
  if (!(prob_.terminal_weight > 0.0))
    throw InvalidInput("MPC terminal weight must be positive");
  if (prob_.cost.uses_position() && att_only_)
    throw InvalidInput("position tracking cost on an attitude-only model");
  use_ref_ = prob_.cost.uses_position() && prob_.cost.w_pos > 0.0;
  build();
}

void MPCPlanner::build() {
  const CostSpec& c = prob_.cost;
  R_in_ = tape_.input(9);
  w_in_ = tape_.input(3);
  StateRefs s;
  s.R = R_in_;
  s.w = w_in_;
  if (!att_only_) {
    x_in_ = tape_.input(3);
    v_in_ = tape_.input(3);
    s.x = x_in_;
    s.v = v_in_;
  }

  const Eigen::Matrix<double, 3, 3, Eigen::RowMajor> goal_rm = c.R_goal;
  VR goal = tape_.constant(goal_rm.data(), 9);

  auto stage = [&](const StateRefs& st, VR u, VR ref) {
    VR term = tape_.axpy(-1.0, tape_.trace3(tape_.matmul_tn(goal, st.R)),
                         tape_.constant_scalar(3.0));
    term = tape_.scale(term, c.w_att);
    term = tape_.add(term, tape_.scale(tape_.sum_sq(st.w), c.w_omega));
    term = tape_.add(term, tape_.scale(tape_.sum_sq(u), c.w_u));
    if (c.uses_position()) {
      if (ref.valid())
        term = tape_.add(
            term, tape_.scale(tape_.sum_sq(tape_.sub(st.x, ref)), c.w_pos));
      term = tape_.add(term, tape_.scale(tape_.sum_sq(st.v), c.w_vel));
    }
    return term;
  };

  std::vector<VR> u_refs;
  VR total = {};
  for (int k = 0; k < prob_.horizon; ++k) {
    u_refs.push_back(tape_.var(k * udim_, udim_));
    VR ref = {};
    if (use_ref_) {
      ref_in_.push_back(tape_.input(3));
      ref = ref_in_.back();
    }
    VR term = stage(s, u_refs.back(), ref);
    total = total.valid() ? tape_.add(total, term) : term;
    s = stepper_->emit_step(tape_, s, u_refs.back());
  }
  VR ref = {};
  if (use_ref_) {
    ref_in_.push_back(tape_.input(3));
    ref = ref_in_.back();
  }
  VR term = stage(s, u_refs.back(), ref);
  if (prob_.terminal_weight != 1.0)
    term = tape_.scale(term, prob_.terminal_weight);
  total = tape_.add(total, term);
  cost_ = total;
}

double MPCPlanner::eval(const std::vector<double>& u) {
  tape_.execute(u.data());
  return tape_.scalar(cost_);
}

ControlPlan MPCPlanner::solve(const SE3State& s, const std::vector<Vec3>& refs,
                              const std::vector<Eigen::VectorXd>* warm) {
  const int N = prob_.horizon;
  const int n = N * udim_;

  const Eigen::Matrix<double, 3, 3, Eigen::RowMajor> R_rm = s.R.matrix();
  tape_.set_input(R_in_, R_rm.data(), 9);
  tape_.set_input(w_in_, s.omega.data(), 3);
  if (!att_only_) {
    tape_.set_input(x_in_, s.x.data(), 3);
    tape_.set_input(v_in_, s.v.data(), 3);
  }
  if (use_ref_) {
    if (static_cast<int>(refs.size()) != N + 1)
      throw InvalidInput("MPC needs horizon + 1 position references");
    for (int k = 0; k <= N; ++k)
      tape_.set_input(ref_in_[k], refs[k].data(), 3);
  }

  auto clamp_flat = [&](std::vector<double>& u) {
    for (int k = 0; k < N; ++k)
      for (int j = 0; j < udim_; ++j)
        u[k * udim_ + j] =
            std::clamp(u[k * udim_ + j], prob_.u_lo[j], prob_.u_hi[j]);
  };

  // One global step size cannot serve control components whose admissible
  // ranges differ by orders of magnitude (quadrotor thrust vs torque), so
  // the descent runs in box-normalized coordinates. The widest component
  // keeps the nominal rate and narrower ones are scaled down with their
  // range; a single-component problem is unaffected.
  std::vector<double> scale(udim_, 1.0);
  {
    double rmax = 0.0;
    for (int j = 0; j < udim_; ++j)
      rmax = std::max(rmax, prob_.u_hi[j] - prob_.u_lo[j]);
    if (rmax > 0.0)
      for (int j = 0; j < udim_; ++j) {
        const double r = prob_.u_hi[j] - prob_.u_lo[j];
        if (r > 0.0) scale[j] = r / rmax;
      }
  }

  std::vector<double> u(n, 0.0);
  if (warm) {
    if (static_cast<int>(warm->size()) != N)
      throw InvalidInput("warm start length does not match the horizon");
    for (int k = 0; k < N; ++k)
      for (int j = 0; j < udim_; ++j) u[k * udim_ + j] = (*warm)[k][j];
  }
  clamp_flat(u);

  double cur = eval(u);
  if (!std::isfinite(cur) && warm) {
    std::fill(u.begin(), u.end(), 0.0);
    clamp_flat(u);
    cur = eval(u);
  }
  if (!std::isfinite(cur))
    throw ControllerDiverged("MPC rollout is non-finite at the initial guess");

  AdamState adam(n, prob_.lr);
  std::vector<double> sc(n);
  for (int i = 0; i < n; ++i) sc[i] = scale[i % udim_];
  std::vector<double> g(n, 0.0), gy(n), y(n), ycand(n), cand(n);

  // A start at an exact equilibrium of the flow (hanging pendulum, zero
  // plan) is a stationary point of the shooting cost, so the descent loop
  // would never move. Detect the flat gradient and nudge the initial plan
  // off the saddle; the nudge is the new baseline, not an accepted iterate.
  tape_.backward(cost_, g.data());
  double gmax = 0.0;
  for (double v : g) gmax = std::max(gmax, std::abs(v));
  if (gmax <= 1e-12 * (1.0 + std::abs(cur))) {
    for (int k = 0; k < N; ++k)
      for (int j = 0; j < udim_; ++j)
        u[k * udim_ + j] += 0.01 * (prob_.u_hi[j] - prob_.u_lo[j]);
    clamp_flat(u);
    cur = eval(u);
  }
  for (int i = 0; i < n; ++i) y[i] = u[i] / sc[i];
  bool tape_at_u = true;
  int it = 0;
  for (; it < prob_.iters; ++it) {
    if (!tape_at_u) {
      tape_.execute(u.data());
      tape_at_u = true;
    }
    std::fill(g.begin(), g.end(), 0.0);
    tape_.backward(cost_, g.data());
    bool finite = true;
    for (double v : g)
      if (!std::isfinite(v)) finite = false;

    bool accepted = false;
    if (finite) {
      const long t0 = adam.t;
      const Eigen::VectorXd m0 = adam.m, v0 = adam.v;
      for (int i = 0; i < n; ++i) gy[i] = g[i] * sc[i];
      ycand = y;
      adam.step(ycand, gy);
      for (int i = 0; i < n; ++i) cand[i] = ycand[i] * sc[i];
      clamp_flat(cand);
      for (int i = 0; i < n; ++i) ycand[i] = cand[i] / sc[i];
      const double cnew = eval(cand);
      tape_at_u = false;
      if (std::isfinite(cnew) && cnew <= cur) {
        u = cand;
        y = ycand;
        cur = cnew;
        tape_at_u = true;
        adam.lr0 = std::min(adam.lr0 * 1.5, prob_.lr);
        accepted = true;
      } else {
        adam.t = t0;
        adam.m = m0;
        adam.v = v0;
      }
    }
    if (!accepted) {
      adam.lr0 *= 0.5;
      if (adam.lr0 < 1e-12) break;
    }
  }
  if (!tape_at_u) tape_.execute(u.data());

  ControlPlan plan;
  plan.cost = cur;
  plan.iters_used = it;
  plan.u.resize(N);
  for (int k = 0; k < N; ++k) {
    plan.u[k] = Eigen::VectorXd(udim_);
    for (int j = 0; j < udim_; ++j) plan.u[k][j] = u[k * udim_ + j];
  }
  return plan;
}

ClosedLoopResult run_closed_loop(MPCPlanner& planner, const SE3State& s0,
                                 int steps, const PlantStep& plant,
                                 const PositionRef& ref) {
  if (planner.uses_position_ref() && !ref)
    throw InvalidInput("closed loop needs a position reference function");
  const int N = planner.problem().horizon;
  ClosedLoopResult out;
  out.states.push_back(s0);
  SE3State s = s0;
  std::vector<Eigen::VectorXd> warm;
  for (int k = 0; k < steps; ++k) {
    std::vector<Vec3> refs;
    if (planner.uses_position_ref()) {
      refs.reserve(N + 1);
      for (int j = 0; j <= N; ++j) refs.push_back(ref(k + j));
    }
    ControlPlan plan =
        planner.solve(s, refs, warm.empty() ? nullptr : &warm);
    out.controls.push_back(plan.u[0]);
    out.planned_costs.push_back(plan.cost);
    s = plant(s, plan.u[0]);
    out.states.push_back(s);
    warm = plan.u;
    warm.erase(warm.begin());
    warm.push_back(warm.back());
  }
  return out;
}

}  // namespace fvin
