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

#include "fvin/diffengine.hpp"
#include "fvin/dynmodel.hpp"
#include "fvin/integrator.hpp"

namespace fvin {

using VR = Tape::ValRef;

// Whether model parameters enter a graph as differentiable variables
// (training) or baked constants (planning with a frozen model).
enum class ParamMode { Variable, Constant };

// Emits the components of a DynamicsModel onto a tape. The gradient of the
// potential with respect to the configuration is itself emitted as closed-form
// backprop ops, so the outer reverse sweep differentiates it with respect to
// the parameters for free.
class ModelGraph {
 public:
  ModelGraph(Tape& t, const DynamicsModel& m, ParamMode mode);

  const DynamicsModel& model() const { return *m_; }
  Tape& tape() { return *t_; }

  VR mlp(const MLPLayout& net, VR in);

  struct PotentialRefs {
    VR U;
    VR dU_dx;  // invalid for the SO(3) convention
    VR dU_dR;  // 9
  };
  PotentialRefs potential(VR q);

  VR inertia(VR q);  // 9
  VR mass();         // length 1; constant 1 for SO(3)
  VR inv_mass();

  struct ForceRefs {
    VR fR_minus, fR_plus;  // fR_plus invalid for SO(3) (zero)
    VR fx_minus, fx_plus;  // invalid for SO(3)
  };
  ForceRefs forces(VR q, VR u);

  VR param_ref(int offset, int len);

 private:
  Tape* t_;
  const DynamicsModel* m_;
  ParamMode mode_;
  VR mass_ = {}, inv_mass_ = {}, const_inertia_ = {};
  struct NetRefs {
    std::vector<VR> weights, biases;
  };
  NetRefs net_params(const MLPLayout& net);
};

// hat(xi) = (dU/dR)'R - R'(dU/dR), emitted via two products and a skew read.
VR emit_xi(Tape& t, VR R, VR dU_dR);

// Unrolled Newton iteration for hat(a) = Z J_d - J_d Z', returning z with
// Z = cay(z). Fixed iteration count, differentiable.
VR emit_newton(Tape& t, VR a, VR J, int iters);

// Closed-form Cayley transform to a 3x3 matrix.
VR emit_cayley(Tape& t, VR z);

struct StateRefs {
  VR x, R, v, w;  // x and v invalid for attitude-only graphs
};

// One integrator step on the tape; the SO(3) variant if s.x is invalid.
StateRefs emit_step(Tape& t, ModelGraph& mg, const StateRefs& s, VR u,
                    const IntegratorParams& p, int newton_iters);

// Model interface for planners: emits one discrete step on a tape. Lets the
// same MPC machinery run over a learnt model or analytic ground truth.
class TapeStepper {
 public:
  virtual ~TapeStepper() = default;
  virtual int control_dim() const = 0;
  virtual bool attitude_only() const = 0;
  virtual StateRefs emit_step(Tape& t, const StateRefs& s, VR u) const = 0;
};

// Stepper over a frozen DynamicsModel.
class LearntStepper : public TapeStepper {
 public:
  LearntStepper(const DynamicsModel& m, const IntegratorParams& p,
                int newton_iters)
      : m_(m), p_(p), iters_(newton_iters) {}
  int control_dim() const override { return m_.control_dim(); }
  bool attitude_only() const override {
    return m_.convention() == ForceConvention::PendulumSO3;
  }
  StateRefs emit_step(Tape& t, const StateRefs& s, VR u) const override;

 private:
  const DynamicsModel& m_;
  IntegratorParams p_;
  int iters_;
};

}  // namespace fvin
