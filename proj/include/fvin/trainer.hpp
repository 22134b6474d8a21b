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
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fvin/step_graph.hpp"

namespace fvin {

// One observed step with velocities at both ends.
struct TransitionPV {
  Vec3 x0 = Vec3::Zero();
  Rotation R0;
  Vec3 v0 = Vec3::Zero(), w0 = Vec3::Zero();
  Eigen::VectorXd u;
  Vec3 x1 = Vec3::Zero();
  Rotation R1;
  Vec3 v1 = Vec3::Zero(), w1 = Vec3::Zero();
};

// Three consecutive poses, no velocities.
struct TransitionP {
  Vec3 x0 = Vec3::Zero();
  Rotation R0;
  Vec3 x1 = Vec3::Zero();
  Rotation R1;
  Vec3 x2 = Vec3::Zero();
  Rotation R2;
  Eigen::VectorXd u0, u1;
};

// Which residual the model is trained on.
//   Ia:  shoot one step through the implicit attitude update, match the next
//        position-velocity sample.
//   Ib:  read the attitude increment off the data, match velocities and
//        penalize the implicit-equation defect (no Newton solve in the loop).
//   IIa: position-only two-pose shooting onto the third pose.
//   IIb: position-only equation-defect penalty, solver-free.
enum class Algorithm { Ia, Ib, IIa, IIb };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

struct TrainConfig {
  Algorithm algorithm = Algorithm::Ia;
  double h = 0.02;
  double alpha = 0.5;
  long iterations = 2000;
  double lr = 1e-3;
  int lr_decay_every = 0;  // 0 disables the staircase
  double lr_decay_factor = 0.5;
  NewtonConfig newton;
  int log_every = 10;
  double stop_below = 0.0;  // early stop once the batch loss drops under this
};

struct TrainLogEntry {
  long iter;
  double loss;
  double lr;
};

struct TrainResult {
  std::vector<TrainLogEntry> log;
  double final_loss = 0.0;
  long iterations_run = 0;
};

// Differentiable batch-loss machine for one (model structure, algorithm)
// pair. The graph is built once; each sample rebinds the input slots. The
// attitude log term of a sample is weighted to zero when the predicted
// relative rotation angle exceeds pi - 0.05, keeping the principal branch.
class LossGraph {
 public:
  LossGraph(const DynamicsModel& model, Algorithm alg,
            const IntegratorParams& p, int newton_unroll);

  double value(const std::vector<double>& params, const TransitionPV& s);
  double value(const std::vector<double>& params, const TransitionP& s);
  double value_and_grad(const std::vector<double>& params,
                        const TransitionPV& s, std::vector<double>& grads);
  double value_and_grad(const std::vector<double>& params,
                        const TransitionP& s, std::vector<double>& grads);

  // Predicted next state (Ia) or next pose (IIa) at the current parameters.
  SE3State predicted(const std::vector<double>& params, const TransitionPV& s);
  SE3Pose predicted(const std::vector<double>& params, const TransitionP& s);

  Algorithm algorithm() const { return alg_; }

 private:
  void build_pv();
  void build_p();
  void bind(const TransitionPV& s);
  void bind(const TransitionP& s);
  double run(const double* params);

  const DynamicsModel* model_;
  Algorithm alg_;
  IntegratorParams p_;
  int unroll_;
  bool se3_;
  Tape tape_;
  ModelGraph mg_;
  // input slots
  VR in_x0_, in_R0_, in_v0_, in_w0_, in_u0_, in_u1_;
  VR in_x1_, in_R1_, in_v1_, in_w1_, in_x2_, in_R2_, in_watt_;
  // outputs
  VR loss_, rel_rot_, pred_x_, pred_R_, pred_v_, pred_w_;
};

// Batch sums (not means) of the per-sample losses, at the model's current
// parameters.
double loss_Ia(const DynamicsModel& m, const std::vector<TransitionPV>& data,
               const IntegratorParams& p, const NewtonConfig& newton = {});
double loss_Ib(const DynamicsModel& m, const std::vector<TransitionPV>& data,
               const IntegratorParams& p, const NewtonConfig& newton = {});
double loss_IIa(const DynamicsModel& m, const std::vector<TransitionP>& data,
                const IntegratorParams& p, const NewtonConfig& newton = {});
double loss_IIb(const DynamicsModel& m, const std::vector<TransitionP>& data,
                const IntegratorParams& p, const NewtonConfig& newton = {});

// One-step predictions along the training computation path.
SE3State predict_Ia(const DynamicsModel& m, const TransitionPV& s,
                    const IntegratorParams& p, const NewtonConfig& newton = {});
SE3Pose predict_IIa(const DynamicsModel& m, const TransitionP& s,
                    const IntegratorParams& p, const NewtonConfig& newton = {});

// Full-batch Adam on the flat parameter vector. Deterministic for fixed data.
TrainResult train(DynamicsModel& model, const std::vector<TransitionPV>& data,
                  const TrainConfig& cfg);
TrainResult train(DynamicsModel& model, const std::vector<TransitionP>& data,
                  const TrainConfig& cfg);

// Unstructured one-step regression baseline: next raw state from
// [flattened state; u], nothing preserved by construction.
struct BaselineModel {
  ForceConvention convention;
  MLPSpec spec;
  std::vector<double> params;
  std::uint64_t seed = 0;

  static BaselineModel make(ForceConvention c, const std::vector<int>& hidden,
                            std::uint64_t seed);

  Eigen::VectorXd input_of(const SE3State& s, const Eigen::VectorXd& u) const;
  // Predicted [R(9); w] or [x; R(9); v; w]; R is raw, not projected.
  Eigen::VectorXd predict(const Eigen::VectorXd& in) const;
  struct RawState {
    Vec3 x;
    Mat3 R;
    Vec3 v, w;
  };
  RawState step_raw(const RawState& s, const Eigen::VectorXd& u) const;

  nlohmann::json to_json() const;
  static BaselineModel from_json(const nlohmann::json& j);
};

TrainResult train_blackbox_baseline(BaselineModel& model,
                                    const std::vector<TransitionPV>& data,
                                    const TrainConfig& cfg);

// Central finite differences of the batch loss over every parameter.
std::vector<double> numeric_loss_grad(DynamicsModel& model,
                                      const std::vector<TransitionPV>& data,
                                      const TrainConfig& cfg,
                                      double step = 1e-6);
std::vector<double> numeric_loss_grad(DynamicsModel& model,
                                      const std::vector<TransitionP>& data,
                                      const TrainConfig& cfg,
                                      double step = 1e-6);
std::vector<double> analytic_loss_grad(DynamicsModel& model,
                                       const std::vector<TransitionPV>& data,
                                       const TrainConfig& cfg);
std::vector<double> analytic_loss_grad(DynamicsModel& model,
                                       const std::vector<TransitionP>& data,
                                       const TrainConfig& cfg);

// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor)
double max_rel_error(const std::vector<double>& a, const std::vector<double>& b,
                     double floor = 1e-8);

}  // namespace fvin
