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
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fvin/integrator.hpp"
#include "fvin/liegroup.hpp"

namespace fvin {

enum class Activation { Tanh, Identity };

// Dense net shape. Parameters of layer l are W_l (row-major, dims[l+1] x
// dims[l]) followed by b_l, layers concatenated in order.
struct MLPSpec {
  std::vector<int> dims;
  std::vector<Activation> acts;  // one per layer, last usually Identity
  int param_count() const;
};

struct MLPLayout {
  MLPSpec spec;
  int offset = 0;  // into the model's flat parameter vector
};

Eigen::VectorXd mlp_forward(const MLPSpec& spec, const double* params,
                            const Eigen::VectorXd& input);

// Forward pass plus d(output[0])/d(input) for scalar-output nets.
struct MLPScalarEval {
  double value;
  Eigen::VectorXd input_grad;
};
MLPScalarEval mlp_scalar_with_input_grad(const MLPSpec& spec,
                                         const double* params,
                                         const Eigen::VectorXd& input);

// Which mechanical structure the model carries.
//  PendulumSO3:  attitude only; nets J(q), U(q), g(q) on q = vec(R) (9);
//                forces f^{R-} = g(q) u, f^{R+} = 0, u scalar.
//  QuadrotorSE3: mass r^2, constant triangular inertia factor; nets U(q), g(q)
//                on q = [x; vec(R)] (12); g output is 6x4 row-major and the
//                step impulse g(q)u is split half/half between the - and +
//                sides, force rows first, torque rows last.
enum class ForceConvention { PendulumSO3, QuadrotorSE3 };

std::string to_string(ForceConvention c);

// Flattened configuration input fed to the nets.
Eigen::VectorXd flatten_q(ForceConvention c, const Vec3& x, const Rotation& R);
int q_input_dim(ForceConvention c);

// Learnable rigid-body model: inertia J = LL' + eps I, scalar potential and
// configuration-dependent input gains, all read from one flat parameter
// vector so a single optimizer step touches everything.
class DynamicsModel {
 public:
  static DynamicsModel pendulum_so3(std::uint64_t seed);
  static DynamicsModel quadrotor_se3(std::uint64_t seed);
  // Same structure, custom widths (used by small-net tests).
  static DynamicsModel custom(ForceConvention c, int width, int depth,
                              std::uint64_t seed, double init_scale = 1.0);

  ForceConvention convention() const { return convention_; }
  double epsilon() const { return epsilon_; }
  std::uint64_t seed() const { return seed_; }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  int param_count() const { return static_cast<int>(params_.size()); }

  // Flat layout: [mass r | inertia | potential | gains]. Offsets below.
  int mass_offset() const { return mass_offset_; }        // -1 for SO(3)
  int inertia_offset() const { return inertia_offset_; }
  int inertia_param_count() const;
  bool inertia_is_net() const { return convention_ == ForceConvention::PendulumSO3; }
  const MLPLayout& inertia_net() const { return inertia_net_; }
  const MLPLayout& potential_net() const { return potential_net_; }
  const MLPLayout& gains_net() const { return gains_net_; }

  double mass() const;
  Mat3 inertia_at(const Vec3& x, const Rotation& R) const;
  PotentialEval potential_at(const Vec3& x, const Rotation& R) const;
  DiscreteForces forces_at(const Vec3& x, const Rotation& R,
                           const Eigen::VectorXd& u) const;
  int control_dim() const;

  ModelQueries queries() const;

  nlohmann::json to_json() const;
  static DynamicsModel from_json(const nlohmann::json& j);

 private:
  DynamicsModel() = default;
  void init_params(std::uint64_t seed, double init_scale);

  ForceConvention convention_ = ForceConvention::PendulumSO3;
  double epsilon_ = 0.01;
  std::uint64_t seed_ = 0;
  int mass_offset_ = -1;
  int inertia_offset_ = 0;
  MLPLayout inertia_net_;  // unused for SE(3)
  MLPLayout potential_net_;
  MLPLayout gains_net_;
  std::vector<double> params_;
};

// Unpacks 6 packed lower-triangle entries (row by row) and forms LL' + eps I.
Mat3 inertia_from_factor(const double* l6, double eps);

}  // namespace fvin
