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

#include <cmath>
#include <random>

#include "doctest.h"
#include "fvin/envs.hpp"
#include "fvin/integrator.hpp"
#include "fvin/trainer.hpp"
#include "test_util.hpp"

using namespace fvin;
using testutil::random_rotation;
using testutil::random_vec3;

namespace {

// One SO(3) transition generated by the integrator itself, so every loss
// that encodes the same discrete equations must vanish on it.
TransitionPV consistent_so3_transition(const DynamicsModel& m,
                                       std::mt19937_64& rng,
                                       const IntegratorParams& p) {
  TransitionPV s;
  s.R0 = random_rotation(rng, 1.5);
  s.w0 = random_vec3(rng, 0.8);
  s.u = Eigen::VectorXd::Constant(1, random_vec3(rng, 2.0).x());
  const ModelQueries q = m.queries();
  const DiscreteForces f = q.forces(Vec3::Zero(), s.R0, s.u);
  const SO3State next = step_so3(SO3State{s.R0, s.w0}, f, q, p);
  s.R1 = next.R;
  s.w1 = next.omega;
  return s;
}

std::vector<TransitionP> consistent_se3_triples(const DynamicsModel& m,
                                                std::mt19937_64& rng,
                                                const IntegratorParams& p,
                                                int count) {
  const ModelQueries q = m.queries();
  std::vector<TransitionP> out;
  for (int i = 0; i < count; ++i) {
    TransitionP s;
    s.x0 = random_vec3(rng, 0.5);
    s.R0 = random_rotation(rng, 1.2);
    s.u0 = Eigen::VectorXd::Zero(4);
    s.u1 = Eigen::VectorXd::Zero(4);
    for (int j = 0; j < 4; ++j) {
      s.u0[j] = random_vec3(rng, 0.3).x();
      s.u1[j] = random_vec3(rng, 0.3).x();
    }
    SE3State st;
    st.x = s.x0;
    st.R = s.R0;
    st.v = random_vec3(rng, 0.4);
    st.omega = random_vec3(rng, 0.4);
    const DiscreteForces f0 = q.forces(st.x, st.R, s.u0);
    const SE3State s1 = step_se3(st, f0, q, p);
    const DiscreteForces f1 = q.forces(s1.x, s1.R, s.u1);
    const SE3State s2 = step_se3(s1, f1, q, p);
    s.x1 = s1.x;
    s.R1 = s1.R;
    s.x2 = s2.x;
    s.R2 = s2.R;
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST_CASE("algorithm names round trip") {
  for (Algorithm a :
       {Algorithm::Ia, Algorithm::Ib, Algorithm::IIa, Algorithm::IIb})
    CHECK(algorithm_from_string(to_string(a)) == a);
  CHECK_THROWS_AS(algorithm_from_string("Ic"), InvalidInput);
}

TEST_CASE("one step shooting loss vanishes on integrator-generated data") {
  std::mt19937_64 rng(51);
  const DynamicsModel m =
      DynamicsModel::custom(ForceConvention::PendulumSO3, 6, 2, 12);
  const IntegratorParams p(0.02, 0.5);
  std::vector<TransitionPV> data;
  for (int i = 0; i < 8; ++i)
    data.push_back(consistent_so3_transition(m, rng, p));
  CHECK(loss_Ia(m, data, p) < 1e-16);
  CHECK(loss_Ib(m, data, p) < 1e-16);
}

TEST_CASE("prediction along the training path matches the integrator") {
  std::mt19937_64 rng(52);
  const DynamicsModel m =
      DynamicsModel::custom(ForceConvention::PendulumSO3, 6, 2, 13);
  const IntegratorParams p(0.02, 0.5);
  const TransitionPV s = consistent_so3_transition(m, rng, p);
  const SE3State pred = predict_Ia(m, s, p);
  CHECK((pred.R.matrix() - s.R1.matrix()).norm() < 1e-9);
  CHECK((pred.omega - s.w1).norm() < 1e-9);
}

TEST_CASE("position-only losses vanish on integrator-generated triples") {
  std::mt19937_64 rng(53);
  const DynamicsModel m =
      DynamicsModel::custom(ForceConvention::QuadrotorSE3, 6, 2, 14);
  const IntegratorParams p(0.02, 0.5);
  const auto data = consistent_se3_triples(m, rng, p, 5);
  CHECK(loss_IIa(m, data, p) < 1e-16);
  CHECK(loss_IIb(m, data, p) < 1e-16);
  const SE3Pose pred = predict_IIa(m, data[0], p);
  CHECK((pred.x - data[0].x2).norm() < 1e-9);
  CHECK((pred.R.matrix() - data[0].R2.matrix()).norm() < 1e-9);
}

TEST_CASE("batch loss is the sum of per-sample losses") {
  std::mt19937_64 rng(54);
  const DynamicsModel m =
      DynamicsModel::custom(ForceConvention::PendulumSO3, 6, 2, 15);
  const IntegratorParams p(0.02, 0.5);
  // use inconsistent targets so the losses are nonzero
  TransitionPV a = consistent_so3_transition(m, rng, p);
  TransitionPV b = consistent_so3_transition(m, rng, p);
  a.w1 += Vec3(0.1, 0.0, -0.2);
  b.w1 += Vec3(-0.3, 0.2, 0.1);
  const double la = loss_Ia(m, {a}, p);
  const double lb = loss_Ia(m, {b}, p);
  const double lab = loss_Ia(m, {a, b}, p);
  CHECK(lab == doctest::Approx(la + lb).epsilon(1e-12));
}

TEST_CASE("a tenth-radian attitude offset costs about a hundredth") {
  std::mt19937_64 rng(55);
  const DynamicsModel m =
      DynamicsModel::custom(ForceConvention::PendulumSO3, 6, 2, 16);
  const IntegratorParams p(0.02, 0.5);
  TransitionPV s = consistent_so3_transition(m, rng, p);
  s.R1 = Rotation(s.R1.matrix() * exp_so3(Vec3(0, 0, 0.1)).matrix());
  CHECK(loss_Ia(m, {s}, p) == doctest::Approx(0.01).epsilon(1e-6));
}

TEST_CASE("constant potential shift is a gauge freedom of every loss") {
  std::mt19937_64 rng(56);
  DynamicsModel m =
      DynamicsModel::custom(ForceConvention::PendulumSO3, 6, 2, 17);
  const IntegratorParams p(0.02, 0.5);
  TransitionPV s = consistent_so3_transition(m, rng, p);
  s.w1 += Vec3(0.05, 0.0, 0.0);
  const double before = loss_Ia(m, {s}, p);
  // the last parameter of the potential net is its output bias
  const MLPLayout& net = m.potential_net();
  m.params()[net.offset + net.spec.param_count() - 1] += 3.7;
  CHECK(loss_Ia(m, {s}, p) == doctest::Approx(before).epsilon(1e-14));
}

TEST_CASE("analytic gradients match finite differences with a noise floor") {
  std::mt19937_64 rng(57);
  DynamicsModel m =
      DynamicsModel::custom(ForceConvention::PendulumSO3, 5, 2, 18);
  const IntegratorParams p(0.02, 0.5);
  TrainConfig tc;
  tc.algorithm = Algorithm::Ia;
  std::vector<TransitionPV> data;
  for (int i = 0; i < 3; ++i) {
    TransitionPV s = consistent_so3_transition(m, rng, p);
    s.w1 += random_vec3(rng, 0.1);
    data.push_back(s);
  }
  const auto ana = analytic_loss_grad(m, data, tc);
  const auto num = numeric_loss_grad(m, data, tc);
  double gmax = 0.0;
  for (double v : ana) gmax = std::max(gmax, std::abs(v));
  // components at the roundoff floor of the central difference cannot be
  // compared against their own magnitude
  CHECK(max_rel_error(ana, num, 1e-5 * (1.0 + gmax)) < 1e-5);
}

TEST_CASE("training a student on teacher data reduces the loss") {
  std::mt19937_64 rng(58);
  const DynamicsModel teacher =
      DynamicsModel::custom(ForceConvention::PendulumSO3, 5, 2, 19, 0.5);
  const IntegratorParams p(0.02, 0.5);
  std::vector<TransitionPV> data;
  for (int i = 0; i < 24; ++i)
    data.push_back(consistent_so3_transition(teacher, rng, p));

  DynamicsModel student =
      DynamicsModel::custom(ForceConvention::PendulumSO3, 5, 2, 20, 0.5);
  const double loss0 = loss_Ia(student, data, p);
  TrainConfig tc;
  tc.algorithm = Algorithm::Ia;
  tc.iterations = 150;
  tc.lr = 3e-3;
  tc.log_every = 50;
  const TrainResult r = train(student, data, tc);
  CHECK(r.final_loss < loss0 / 10.0);
  CHECK(r.iterations_run == 150);
  CHECK(!r.log.empty());
  CHECK(std::isfinite(r.final_loss));
}

TEST_CASE("early stopping honors the loss threshold") {
  std::mt19937_64 rng(59);
  const DynamicsModel m =
      DynamicsModel::custom(ForceConvention::PendulumSO3, 5, 2, 21);
  const IntegratorParams p(0.02, 0.5);
  std::vector<TransitionPV> data = {consistent_so3_transition(m, rng, p)};
  DynamicsModel copy = m;
  TrainConfig tc;
  tc.algorithm = Algorithm::Ia;
  tc.iterations = 500;
  tc.stop_below = 1e-12;  // already satisfied: the data is self-consistent
  const TrainResult r = train(copy, data, tc);
  CHECK(r.iterations_run < 500);
}

TEST_CASE("baseline network trains and predicts off the group") {
  std::mt19937_64 rng(60);
  const DynamicsModel truth =
      DynamicsModel::custom(ForceConvention::PendulumSO3, 5, 2, 22);
  const IntegratorParams p(0.02, 0.5);
  std::vector<TransitionPV> data;
  for (int i = 0; i < 32; ++i)
    data.push_back(consistent_so3_transition(truth, rng, p));

  BaselineModel bl = BaselineModel::make(ForceConvention::PendulumSO3,
                                         {16, 16}, 23);
  TrainConfig tc;
  tc.iterations = 60;
  tc.lr = 1e-3;
  const double loss0 = [&] {
    BaselineModel fresh = bl;
    TrainConfig zero = tc;
    zero.iterations = 0;
    return train_blackbox_baseline(fresh, data, zero).final_loss;
  }();
  const TrainResult r = train_blackbox_baseline(bl, data, tc);
  CHECK(std::isfinite(r.final_loss));
  CHECK(r.final_loss < loss0);

  // raw multi-step iteration leaves the rotation group
  BaselineModel::RawState s;
  s.x = Vec3::Zero();
  s.R = data[0].R0.matrix();
  s.v = Vec3::Zero();
  s.w = data[0].w0;
  for (int k = 0; k < 50; ++k) s = bl.step_raw(s, data[0].u);
  CHECK(orthogonality_error(s.R) > 1e-6);
}
