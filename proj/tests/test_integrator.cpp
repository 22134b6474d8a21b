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
#include "fvin/dynmodel.hpp"
#include "fvin/envs.hpp"
#include "fvin/integrator.hpp"
#include "test_util.hpp"

using namespace fvin;
using testutil::random_rotation;
using testutil::random_spd;
using testutil::random_vec3;

namespace {

// Free rigid body with inertia J and no potential or forcing.
ModelQueries free_body(const Mat3& J) {
  ModelQueries q;
  q.mass = [] { return 1.0; };
  q.inertia = [J](const Vec3&, const Rotation&) { return J; };
  q.potential = [](const Vec3&, const Rotation&) { return PotentialEval{}; };
  q.forces = [](const Vec3&, const Rotation&, const Eigen::VectorXd&) {
    return DiscreteForces::zero();
  };
  return q;
}

}  // namespace

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(IntegratorParams(0.0), InvalidInput);
  CHECK_THROWS_AS(IntegratorParams(-0.1), InvalidInput);
  CHECK_THROWS_AS(IntegratorParams(0.02, 1.5), InvalidInput);
}

TEST_CASE("nonstandard inertia identity") {
  std::mt19937_64 rng(31);
  const Mat3 J = random_spd(rng, 0.2, 2.0);
  const Mat3 Jd = nonstandard_inertia(J);
  const Vec3 z = random_vec3(rng, 1.0);
  CHECK((hat(z) * Jd + Jd * hat(z) - hat(J * z)).norm() < 1e-13);
}

TEST_CASE("attitude solve meets tolerance and back-substitutes") {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> mag(0.0, 0.1);
  for (int i = 0; i < 50; ++i) {
    Vec3 a = random_vec3(rng, 1.0);
    if (a.norm() > 1e-9) a = a.normalized() * mag(rng);
    const Mat3 J = random_spd(rng, 0.1, 3.0);
    const AttitudeSolve at = solve_attitude(a, J);
    CHECK(at.residual <= 1e-12);
    CHECK(at.iters <= 5);
    const Mat3 Jd = nonstandard_inertia(J);
    const Mat3& Z = at.Z.matrix();
    CHECK((hat(a) - (Z * Jd - Jd * Z.transpose())).norm() <= 1e-11);
  }
}

TEST_CASE("attitude solve reports divergence when no solution exists") {
  // With J = I the attainable right-hand sides satisfy ||a|| <= 1.
  CHECK_THROWS_AS(solve_attitude(Vec3(2.0, 0.0, 0.0), Mat3::Identity()),
                  NewtonDiverged);
}

TEST_CASE("free spherical body spins at constant rate") {
  const ModelQueries q = free_body(0.7 * Mat3::Identity());
  const IntegratorParams p(0.02);
  SO3State s;
  s.omega = Vec3(0.4, -1.1, 0.3);
  const Vec3 w0 = s.omega;
  const double e0 = 0.5 * s.omega.dot(0.7 * s.omega);
  for (int k = 0; k < 200; ++k) s = step_so3(s, DiscreteForces::zero(), q, p);
  CHECK((s.omega - w0).norm() < 1e-12);
  CHECK(std::abs(0.5 * s.omega.dot(0.7 * s.omega) - e0) < 1e-13);
  CHECK(orthogonality_error(s.R.matrix()) < 1e-13);
}

TEST_CASE("rotation about a principal axis stays on it") {
  const ModelQueries q = free_body(Vec3(0.2, 0.5, 0.9).asDiagonal());
  const IntegratorParams p(0.02);
  SO3State s;
  s.omega = Vec3(0.0, 1.3, 0.0);
  for (int k = 0; k < 100; ++k) s = step_so3(s, DiscreteForces::zero(), q, p);
  CHECK(std::abs(s.omega.x()) < 1e-13);
  CHECK(std::abs(s.omega.z()) < 1e-13);
  CHECK(s.omega.y() == doctest::Approx(1.3).epsilon(1e-13));
}

TEST_CASE("unforced pendulum step is time reversible at alpha one half") {
  const PendulumTruth truth;
  const ModelQueries q = pendulum_truth_queries(truth, 0.02);
  const IntegratorParams p(0.02, 0.5);
  SO3State s = pendulum_embed(1.1, 0.4);
  const SO3State s0 = s;
  s = step_so3(s, DiscreteForces::zero(), q, p);
  SO3State back{s.R, -s.omega};
  back = step_so3(back, DiscreteForces::zero(), q, p);
  CHECK((back.R.matrix() - s0.R.matrix()).norm() < 1e-10);
  CHECK((back.omega + s0.omega).norm() < 1e-10);
}

TEST_CASE("velocity and two-pose forms generate the same trajectory") {
  // Roll the Hamiltonian-form integrator two steps through a model with
  // forces on every slot, then check the two-pose form lands on the same
  // third pose. This ties the force sign conventions of the two forms
  // together.
  std::mt19937_64 rng(33);
  const DynamicsModel m =
      DynamicsModel::custom(ForceConvention::QuadrotorSE3, 6, 2, 99);
  const ModelQueries q = m.queries();
  const IntegratorParams p(0.02, 0.5);

  for (int trial = 0; trial < 5; ++trial) {
    SE3State s0;
    s0.x = random_vec3(rng, 0.5);
    s0.R = random_rotation(rng, 1.0);
    s0.v = random_vec3(rng, 0.3);
    s0.omega = random_vec3(rng, 0.3);
    Eigen::VectorXd u0 = Eigen::VectorXd::Zero(4), u1 = Eigen::VectorXd::Zero(4);
    for (int j = 0; j < 4; ++j) {
      u0[j] = random_vec3(rng, 0.2).x();
      u1[j] = random_vec3(rng, 0.2).x();
    }

    const DiscreteForces f0 = q.forces(s0.x, s0.R, u0);
    const SE3State s1 = step_se3(s0, f0, q, p);
    const DiscreteForces f1 = q.forces(s1.x, s1.R, u1);
    const SE3State s2 = step_se3(s1, f1, q, p);

    const SE3Pose next = step_position_only(
        SE3Pose{s0.x, s0.R}, SE3Pose{s1.x, s1.R}, f0, f1, q, p);
    CHECK((next.x - s2.x).norm() < 1e-10);
    CHECK((next.R.matrix() - s2.R.matrix()).norm() < 1e-10);
  }
}

TEST_CASE("se3 step restricted to the rotational subsystem matches so3") {
  const DynamicsModel m =
      DynamicsModel::custom(ForceConvention::PendulumSO3, 6, 2, 7);
  const ModelQueries q = m.queries();
  const IntegratorParams p(0.02, 0.5);
  std::mt19937_64 rng(34);

  SO3State a;
  a.R = random_rotation(rng, 1.5);
  a.omega = random_vec3(rng, 0.5);
  SE3State b;
  b.R = a.R;
  b.omega = a.omega;
  Eigen::VectorXd u(1);
  u << 0.37;
  const DiscreteForces f = q.forces(Vec3::Zero(), a.R, u);
  const SO3State an = step_so3(a, f, q, p);
  const SE3State bn = step_se3(b, f, q, p);
  CHECK((an.R.matrix() - bn.R.matrix()).norm() < 1e-15);
  CHECK((an.omega - bn.omega).norm() < 1e-15);
  CHECK(bn.x.norm() == 0.0);
  CHECK(bn.v.norm() == 0.0);
}

TEST_CASE("total energy matches the hand formula for the pendulum") {
  const PendulumTruth truth;
  const ModelQueries q = pendulum_truth_queries(truth, 0.02);
  const double phi = 0.8, phid = -1.7;
  const SO3State s = pendulum_embed(phi, phid);
  SE3State se;
  se.R = s.R;
  se.omega = s.omega;
  const double want = 0.5 * (1.0 / 3.0) * phid * phid +
                      5.0 * (1.0 - std::cos(phi));
  CHECK(total_energy(se, q) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("rollout returns initial state plus one state per control") {
  const ModelQueries q = free_body(Mat3::Identity());
  const IntegratorParams p(0.02);
  SE3State s0;
  s0.omega = Vec3(0.1, 0.2, 0.3);
  const std::vector<Eigen::VectorXd> controls(7, Eigen::VectorXd::Zero(1));
  const auto states = rollout(s0, controls, q, p);
  CHECK(states.size() == 8);
  CHECK((states[0].omega - s0.omega).norm() == 0.0);
}
