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

#include "fvin/integrator.hpp"

#include <cmath>
#include <string>

namespace fvin {

IntegratorParams::IntegratorParams(double h, double alpha)
    : h(h), alpha(alpha) {
  if (!(h > 0.0)) throw InvalidInput("step size must be positive");
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw InvalidInput("quadrature weight must lie in [0, 1]");
}

Mat3 nonstandard_inertia(const Mat3& J) {
  return 0.5 * J.trace() * Mat3::Identity() - J;
}

Vec3 xi_of(const Rotation& R, const Mat3& dU_dR) {
  const Mat3 M = dU_dR.transpose() * R.matrix() - R.matrix().transpose() * dU_dR;
  return vee(M);
}

AttitudeSolve solve_attitude(const Vec3& a, const Mat3& J,
                             const NewtonConfig& cfg) {
  Vec3 z = (2.0 * J).partialPivLu().solve(a);
  const Mat3 Sa = hat(a);
  double res = 0.0;
  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    const Vec3 phi = a + a.cross(z) + z * a.dot(z) - 2.0 * (J * z);
    res = phi.norm();
    if (res <= cfg.tol) break;
    const Mat3 grad =
        Sa + a.dot(z) * Mat3::Identity() + z * a.transpose() - 2.0 * J;
    z -= grad.partialPivLu().solve(phi);
  }
  if (res > cfg.tol) {
    // One more residual evaluation in case the loop exited on the last update.
    const Vec3 phi = a + a.cross(z) + z * a.dot(z) - 2.0 * (J * z);
    res = phi.norm();
    if (res > cfg.tol)
      throw NewtonDiverged("attitude solve stalled at residual " +
                               std::to_string(res),
                           res, it);
  }
  return AttitudeSolve{z, cayley(z), it, res};
}

SE3State step_se3(const SE3State& s, const DiscreteForces& f,
                  const ModelQueries& model, const IntegratorParams& p,
                  const NewtonConfig& newton) {
  const double h = p.h, al = p.alpha;
  const double m = model.mass();
  const Mat3 J0 = model.inertia(s.x, s.R);
  const PotentialEval pe0 = model.potential(s.x, s.R);
  const Vec3 xi0 = xi_of(s.R, pe0.dU_dR);

  const Vec3 pi0 = J0 * s.omega;
  const Vec3 a = h * pi0 + h * f.fR_minus + (1.0 - al) * h * h * xi0;
  const AttitudeSolve at = solve_attitude(a, J0, newton);
  const Mat3& Z = at.Z.matrix();

  SE3State out;
  out.R = s.R * at.Z;
  out.x = s.x + h * s.v - (1.0 - al) * (h * h / m) * pe0.dU_dx +
          (h / m) * (s.R * f.fx_minus);

  const PotentialEval pe1 = model.potential(out.x, out.R);
  const Vec3 xi1 = xi_of(out.R, pe1.dU_dR);

  const Vec3 pi1 = Z.transpose() * pi0 + (1.0 - al) * h * (Z.transpose() * xi0) +
                   al * h * xi1 + Z.transpose() * f.fR_minus + f.fR_plus;
  const Vec3 gamma1 = m * s.v - (1.0 - al) * h * pe0.dU_dx -
                      al * h * pe1.dU_dx + s.R * f.fx_minus + out.R * f.fx_plus;

  const Mat3 J1 = model.inertia(out.x, out.R);
  out.omega = J1.ldlt().solve(pi1);
  out.v = gamma1 / m;
  return out;
}

SO3State step_so3(const SO3State& s, const DiscreteForces& f,
                  const ModelQueries& model, const IntegratorParams& p,
                  const NewtonConfig& newton) {
  const double h = p.h, al = p.alpha;
  const Vec3 x = Vec3::Zero();
  const Mat3 J0 = model.inertia(x, s.R);
  const Vec3 xi0 = xi_of(s.R, model.potential(x, s.R).dU_dR);

  const Vec3 pi0 = J0 * s.omega;
  const Vec3 a = h * pi0 + h * f.fR_minus + (1.0 - al) * h * h * xi0;
  const AttitudeSolve at = solve_attitude(a, J0, newton);
  const Mat3& Z = at.Z.matrix();

  SO3State out;
  out.R = s.R * at.Z;
  const Vec3 xi1 = xi_of(out.R, model.potential(x, out.R).dU_dR);
  const Vec3 pi1 = Z.transpose() * pi0 + (1.0 - al) * h * (Z.transpose() * xi0) +
                   al * h * xi1 + Z.transpose() * f.fR_minus + f.fR_plus;
  out.omega = model.inertia(x, out.R).ldlt().solve(pi1);
  return out;
}

SE3Pose step_position_only(const SE3Pose& q_prev, const SE3Pose& q_curr,
                           const DiscreteForces& f_prev,
                           const DiscreteForces& f_curr,
                           const ModelQueries& model, const IntegratorParams& p,
                           const NewtonConfig& newton) {
  const double h = p.h;
  const double m = model.mass();
  const Mat3 J = model.inertia(q_curr.x, q_curr.R);
  const Mat3 Jd = nonstandard_inertia(J);
  const PotentialEval pe = model.potential(q_curr.x, q_curr.R);
  const Vec3 xi = xi_of(q_curr.R, pe.dU_dR);

  const Mat3 Zp = (q_prev.R.transposed() * q_curr.R).matrix();
  const Vec3 carry = vee(Jd * Zp - Zp.transpose() * Jd);
  const Vec3 a = h * h * xi + h * f_curr.fR_minus + h * f_prev.fR_plus + carry;
  const AttitudeSolve at = solve_attitude(a, J, newton);

  SE3Pose out;
  out.R = q_curr.R * at.Z;
  out.x = 2.0 * q_curr.x - q_prev.x - (h * h / m) * pe.dU_dx +
          (h / m) * (q_curr.R * (f_curr.fx_minus + f_prev.fx_plus));
  return out;
}

std::vector<SE3State> rollout(const SE3State& s0,
                              const std::vector<Eigen::VectorXd>& controls,
                              const ModelQueries& model,
                              const IntegratorParams& p,
                              const NewtonConfig& newton) {
  std::vector<SE3State> states;
  states.reserve(controls.size() + 1);
  states.push_back(s0);
  for (size_t k = 0; k < controls.size(); ++k) {
    const SE3State& s = states.back();
    const DiscreteForces f = model.forces(s.x, s.R, controls[k]);
    try {
      states.push_back(step_se3(s, f, model, p, newton));
    } catch (const NumericalError& e) {
      throw NumericalError("rollout failed at step " + std::to_string(k) +
                           ": " + e.what());
    }
  }
  return states;
}

double total_energy(const SE3State& s, const ModelQueries& model) {
  const double m = model.mass();
  const Mat3 J = model.inertia(s.x, s.R);
  const PotentialEval pe = model.potential(s.x, s.R);
  return 0.5 * m * s.v.squaredNorm() + 0.5 * s.omega.dot(J * s.omega) + pe.U;
}

}  // namespace fvin
