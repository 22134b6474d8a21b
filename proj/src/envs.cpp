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

#include "fvin/envs.hpp"

#include <cmath>
#include <random>

namespace fvin {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t index) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(index + 1)));
}

}  // namespace

std::pair<double, double> pendulum_step(const PendulumTruth& t, double phi,
                                        double phid, double u, double h) {
  const double w2 = t.U0 / t.J33, b = t.gain / t.J33;
  auto acc = [&](double p) { return -w2 * std::sin(p) + b * u; };
  const int n = 10;
  const double dt = h / n;
  for (int k = 0; k < n; ++k) {
    const double k1p = phid, k1v = acc(phi);
    const double k2p = phid + 0.5 * dt * k1v, k2v = acc(phi + 0.5 * dt * k1p);
    const double k3p = phid + 0.5 * dt * k2v, k3v = acc(phi + 0.5 * dt * k2p);
    const double k4p = phid + dt * k3v, k4v = acc(phi + dt * k3p);
    phi += dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    phid += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  }
  return {phi, phid};
}

SO3State pendulum_embed(double phi, double phid) {
  SO3State s;
  s.R = exp_so3(Vec3(0.0, 0.0, phi));
  s.omega = Vec3(0.0, 0.0, phid);
  return s;
}

std::pair<double, double> pendulum_extract(const SO3State& s) {
  const Mat3& m = s.R.matrix();
  return {std::atan2(m(1, 0), m(0, 0)), s.omega.z()};
}

ModelQueries pendulum_truth_queries(const PendulumTruth& t, double h) {
  ModelQueries q;
  const double J33 = t.J33, U0 = t.U0, gain = t.gain;
  q.mass = [] { return 1.0; };
  q.inertia = [J33](const Vec3&, const Rotation&) {
    return Mat3(J33 * Mat3::Identity());
  };
  q.potential = [U0](const Vec3&, const Rotation& R) {
    PotentialEval pe;
    pe.U = U0 * (1.0 - R.matrix()(0, 0));
    pe.dU_dR = Mat3::Zero();
    pe.dU_dR(0, 0) = -U0;
    return pe;
  };
  q.forces = [h, gain](const Vec3&, const Rotation&, const Eigen::VectorXd& u) {
    DiscreteForces f;
    f.fR_minus = Vec3(0.0, 0.0, h * gain * u[0]);
    return f;
  };
  return q;
}

double pendulum_true_energy(const PendulumTruth& t, double phi, double phid) {
  return 0.5 * t.J33 * phid * phid + t.U0 * (1.0 - std::cos(phi));
}

namespace {

struct QuadBodyState {
  Vec3 x;
  Mat3 R;
  Vec3 vb, w;
};

QuadBodyState quad_rhs(const QuadrotorTruth& t, const QuadBodyState& s,
                       double f, const Vec3& tau) {
  const Vec3 e3(0.0, 0.0, 1.0);
  const Mat3 J = t.inertia_diag.asDiagonal();
  QuadBodyState d;
  d.x = s.R * s.vb;
  d.R = s.R * hat(s.w);
  d.vb = -s.w.cross(s.vb) + (f / t.mass) * e3 -
         t.gravity * (s.R.transpose() * e3);
  d.w = (tau - s.w.cross(J * s.w)).cwiseQuotient(t.inertia_diag);
  return d;
}

QuadBodyState axpy_state(const QuadBodyState& s, double c,
                         const QuadBodyState& d) {
  return QuadBodyState{s.x + c * d.x, s.R + c * d.R, s.vb + c * d.vb,
                       s.w + c * d.w};
}

Mat3 project_rows(const Mat3& R) {
  Vec3 r0 = R.row(0).normalized();
  Vec3 r1 = (R.row(1).transpose() - r0.dot(R.row(1)) * r0).normalized();
  const Vec3 r2 = r0.cross(r1);
  Mat3 out;
  out.row(0) = r0;
  out.row(1) = r1;
  out.row(2) = r2;
  return out;
}

}  // namespace

SE3State quad_step(const QuadrotorTruth& t, const SE3State& s,
                   const Eigen::Vector4d& u, double h) {
  QuadBodyState b{s.x, s.R.matrix(), s.R.matrix().transpose() * s.v, s.omega};
  const double f = u[0];
  const Vec3 tau = u.tail<3>();
  const int n = 10;
  const double dt = h / n;
  for (int k = 0; k < n; ++k) {
    const QuadBodyState k1 = quad_rhs(t, b, f, tau);
    const QuadBodyState k2 = quad_rhs(t, axpy_state(b, 0.5 * dt, k1), f, tau);
    const QuadBodyState k3 = quad_rhs(t, axpy_state(b, 0.5 * dt, k2), f, tau);
    const QuadBodyState k4 = quad_rhs(t, axpy_state(b, dt, k3), f, tau);
    b.x += dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
    b.R += dt / 6.0 * (k1.R + 2.0 * k2.R + 2.0 * k3.R + k4.R);
    b.vb += dt / 6.0 * (k1.vb + 2.0 * k2.vb + 2.0 * k3.vb + k4.vb);
    b.w += dt / 6.0 * (k1.w + 2.0 * k2.w + 2.0 * k3.w + k4.w);
    b.R = project_rows(b.R);
  }
  SE3State out;
  out.x = b.x;
  out.R = Rotation(b.R);
  out.v = b.R * b.vb;
  out.omega = b.w;
  return out;
}

Eigen::Vector4d quad_clamp_control(const QuadrotorTruth& t,
                                   const Eigen::Vector4d& u) {
  Eigen::Vector4d c;
  c[0] = std::clamp(u[0], 0.0, t.f_max);
  for (int i = 0; i < 3; ++i)
    c[i + 1] = std::clamp(u[i + 1], -t.tau_max[i], t.tau_max[i]);
  return c;
}

ModelQueries quad_truth_queries(const QuadrotorTruth& t, double h) {
  ModelQueries q;
  const double m = t.mass, g = t.gravity;
  const Vec3 jd = t.inertia_diag;
  q.mass = [m] { return m; };
  q.inertia = [jd](const Vec3&, const Rotation&) {
    return Mat3(jd.asDiagonal());
  };
  q.potential = [m, g](const Vec3& x, const Rotation&) {
    PotentialEval pe;
    pe.U = m * g * x.z();
    pe.dU_dx = Vec3(0.0, 0.0, m * g);
    return pe;
  };
  q.forces = [h](const Vec3&, const Rotation&, const Eigen::VectorXd& u) {
    DiscreteForces f;
    f.fx_minus = f.fx_plus = Vec3(0.0, 0.0, 0.5 * h * u[0]);
    f.fR_minus = f.fR_plus = 0.5 * h * Vec3(u[1], u[2], u[3]);
    return f;
  };
  return q;
}

double quad_true_energy(const QuadrotorTruth& t, const SE3State& s) {
  const Mat3 J = t.inertia_diag.asDiagonal();
  return 0.5 * t.mass * s.v.squaredNorm() + 0.5 * s.omega.dot(J * s.omega) +
         t.mass * t.gravity * s.x.z();
}

std::vector<TransitionPV> generate_pendulum_dataset(const DataGenSpec& spec) {
  PendulumTruth truth;
  std::vector<TransitionPV> out;
  out.reserve(spec.trajectories * spec.steps_per_traj);
  for (int i = 0; i < spec.trajectories; ++i) {
    auto rng = stream_rng(spec.seed, i);
    std::uniform_real_distribution<double> dphi(-spec.phi_max, spec.phi_max);
    std::uniform_real_distribution<double> dphid(-spec.phid_max, spec.phid_max);
    std::uniform_real_distribution<double> du(spec.u_min, spec.u_max);
    double phi = dphi(rng), phid = dphid(rng);
    const double u = du(rng);
    for (int k = 0; k < spec.steps_per_traj; ++k) {
      const auto [phi1, phid1] = pendulum_step(truth, phi, phid, u, spec.h);
      const SO3State a = pendulum_embed(phi, phid);
      const SO3State b = pendulum_embed(phi1, phid1);
      TransitionPV tr;
      tr.R0 = a.R;
      tr.w0 = a.omega;
      tr.R1 = b.R;
      tr.w1 = b.omega;
      tr.u = Eigen::VectorXd::Constant(1, u);
      out.push_back(std::move(tr));
      phi = phi1;
      phid = phid1;
    }
  }
  return out;
}

std::vector<TransitionP> generate_pendulum_dataset_p(const DataGenSpec& spec) {
  PendulumTruth truth;
  std::vector<TransitionP> out;
  out.reserve(spec.trajectories * (spec.steps_per_traj - 1));
  for (int i = 0; i < spec.trajectories; ++i) {
    auto rng = stream_rng(spec.seed, i);
    std::uniform_real_distribution<double> dphi(-spec.phi_max, spec.phi_max);
    std::uniform_real_distribution<double> dphid(-spec.phid_max, spec.phid_max);
    std::uniform_real_distribution<double> du(spec.u_min, spec.u_max);
    double phi = dphi(rng), phid = dphid(rng);
    const double u = du(rng);
    std::vector<Rotation> poses;
    for (int k = 0; k <= spec.steps_per_traj; ++k) {
      poses.push_back(pendulum_embed(phi, phid).R);
      std::tie(phi, phid) = pendulum_step(truth, phi, phid, u, spec.h);
    }
    for (int k = 0; k + 2 < static_cast<int>(poses.size()); ++k) {
      TransitionP tr;
      tr.R0 = poses[k];
      tr.R1 = poses[k + 1];
      tr.R2 = poses[k + 2];
      tr.u0 = Eigen::VectorXd::Constant(1, u);
      tr.u1 = Eigen::VectorXd::Constant(1, u);
      out.push_back(std::move(tr));
    }
  }
  return out;
}

namespace {

struct QuadTrajectory {
  std::vector<SE3State> states;
  std::vector<Eigen::Vector4d> controls;
};

Eigen::Vector4d quad_pd_control(const QuadrotorTruth& t,
                                const DataGenSpec& spec, const SE3State& s,
                                const Vec3& target) {
  const Vec3 e3(0.0, 0.0, 1.0);
  const Mat3& R = s.R.matrix();
  const Vec3 a_des =
      spec.pos_kp * (target - s.x) - spec.pos_kd * s.v + t.gravity * e3;
  const Vec3 F_des = t.mass * a_des;
  const double f = F_des.dot(R * e3);

  Vec3 zb = F_des;
  if (zb.norm() < 1e-9) zb = e3;
  zb.normalize();
  Vec3 xc(1.0, 0.0, 0.0);
  if (std::abs(zb.dot(xc)) > 0.99) xc = Vec3(0.0, 1.0, 0.0);
  const Vec3 yb = zb.cross(xc).normalized();
  const Vec3 xb = yb.cross(zb);
  Mat3 Rd;
  Rd.col(0) = xb;
  Rd.col(1) = yb;
  Rd.col(2) = zb;

  const Mat3 Eskew = Rd.transpose() * R - R.transpose() * Rd;
  const Vec3 eR = 0.5 * Vec3(Eskew(2, 1), Eskew(0, 2), Eskew(1, 0));
  const Mat3 J = t.inertia_diag.asDiagonal();
  const Vec3 tau =
      -spec.att_kp * eR - spec.att_kd * s.omega + s.omega.cross(J * s.omega);

  Eigen::Vector4d u;
  u << f, tau.x(), tau.y(), tau.z();
  return quad_clamp_control(t, u);
}

QuadTrajectory fly_quad_pd(const QuadrotorTruth& t, const DataGenSpec& spec,
                           std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dcube(-spec.cube_half, spec.cube_half);
  std::uniform_real_distribution<double> dunit(-1.0, 1.0);

  SE3State s;
  s.x = spec.cube_center + Vec3(dcube(rng), dcube(rng), dcube(rng));
  Vec3 eta(dunit(rng), dunit(rng), dunit(rng));
  while (eta.norm() > 1.0) eta = Vec3(dunit(rng), dunit(rng), dunit(rng));
  s.R = exp_so3(spec.att_perturb * eta);
  const Vec3 target = spec.cube_center + Vec3(dcube(rng), dcube(rng), dcube(rng));

  QuadTrajectory traj;
  traj.states.push_back(s);
  for (int k = 0; k < spec.quad_steps; ++k) {
    if (s.x.norm() > 50.0 || s.v.norm() > 50.0 || s.omega.norm() > 500.0)
      throw ControllerDiverged("quadrotor data-generation flight diverged");
    const Eigen::Vector4d u = quad_pd_control(t, spec, s, target);
    traj.controls.push_back(u);
    s = quad_step(t, s, u, spec.h);
    traj.states.push_back(s);
  }
  return traj;
}

}  // namespace

std::vector<TransitionPV> generate_quadrotor_dataset(const DataGenSpec& spec) {
  QuadrotorTruth truth;
  std::vector<TransitionPV> out;
  out.reserve(spec.quad_trajectories * spec.quad_keep_per_traj);
  for (int i = 0; i < spec.quad_trajectories; ++i) {
    auto rng = stream_rng(spec.seed, i);
    const QuadTrajectory traj = fly_quad_pd(truth, spec, rng);
    for (int j = 0; j < spec.quad_keep_per_traj; ++j) {
      const int k = 2 * j;
      if (k + 1 >= static_cast<int>(traj.states.size())) break;
      const SE3State& a = traj.states[k];
      const SE3State& b = traj.states[k + 1];
      TransitionPV tr;
      tr.x0 = a.x;
      tr.R0 = a.R;
      tr.v0 = a.v;
      tr.w0 = a.omega;
      tr.u = traj.controls[k];
      tr.x1 = b.x;
      tr.R1 = b.R;
      tr.v1 = b.v;
      tr.w1 = b.omega;
      out.push_back(std::move(tr));
    }
  }
  return out;
}

std::vector<TransitionP> generate_quadrotor_dataset_p(const DataGenSpec& spec) {
  QuadrotorTruth truth;
  std::vector<TransitionP> out;
  out.reserve(spec.quad_trajectories * spec.quad_keep_per_traj);
  for (int i = 0; i < spec.quad_trajectories; ++i) {
    auto rng = stream_rng(spec.seed, i);
    const QuadTrajectory traj = fly_quad_pd(truth, spec, rng);
    for (int j = 0; j < spec.quad_keep_per_traj; ++j) {
      const int k = 2 * j;
      if (k + 2 >= static_cast<int>(traj.states.size())) break;
      TransitionP tr;
      tr.x0 = traj.states[k].x;
      tr.R0 = traj.states[k].R;
      tr.x1 = traj.states[k + 1].x;
      tr.R1 = traj.states[k + 1].R;
      tr.x2 = traj.states[k + 2].x;
      tr.R2 = traj.states[k + 2].R;
      tr.u0 = traj.controls[k];
      tr.u1 = traj.controls[k + 1];
      out.push_back(std::move(tr));
    }
  }
  return out;
}

StateRefs PendulumTruthStepper::emit_step(Tape& t, const StateRefs& s,
                                          VR u) const {
  const double h = p_.h, al = p_.alpha;
  const double J33 = t_.J33, U0 = t_.U0;
  const double Jc[9] = {J33, 0, 0, 0, J33, 0, 0, 0, J33};
  VR J = t.constant(Jc, 9);
  const double dUc[9] = {-U0, 0, 0, 0, 0, 0, 0, 0, 0};
  VR dUdR = t.constant(dUc, 9);

  VR xi0 = emit_xi(t, s.R, dUdR);
  VR fRm = t.scalar_mul(u, t.constant({0.0, 0.0, h * t_.gain}));
  VR pi0 = t.matvec(J, s.w);
  VR a = t.axpy(h, fRm, t.scale(pi0, h));
  a = t.axpy((1.0 - al) * h * h, xi0, a);
  VR z = emit_newton(t, a, J, iters_);
  VR Z = emit_cayley(t, z);

  StateRefs out;
  out.R = t.matmul(s.R, Z);
  VR xi1 = emit_xi(t, out.R, dUdR);
  VR rhs = t.add(t.matvec_t(Z, pi0), t.matvec_t(Z, fRm));
  rhs = t.axpy((1.0 - al) * h, t.matvec_t(Z, xi0), rhs);
  rhs = t.axpy(al * h, xi1, rhs);
  out.w = t.solve3(J, rhs);
  return out;
}

StateRefs QuadTruthStepper::emit_step(Tape& t, const StateRefs& s,
                                      VR u) const {
  const double h = p_.h;
  const double m = t_.mass, g = t_.gravity;
  const Vec3 jd = t_.inertia_diag;
  const double Jc[9] = {jd.x(), 0, 0, 0, jd.y(), 0, 0, 0, jd.z()};
  VR J = t.constant(Jc, 9);

  VR uf = t.slice(u, 0, 1);
  VR tau = t.slice(u, 1, 3);
  VR fxm = t.scalar_mul(uf, t.constant({0.0, 0.0, 0.5 * h}));
  VR fRm = t.scale(tau, 0.5 * h);

  // The potential is m g x3: its position gradient is constant and its
  // attitude gradient vanishes, so the xi terms drop out.
  VR pi0 = t.matvec(J, s.w);
  VR a = t.axpy(h, fRm, t.scale(pi0, h));
  VR z = emit_newton(t, a, J, iters_);
  VR Z = emit_cayley(t, z);

  StateRefs out;
  out.R = t.matmul(s.R, Z);

  VR gvec = t.constant({0.0, 0.0, g});
  VR x1 = t.axpy(h, s.v, s.x);
  x1 = t.axpy(-(1.0 - p_.alpha) * h * h, gvec, x1);
  x1 = t.axpy(h / m, t.matvec(s.R, fxm), x1);
  out.x = x1;

  VR rhs = t.add(t.matvec_t(Z, pi0), t.matvec_t(Z, fRm));
  rhs = t.add(rhs, fRm);  // plus-side torque impulse equals the minus side
  out.w = t.solve3(J, rhs);

  VR v1 = t.axpy(-h, gvec, s.v);
  VR push = t.add(t.matvec(s.R, fxm), t.matvec(out.R, fxm));
  out.v = t.axpy(1.0 / m, push, v1);
  return out;
}

}  // namespace fvin
