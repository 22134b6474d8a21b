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

#include "fvin/trainer.hpp"

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

namespace fvin {

namespace {
constexpr double kAttitudeSkipAngle = M_PI - 0.05;
const double kIdentity9[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};

void copy_rot(const Rotation& R, double* out) {
  const auto a = R.to_row_major();
  std::copy(a.begin(), a.end(), out);
}
}  // namespace

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Ia: return "Ia";
    case Algorithm::Ib: return "Ib";
    case Algorithm::IIa: return "IIa";
    case Algorithm::IIb: return "IIb";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "Ia") return Algorithm::Ia;
  if (s == "Ib") return Algorithm::Ib;
  if (s == "IIa") return Algorithm::IIa;
  if (s == "IIb") return Algorithm::IIb;
  throw InvalidInput("unknown algorithm: " + s);
}

LossGraph::LossGraph(const DynamicsModel& model, Algorithm alg,
                     const IntegratorParams& p, int newton_unroll)
    : model_(&model),
      alg_(alg),
      p_(p),
      unroll_(newton_unroll),
      se3_(model.convention() == ForceConvention::QuadrotorSE3),
      mg_(tape_, model, ParamMode::Variable) {
  if (alg_ == Algorithm::Ia || alg_ == Algorithm::Ib)
    build_pv();
  else
    build_p();
}

void LossGraph::build_pv() {
  Tape& t = tape_;
  const int ud = model_->control_dim();
  const double h = p_.h, al = p_.alpha;

  in_R0_ = t.input(9);
  in_w0_ = t.input(3);
  in_u0_ = t.input(ud);
  in_R1_ = t.input(9);
  in_w1_ = t.input(3);
  in_watt_ = t.input(1);
  if (se3_) {
    in_x0_ = t.input(3);
    in_v0_ = t.input(3);
    in_x1_ = t.input(3);
    in_v1_ = t.input(3);
  }

  if (alg_ == Algorithm::Ia) {
    StateRefs s0{in_x0_, in_R0_, in_v0_, in_w0_};
    StateRefs s1 = emit_step(t, mg_, s0, in_u0_, p_, unroll_);
    pred_x_ = s1.x;
    pred_R_ = s1.R;
    pred_v_ = s1.v;
    pred_w_ = s1.w;
    rel_rot_ = t.matmul_nt(s1.R, in_R1_);
    VR loss = t.scalar_mul(in_watt_, t.sum_sq(t.log_so3_(rel_rot_)));
    loss = t.add(loss, t.sum_sq(t.sub(s1.w, in_w1_)));
    if (se3_) {
      loss = t.add(loss, t.sum_sq(t.sub(s1.x, in_x1_)));
      loss = t.add(loss, t.sum_sq(t.sub(s1.v, in_v1_)));
    }
    loss_ = loss;
    return;
  }

  // Ib: the data supplies the attitude increment, so no implicit solve; the
  // implicit equation itself is enforced as a Frobenius penalty.
  VR q0 = se3_ ? t.concat(in_x0_, in_R0_) : in_R0_;
  VR J0 = mg_.inertia(q0);
  ModelGraph::PotentialRefs pe0 = mg_.potential(q0);
  VR xi0 = emit_xi(t, in_R0_, pe0.dU_dR);
  ModelGraph::ForceRefs f = mg_.forces(q0, in_u0_);

  VR pi0 = t.matvec(J0, in_w0_);
  VR a = t.axpy(h, f.fR_minus, t.scale(pi0, h));
  a = t.axpy((1.0 - al) * h * h, xi0, a);

  VR Z0 = t.matmul_tn(in_R0_, in_R1_);
  VR q1 = se3_ ? t.concat(in_x1_, in_R1_) : in_R1_;
  ModelGraph::PotentialRefs pe1 = mg_.potential(q1);
  VR xi1 = emit_xi(t, in_R1_, pe1.dU_dR);
  VR J1 = mg_.inertia(q1);

  VR rhs = t.add(t.matvec_t(Z0, pi0), t.matvec_t(Z0, f.fR_minus));
  rhs = t.axpy((1.0 - al) * h, t.matvec_t(Z0, xi0), rhs);
  rhs = t.axpy(al * h, xi1, rhs);
  if (f.fR_plus.valid()) rhs = t.add(rhs, f.fR_plus);
  VR w1p = t.solve3(J1, rhs);
  pred_w_ = w1p;

  VR I9 = t.constant(kIdentity9, 9);
  VR Jd0 = t.axpy(-1.0, J0, t.scalar_mul(t.scale(t.trace3(J0), 0.5), I9));
  VR defect =
      t.sub(t.hat3(a), t.sub(t.matmul(Z0, Jd0), t.matmul_nt(Jd0, Z0)));

  VR loss = t.add(t.sum_sq(t.sub(w1p, in_w1_)), t.sum_sq(defect));
  if (se3_) {
    VR im = mg_.inv_mass();
    VR x1p = t.axpy(h, in_v0_, in_x0_);
    x1p = t.axpy(-(1.0 - al) * h * h, t.scalar_mul(im, pe0.dU_dx), x1p);
    x1p = t.axpy(h, t.scalar_mul(im, t.matvec(in_R0_, f.fx_minus)), x1p);
    pred_x_ = x1p;

    VR gamma = t.scalar_mul(mg_.mass(), in_v0_);
    gamma = t.axpy(-(1.0 - al) * h, pe0.dU_dx, gamma);
    gamma = t.axpy(-al * h, pe1.dU_dx, gamma);
    gamma = t.add(gamma, t.matvec(in_R0_, f.fx_minus));
    gamma = t.add(gamma, t.matvec(in_R1_, f.fx_plus));
    VR v1p = t.scalar_mul(im, gamma);
    pred_v_ = v1p;

    loss = t.add(loss, t.sum_sq(t.sub(x1p, in_x1_)));
    loss = t.add(loss, t.sum_sq(t.sub(v1p, in_v1_)));
  }
  loss_ = loss;
}

void LossGraph::build_p() {
  Tape& t = tape_;
  const int ud = model_->control_dim();
  const double h = p_.h;

  in_R0_ = t.input(9);
  in_R1_ = t.input(9);
  in_R2_ = t.input(9);
  in_u0_ = t.input(ud);
  in_u1_ = t.input(ud);
  in_watt_ = t.input(1);
  if (se3_) {
    in_x0_ = t.input(3);
    in_x1_ = t.input(3);
    in_x2_ = t.input(3);
  }

  VR q0 = se3_ ? t.concat(in_x0_, in_R0_) : in_R0_;
  VR q1 = se3_ ? t.concat(in_x1_, in_R1_) : in_R1_;
  ModelGraph::ForceRefs f0 = mg_.forces(q0, in_u0_);
  ModelGraph::ForceRefs f1 = mg_.forces(q1, in_u1_);
  VR J = mg_.inertia(q1);
  ModelGraph::PotentialRefs pe1 = mg_.potential(q1);
  VR xi1 = emit_xi(t, in_R1_, pe1.dU_dR);

  VR I9 = t.constant(kIdentity9, 9);
  VR Jd = t.axpy(-1.0, J, t.scalar_mul(t.scale(t.trace3(J), 0.5), I9));
  VR Z0 = t.matmul_tn(in_R0_, in_R1_);
  VR carry = t.sub(t.matmul(Jd, Z0), t.matmul_tn(Z0, Jd));
  VR fsum = f0.fR_plus.valid() ? t.add(f1.fR_minus, f0.fR_plus) : f1.fR_minus;

  if (alg_ == Algorithm::IIa) {
    VR a = t.scale(xi1, h * h);
    a = t.axpy(h, fsum, a);
    a = t.add(a, t.vee3(carry));
    VR z = emit_newton(t, a, J, unroll_);
    VR R2p = t.matmul(in_R1_, emit_cayley(t, z));
    pred_R_ = R2p;
    rel_rot_ = t.matmul_nt(R2p, in_R2_);
    VR loss = t.scalar_mul(in_watt_, t.sum_sq(t.log_so3_(rel_rot_)));
    if (se3_) {
      VR im = mg_.inv_mass();
      VR x2p = t.axpy(-1.0, in_x0_, t.scale(in_x1_, 2.0));
      x2p = t.axpy(-h * h, t.scalar_mul(im, pe1.dU_dx), x2p);
      VR dfx = t.add(f1.fx_minus, f0.fx_plus);
      x2p = t.axpy(h, t.scalar_mul(im, t.matvec(in_R1_, dfx)), x2p);
      pred_x_ = x2p;
      loss = t.add(loss, t.sum_sq(t.sub(x2p, in_x2_)));
    }
    loss_ = loss;
    return;
  }

  // IIb: two-sided equation defect, no solve anywhere.
  VR Z1 = t.matmul_tn(in_R1_, in_R2_);
  VR E = t.axpy(h, t.hat3(fsum), t.scale(t.hat3(xi1), h * h));
  E = t.add(E, carry);
  E = t.sub(E, t.sub(t.matmul(Z1, Jd), t.matmul_nt(Jd, Z1)));
  VR loss = t.sum_sq(E);
  if (se3_) {
    VR im = mg_.inv_mass();
    VR ex = t.add(in_x2_, in_x0_);
    ex = t.axpy(-2.0, in_x1_, ex);
    ex = t.axpy(h * h, t.scalar_mul(im, pe1.dU_dx), ex);
    VR dfx = t.add(f1.fx_minus, f0.fx_plus);
    ex = t.axpy(-h, t.scalar_mul(im, t.matvec(in_R1_, dfx)), ex);
    loss = t.add(loss, t.sum_sq(ex));
  }
  loss_ = loss;
}

void LossGraph::bind(const TransitionPV& s) {
  double buf[9];
  copy_rot(s.R0, buf);
  tape_.set_input(in_R0_, buf, 9);
  copy_rot(s.R1, buf);
  tape_.set_input(in_R1_, buf, 9);
  tape_.set_input(in_w0_, s.w0.data(), 3);
  tape_.set_input(in_w1_, s.w1.data(), 3);
  if (s.u.size() != model_->control_dim())
    throw InvalidInput("transition control dimension mismatch");
  tape_.set_input(in_u0_, s.u.data(), static_cast<int>(s.u.size()));
  const double one = 1.0;
  tape_.set_input(in_watt_, &one, 1);
  if (se3_) {
    tape_.set_input(in_x0_, s.x0.data(), 3);
    tape_.set_input(in_v0_, s.v0.data(), 3);
    tape_.set_input(in_x1_, s.x1.data(), 3);
    tape_.set_input(in_v1_, s.v1.data(), 3);
  }
}

void LossGraph::bind(const TransitionP& s) {
  double buf[9];
  copy_rot(s.R0, buf);
  tape_.set_input(in_R0_, buf, 9);
  copy_rot(s.R1, buf);
  tape_.set_input(in_R1_, buf, 9);
  copy_rot(s.R2, buf);
  tape_.set_input(in_R2_, buf, 9);
  if (s.u0.size() != model_->control_dim() ||
      s.u1.size() != model_->control_dim())
    throw InvalidInput("transition control dimension mismatch");
  tape_.set_input(in_u0_, s.u0.data(), static_cast<int>(s.u0.size()));
  tape_.set_input(in_u1_, s.u1.data(), static_cast<int>(s.u1.size()));
  const double one = 1.0;
  tape_.set_input(in_watt_, &one, 1);
  if (se3_) {
    tape_.set_input(in_x0_, s.x0.data(), 3);
    tape_.set_input(in_x1_, s.x1.data(), 3);
    tape_.set_input(in_x2_, s.x2.data(), 3);
  }
}

double LossGraph::run(const double* params) {
  tape_.execute(params);
  if (rel_rot_.valid()) {
    const double* R = tape_.value(rel_rot_);
    const double c = std::clamp(0.5 * (R[0] + R[4] + R[8] - 1.0), -1.0, 1.0);
    if (std::acos(c) > kAttitudeSkipAngle) {
      const double zero = 0.0;
      tape_.set_input(in_watt_, &zero, 1);
      tape_.execute(params);
    }
  }
  return tape_.scalar(loss_);
}

double LossGraph::value(const std::vector<double>& params,
                        const TransitionPV& s) {
  bind(s);
  return run(params.data());
}

double LossGraph::value(const std::vector<double>& params,
                        const TransitionP& s) {
  bind(s);
  return run(params.data());
}

double LossGraph::value_and_grad(const std::vector<double>& params,
                                 const TransitionPV& s,
                                 std::vector<double>& grads) {
  const double l = value(params, s);
  tape_.backward(loss_, grads.data());
  return l;
}

double LossGraph::value_and_grad(const std::vector<double>& params,
                                 const TransitionP& s,
                                 std::vector<double>& grads) {
  const double l = value(params, s);
  tape_.backward(loss_, grads.data());
  return l;
}

SE3State LossGraph::predicted(const std::vector<double>& params,
                              const TransitionPV& s) {
  if (alg_ != Algorithm::Ia)
    throw InvalidInput("one-step state prediction needs the shooting form");
  bind(s);
  run(params.data());
  SE3State out;
  Mat3 R;
  const double* r = tape_.value(pred_R_);
  R << r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8];
  out.R = Rotation(R);
  out.omega = Eigen::Map<const Vec3>(tape_.value(pred_w_));
  if (se3_) {
    out.x = Eigen::Map<const Vec3>(tape_.value(pred_x_));
    out.v = Eigen::Map<const Vec3>(tape_.value(pred_v_));
  }
  return out;
}

SE3Pose LossGraph::predicted(const std::vector<double>& params,
                             const TransitionP& s) {
  if (alg_ != Algorithm::IIa)
    throw InvalidInput("two-pose prediction needs the shooting form");
  bind(s);
  run(params.data());
  SE3Pose out;
  Mat3 R;
  const double* r = tape_.value(pred_R_);
  R << r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8];
  out.R = Rotation(R);
  if (se3_) out.x = Eigen::Map<const Vec3>(tape_.value(pred_x_));
  return out;
}

namespace {
template <class S>
double batch_loss(const DynamicsModel& m, const std::vector<S>& data,
                  Algorithm alg, const IntegratorParams& p,
                  const NewtonConfig& newton) {
  LossGraph g(m, alg, p, newton.unroll_for_grad);
  double total = 0.0;
  for (const S& s : data) total += g.value(m.params(), s);
  return total;
}
}  // namespace

double loss_Ia(const DynamicsModel& m, const std::vector<TransitionPV>& data,
               const IntegratorParams& p, const NewtonConfig& newton) {
  return batch_loss(m, data, Algorithm::Ia, p, newton);
}
double loss_Ib(const DynamicsModel& m, const std::vector<TransitionPV>& data,
               const IntegratorParams& p, const NewtonConfig& newton) {
  return batch_loss(m, data, Algorithm::Ib, p, newton);
}
double loss_IIa(const DynamicsModel& m, const std::vector<TransitionP>& data,
                const IntegratorParams& p, const NewtonConfig& newton) {
  return batch_loss(m, data, Algorithm::IIa, p, newton);
}
double loss_IIb(const DynamicsModel& m, const std::vector<TransitionP>& data,
                const IntegratorParams& p, const NewtonConfig& newton) {
  return batch_loss(m, data, Algorithm::IIb, p, newton);
}

SE3State predict_Ia(const DynamicsModel& m, const TransitionPV& s,
                    const IntegratorParams& p, const NewtonConfig& newton) {
  LossGraph g(m, Algorithm::Ia, p, newton.unroll_for_grad);
  return g.predicted(m.params(), s);
}

SE3Pose predict_IIa(const DynamicsModel& m, const TransitionP& s,
                    const IntegratorParams& p, const NewtonConfig& newton) {
  LossGraph g(m, Algorithm::IIa, p, newton.unroll_for_grad);
  return g.predicted(m.params(), s);
}

namespace {
void clamp_mass_param(DynamicsModel& m) {
  if (m.mass_offset() < 0) return;
  double& r = m.params()[m.mass_offset()];
  if (std::abs(r) < 1e-3) r = std::copysign(1e-3, r == 0.0 ? 1.0 : r);
}

template <class S>
TrainResult train_impl(DynamicsModel& model, const std::vector<S>& data,
                       const TrainConfig& cfg) {
  if (data.empty()) throw InvalidInput("empty training set");
  IntegratorParams p(cfg.h, cfg.alpha);
  LossGraph g(model, cfg.algorithm, p, cfg.newton.unroll_for_grad);
  AdamState adam(model.param_count(), cfg.lr);
  adam.decay_every = cfg.lr_decay_every;
  adam.decay_factor = cfg.lr_decay_factor;
  std::vector<double> grads(model.param_count());

  TrainResult res;
  for (long it = 1; it <= cfg.iterations; ++it) {
    std::fill(grads.begin(), grads.end(), 0.0);
    double total = 0.0;
    for (const S& s : data) total += g.value_and_grad(model.params(), s, grads);
    if (!std::isfinite(total))
      throw NonFiniteValue("training loss is not finite at iteration " +
                           std::to_string(it));
    if (it == 1 || it % cfg.log_every == 0 || it == cfg.iterations)
      res.log.push_back({it, total, adam.current_lr()});
    res.iterations_run = it;
    if (cfg.stop_below > 0.0 && total <= cfg.stop_below) {
      res.final_loss = total;
      return res;
    }
    adam.step(model.params(), grads);
    clamp_mass_param(model);
  }
  double total = 0.0;
  for (const S& s : data) total += g.value(model.params(), s);
  res.final_loss = total;
  return res;
}
}  // namespace

TrainResult train(DynamicsModel& model, const std::vector<TransitionPV>& data,
                  const TrainConfig& cfg) {
  if (cfg.algorithm != Algorithm::Ia && cfg.algorithm != Algorithm::Ib)
    throw InvalidInput("position-velocity data trains Ia or Ib");
  return train_impl(model, data, cfg);
}

TrainResult train(DynamicsModel& model, const std::vector<TransitionP>& data,
                  const TrainConfig& cfg) {
  if (cfg.algorithm != Algorithm::IIa && cfg.algorithm != Algorithm::IIb)
    throw InvalidInput("position-only data trains IIa or IIb");
  return train_impl(model, data, cfg);
}

BaselineModel BaselineModel::make(ForceConvention c,
                                  const std::vector<int>& hidden,
                                  std::uint64_t seed) {
  BaselineModel m;
  m.convention = c;
  m.seed = seed;
  const bool se3 = c == ForceConvention::QuadrotorSE3;
  const int state = se3 ? 18 : 12;
  const int in = state + (se3 ? 4 : 1);
  m.spec.dims.push_back(in);
  for (size_t i = 0; i < hidden.size(); ++i) {
    m.spec.dims.push_back(hidden[i]);
    m.spec.acts.push_back(i + 1 < hidden.size() ? Activation::Tanh
                                                : Activation::Identity);
  }
  m.spec.dims.push_back(state);
  m.spec.acts.push_back(Activation::Identity);

  m.params.assign(m.spec.param_count(), 0.0);
  std::mt19937_64 rng(seed);
  double* p = m.params.data();
  for (size_t l = 0; l + 1 < m.spec.dims.size(); ++l) {
    const int nin = m.spec.dims[l], nout = m.spec.dims[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(nin));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (int i = 0; i < nout * nin; ++i) *p++ = dist(rng);
    p += nout;
  }
  return m;
}

Eigen::VectorXd BaselineModel::input_of(const SE3State& s,
                                        const Eigen::VectorXd& u) const {
  RawState raw{s.x, s.R.matrix(), s.v, s.omega};
  const bool se3 = convention == ForceConvention::QuadrotorSE3;
  Eigen::VectorXd in(spec.dims.front());
  int at = 0;
  if (se3) {
    in.segment<3>(at) = raw.x;
    at += 3;
  }
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) in[at++] = raw.R(r, c);
  if (se3) {
    in.segment<3>(at) = raw.v;
    at += 3;
  }
  in.segment<3>(at) = raw.w;
  at += 3;
  in.segment(at, u.size()) = u;
  return in;
}

Eigen::VectorXd BaselineModel::predict(const Eigen::VectorXd& in) const {
  return mlp_forward(spec, params.data(), in);
}

BaselineModel::RawState BaselineModel::step_raw(
    const RawState& s, const Eigen::VectorXd& u) const {
  const bool se3 = convention == ForceConvention::QuadrotorSE3;
  Eigen::VectorXd in(spec.dims.front());
  int at = 0;
  if (se3) {
    in.segment<3>(at) = s.x;
    at += 3;
  }
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) in[at++] = s.R(r, c);
  if (se3) {
    in.segment<3>(at) = s.v;
    at += 3;
  }
  in.segment<3>(at) = s.w;
  at += 3;
  in.segment(at, u.size()) = u;

  const Eigen::VectorXd out = predict(in);
  RawState n;
  at = 0;
  if (se3) {
    n.x = out.segment<3>(at);
    at += 3;
  } else {
    n.x = Vec3::Zero();
  }
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) n.R(r, c) = out[at++];
  if (se3) {
    n.v = out.segment<3>(at);
    at += 3;
  } else {
    n.v = Vec3::Zero();
  }
  n.w = out.segment<3>(at);
  return n;
}

nlohmann::json BaselineModel::to_json() const {
  nlohmann::json acts = nlohmann::json::array();
  for (auto a : spec.acts)
    acts.push_back(a == Activation::Tanh ? "tanh" : "identity");
  return nlohmann::json{{"schema_version", 1},
                        {"kind", "baseline"},
                        {"convention", to_string(convention)},
                        {"seed", seed},
                        {"net", {{"dims", spec.dims}, {"acts", acts}}},
                        {"params", params}};
}

BaselineModel BaselineModel::from_json(const nlohmann::json& j) {
  if (j.at("kind").get<std::string>() != "baseline")
    throw InvalidInput("checkpoint is not a baseline model");
  BaselineModel m;
  const std::string conv = j.at("convention").get<std::string>();
  if (conv == "pendulum-so3")
    m.convention = ForceConvention::PendulumSO3;
  else if (conv == "quadrotor-se3")
    m.convention = ForceConvention::QuadrotorSE3;
  else
    throw InvalidInput("unknown force convention: " + conv);
  m.seed = j.at("seed").get<std::uint64_t>();
  m.spec.dims = j.at("net").at("dims").get<std::vector<int>>();
  for (const auto& a : j.at("net").at("acts"))
    m.spec.acts.push_back(a.get<std::string>() == "tanh" ? Activation::Tanh
                                                         : Activation::Identity);
  m.params = j.at("params").get<std::vector<double>>();
  if (static_cast<int>(m.params.size()) != m.spec.param_count())
    throw InvalidInput("baseline parameter count mismatch");
  return m;
}

TrainResult train_blackbox_baseline(BaselineModel& model,
                                    const std::vector<TransitionPV>& data,
                                    const TrainConfig& cfg) {
  if (data.empty()) throw InvalidInput("empty training set");
  const bool se3 = model.convention == ForceConvention::QuadrotorSE3;
  const int in_dim = model.spec.dims.front();
  const int out_dim = model.spec.dims.back();

  Tape t;
  VR in = t.input(in_dim);
  VR target = t.input(out_dim);
  std::vector<VR> ws, bs;
  int at = 0;
  for (size_t l = 0; l + 1 < model.spec.dims.size(); ++l) {
    const int nin = model.spec.dims[l], nout = model.spec.dims[l + 1];
    ws.push_back(t.var(at, nout * nin));
    at += nout * nin;
    bs.push_back(t.var(at, nout));
    at += nout;
  }
  VR h = in;
  for (size_t l = 0; l + 1 < model.spec.dims.size(); ++l) {
    h = t.affine(ws[l], bs[l], h, model.spec.dims[l + 1], model.spec.dims[l]);
    if (model.spec.acts[l] == Activation::Tanh) h = t.tanh_(h);
  }
  VR loss = t.sum_sq(t.sub(h, target));

  AdamState adam(static_cast<int>(model.params.size()), cfg.lr);
  adam.decay_every = cfg.lr_decay_every;
  adam.decay_factor = cfg.lr_decay_factor;
  std::vector<double> grads(model.params.size());

  // Pre-pack the sample buffers once.
  std::vector<Eigen::VectorXd> ins, targets;
  ins.reserve(data.size());
  targets.reserve(data.size());
  for (const TransitionPV& s : data) {
    SE3State st{s.x0, s.R0, s.v0, s.w0};
    ins.push_back(model.input_of(st, s.u));
    Eigen::VectorXd tg(out_dim);
    int k = 0;
    if (se3) {
      tg.segment<3>(k) = s.x1;
      k += 3;
    }
    const Mat3& R1 = s.R1.matrix();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) tg[k++] = R1(r, c);
    if (se3) {
      tg.segment<3>(k) = s.v1;
      k += 3;
    }
    tg.segment<3>(k) = s.w1;
    targets.push_back(tg);
  }

  TrainResult res;
  for (long it = 1; it <= cfg.iterations; ++it) {
    std::fill(grads.begin(), grads.end(), 0.0);
    double total = 0.0;
    for (size_t i = 0; i < ins.size(); ++i) {
      t.set_input(in, ins[i].data(), in_dim);
      t.set_input(target, targets[i].data(), out_dim);
      t.execute(model.params.data());
      total += t.scalar(loss);
      t.backward(loss, grads.data());
    }
    if (!std::isfinite(total))
      throw NonFiniteValue("baseline loss is not finite at iteration " +
                           std::to_string(it));
    if (it == 1 || it % cfg.log_every == 0 || it == cfg.iterations)
      res.log.push_back({it, total, adam.current_lr()});
    res.iterations_run = it;
    if (cfg.stop_below > 0.0 && total <= cfg.stop_below) {
      res.final_loss = total;
      return res;
    }
    adam.step(model.params, grads);
  }
  double total = 0.0;
  for (size_t i = 0; i < ins.size(); ++i) {
    t.set_input(in, ins[i].data(), in_dim);
    t.set_input(target, targets[i].data(), out_dim);
    t.execute(model.params.data());
    total += t.scalar(loss);
  }
  res.final_loss = total;
  return res;
}

namespace {
template <class S>
std::vector<double> numeric_grad_impl(DynamicsModel& model,
                                      const std::vector<S>& data,
                                      const TrainConfig& cfg, double step) {
  IntegratorParams p(cfg.h, cfg.alpha);
  LossGraph g(model, cfg.algorithm, p, cfg.newton.unroll_for_grad);
  std::vector<double> theta = model.params();
  std::vector<double> out(theta.size());
  for (size_t i = 0; i < theta.size(); ++i) {
    const double keep = theta[i];
    theta[i] = keep + step;
    double lp = 0.0;
    for (const S& s : data) lp += g.value(theta, s);
    theta[i] = keep - step;
    double lm = 0.0;
    for (const S& s : data) lm += g.value(theta, s);
    theta[i] = keep;
    out[i] = (lp - lm) / (2.0 * step);
  }
  return out;
}

template <class S>
std::vector<double> analytic_grad_impl(DynamicsModel& model,
                                       const std::vector<S>& data,
                                       const TrainConfig& cfg) {
  IntegratorParams p(cfg.h, cfg.alpha);
  LossGraph g(model, cfg.algorithm, p, cfg.newton.unroll_for_grad);
  std::vector<double> grads(model.param_count(), 0.0);
  for (const S& s : data) g.value_and_grad(model.params(), s, grads);
  return grads;
}
}  // namespace

std::vector<double> numeric_loss_grad(DynamicsModel& model,
                                      const std::vector<TransitionPV>& data,
                                      const TrainConfig& cfg, double step) {
  return numeric_grad_impl(model, data, cfg, step);
}
std::vector<double> numeric_loss_grad(DynamicsModel& model,
                                      const std::vector<TransitionP>& data,
                                      const TrainConfig& cfg, double step) {
  return numeric_grad_impl(model, data, cfg, step);
}
std::vector<double> analytic_loss_grad(DynamicsModel& model,
                                       const std::vector<TransitionPV>& data,
                                       const TrainConfig& cfg) {
  return analytic_grad_impl(model, data, cfg);
}
std::vector<double> analytic_loss_grad(DynamicsModel& model,
                                       const std::vector<TransitionP>& data,
                                       const TrainConfig& cfg) {
  return analytic_grad_impl(model, data, cfg);
}

double max_rel_error(const std::vector<double>& a, const std::vector<double>& b,
                     double floor) {
  if (a.size() != b.size()) throw InvalidInput("gradient size mismatch");
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

}  // namespace fvin
