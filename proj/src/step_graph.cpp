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

#include "fvin/step_graph.hpp"

namespace fvin {

namespace {
const double kIdentity9[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};
}

ModelGraph::ModelGraph(Tape& t, const DynamicsModel& m, ParamMode mode)
    : t_(&t), m_(&m), mode_(mode) {}

VR ModelGraph::param_ref(int offset, int len) {
  if (mode_ == ParamMode::Variable) return t_->var(offset, len);
  return t_->constant(m_->params().data() + offset, len);
}

ModelGraph::NetRefs ModelGraph::net_params(const MLPLayout& net) {
  NetRefs refs;
  int at = net.offset;
  for (size_t l = 0; l + 1 < net.spec.dims.size(); ++l) {
    const int nin = net.spec.dims[l], nout = net.spec.dims[l + 1];
    refs.weights.push_back(param_ref(at, nout * nin));
    at += nout * nin;
    refs.biases.push_back(param_ref(at, nout));
    at += nout;
  }
  return refs;
}

VR ModelGraph::mlp(const MLPLayout& net, VR in) {
  const NetRefs refs = net_params(net);
  VR h = in;
  for (size_t l = 0; l + 1 < net.spec.dims.size(); ++l) {
    h = t_->affine(refs.weights[l], refs.biases[l], h, net.spec.dims[l + 1],
                   net.spec.dims[l]);
    if (net.spec.acts[l] == Activation::Tanh) h = t_->tanh_(h);
  }
  return h;
}

ModelGraph::PotentialRefs ModelGraph::potential(VR q) {
  const MLPLayout& net = m_->potential_net();
  const NetRefs refs = net_params(net);
  const size_t L = net.spec.dims.size() - 1;
  std::vector<VR> post(L + 1);
  post[0] = q;
  for (size_t l = 0; l < L; ++l) {
    post[l + 1] = t_->affine(refs.weights[l], refs.biases[l], post[l],
                             net.spec.dims[l + 1], net.spec.dims[l]);
    if (net.spec.acts[l] == Activation::Tanh) post[l + 1] = t_->tanh_(post[l + 1]);
  }
  // Input gradient as explicit ops so it stays differentiable in the params.
  VR g = t_->constant({1.0});
  for (size_t l = L; l-- > 0;) {
    if (net.spec.acts[l] == Activation::Tanh)
      g = t_->hadamard(g, t_->one_minus_sq(post[l + 1]));
    g = t_->affine_t(refs.weights[l], g, net.spec.dims[l + 1],
                     net.spec.dims[l]);
  }
  PotentialRefs out;
  out.U = post[L];
  if (m_->convention() == ForceConvention::QuadrotorSE3) {
    out.dU_dx = t_->slice(g, 0, 3);
    out.dU_dR = t_->slice(g, 3, 9);
  } else {
    out.dU_dR = g;
  }
  return out;
}

VR ModelGraph::inertia(VR q) {
  VR l6;
  if (m_->inertia_is_net()) {
    l6 = mlp(m_->inertia_net(), q);
  } else {
    if (!const_inertia_.valid())
      const_inertia_ = param_ref(m_->inertia_offset(), 6);
    l6 = const_inertia_;
  }
  VR L = t_->tri_factor(l6);
  VR LLt = t_->matmul_nt(L, L);
  VR I = t_->constant(kIdentity9, 9);
  return t_->axpy(m_->epsilon(), I, LLt);
}

VR ModelGraph::mass() {
  if (!mass_.valid()) {
    if (m_->mass_offset() < 0) {
      mass_ = t_->constant({1.0});
    } else {
      VR r = param_ref(m_->mass_offset(), 1);
      mass_ = t_->scalar_mul(r, r);
    }
  }
  return mass_;
}

VR ModelGraph::inv_mass() {
  if (!inv_mass_.valid()) inv_mass_ = t_->recip(mass());
  return inv_mass_;
}

ModelGraph::ForceRefs ModelGraph::forces(VR q, VR u) {
  VR g = mlp(m_->gains_net(), q);
  ForceRefs f;
  if (m_->convention() == ForceConvention::PendulumSO3) {
    f.fR_minus = t_->scalar_mul(u, g);  // u is scalar
  } else {
    // g is a 6x4 row-major matrix, rows are force then torque; the step
    // impulse g u is split evenly across the minus and plus sides.
    VR zero4 = t_->constant({0.0, 0.0, 0.0, 0.0, 0.0, 0.0});
    VR F = t_->affine(g, zero4, u, 6, 4);
    f.fx_minus = f.fx_plus = t_->scale(t_->slice(F, 0, 3), 0.5);
    f.fR_minus = f.fR_plus = t_->scale(t_->slice(F, 3, 3), 0.5);
  }
  return f;
}

VR emit_xi(Tape& t, VR R, VR dU_dR) {
  VR M = t.sub(t.matmul_tn(dU_dR, R), t.matmul_tn(R, dU_dR));
  return t.vee3(M);
}

VR emit_newton(Tape& t, VR a, VR J, int iters) {
  VR I = t.constant(kIdentity9, 9);
  VR twoJ = t.scale(J, 2.0);
  VR z = t.solve3(twoJ, a);
  VR Sa = t.hat3(a);
  for (int k = 0; k < iters; ++k) {
    VR adz = t.dot(a, z);
    VR phi = t.add(a, t.cross(a, z));
    phi = t.add(phi, t.scalar_mul(adz, z));
    phi = t.axpy(-2.0, t.matvec(J, z), phi);
    VR G = t.add(Sa, t.scalar_mul(adz, I));
    G = t.add(G, t.outer3(z, a));
    G = t.axpy(-2.0, J, G);
    z = t.sub(z, t.solve3(G, phi));
  }
  return z;
}

VR emit_cayley(Tape& t, VR z) {
  VR I = t.constant(kIdentity9, 9);
  VR zz = t.sum_sq(z);
  VR one = t.constant({1.0});
  VR denom = t.recip(t.add(one, zz));
  VR num = t.scalar_mul(t.sub(one, zz), I);
  num = t.axpy(2.0, t.hat3(z), num);
  num = t.axpy(2.0, t.outer3(z, z), num);
  return t.scalar_mul(denom, num);
}

StateRefs emit_step(Tape& t, ModelGraph& mg, const StateRefs& s, VR u,
                    const IntegratorParams& p, int newton_iters) {
  const bool se3 = s.x.valid();
  const double h = p.h, al = p.alpha;

  VR q0 = se3 ? t.concat(s.x, s.R) : s.R;
  VR J0 = mg.inertia(q0);
  ModelGraph::PotentialRefs pe0 = mg.potential(q0);
  VR xi0 = emit_xi(t, s.R, pe0.dU_dR);
  ModelGraph::ForceRefs f = mg.forces(q0, u);

  VR pi0 = t.matvec(J0, s.w);
  VR a = t.axpy(h, f.fR_minus, t.scale(pi0, h));
  a = t.axpy((1.0 - al) * h * h, xi0, a);
  VR z = emit_newton(t, a, J0, newton_iters);
  VR Z = emit_cayley(t, z);

  StateRefs out;
  out.R = t.matmul(s.R, Z);

  if (se3) {
    VR im = mg.inv_mass();
    VR x1 = t.axpy(h, s.v, s.x);
    x1 = t.axpy(-(1.0 - al) * h * h, t.scalar_mul(im, pe0.dU_dx), x1);
    x1 = t.axpy(h, t.scalar_mul(im, t.matvec(s.R, f.fx_minus)), x1);
    out.x = x1;
  }

  VR q1 = se3 ? t.concat(out.x, out.R) : out.R;
  ModelGraph::PotentialRefs pe1 = mg.potential(q1);
  VR xi1 = emit_xi(t, out.R, pe1.dU_dR);
  VR J1 = mg.inertia(q1);

  VR rhs = t.add(t.matvec_t(Z, pi0), t.matvec_t(Z, f.fR_minus));
  rhs = t.axpy((1.0 - al) * h, t.matvec_t(Z, xi0), rhs);
  rhs = t.axpy(al * h, xi1, rhs);
  if (f.fR_plus.valid()) rhs = t.add(rhs, f.fR_plus);
  out.w = t.solve3(J1, rhs);

  if (se3) {
    VR gamma = t.scalar_mul(mg.mass(), s.v);
    gamma = t.axpy(-(1.0 - al) * h, pe0.dU_dx, gamma);
    gamma = t.axpy(-al * h, pe1.dU_dx, gamma);
    gamma = t.add(gamma, t.matvec(s.R, f.fx_minus));
    gamma = t.add(gamma, t.matvec(out.R, f.fx_plus));
    out.v = t.scalar_mul(mg.inv_mass(), gamma);
  }
  return out;
}

StateRefs LearntStepper::emit_step(Tape& t, const StateRefs& s, VR u) const {
  ModelGraph mg(t, m_, ParamMode::Constant);
  return fvin::emit_step(t, mg, s, u, p_, iters_);
}

}  // namespace fvin
