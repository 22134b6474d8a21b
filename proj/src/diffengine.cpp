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

#include "fvin/diffengine.hpp"

#include <cmath>
#include <cstring>

namespace fvin {

namespace {
using CMat3 = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>;
using MMat3 = Eigen::Map<Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>;
using CVec3m = Eigen::Map<const Eigen::Vector3d>;
using MVec3m = Eigen::Map<Eigen::Vector3d>;
using CRowMat = Eigen::Map<
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using MRowMat = Eigen::Map<
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using CVecX = Eigen::Map<const Eigen::VectorXd>;
using MVecX = Eigen::Map<Eigen::VectorXd>;

constexpr double kLogClamp = M_PI - 1e-6;
}  // namespace

Tape::ValRef Tape::alloc(int n, Kind kind, int var_offset) {
  Value v;
  v.offset = static_cast<int>(arena_.size());
  v.len = n;
  v.kind = kind;
  v.var_offset = var_offset;
  arena_.resize(arena_.size() + n, 0.0);
  vals_.push_back(v);
  return ValRef{static_cast<int>(vals_.size()) - 1};
}

void Tape::check_len(ValRef r, int n, const char* who) const {
  if (!r.valid() || r.id >= static_cast<int>(vals_.size()))
    throw InvalidInput(std::string(who) + ": dangling value reference");
  if (vals_[r.id].len != n)
    throw InvalidInput(std::string(who) + ": expected length " +
                       std::to_string(n) + ", got " +
                       std::to_string(vals_[r.id].len));
}

Tape::ValRef Tape::var(int var_offset, int n) {
  if (var_offset < 0 || n <= 0) throw InvalidInput("bad variable slice");
  auto r = alloc(n, Kind::Var, var_offset);
  var_leaves_.push_back(r.id);
  var_span_ = std::max(var_span_, var_offset + n);
  return r;
}

Tape::ValRef Tape::input(int n) { return alloc(n, Kind::Input); }

Tape::ValRef Tape::constant(const double* data, int n) {
  auto r = alloc(n, Kind::Const);
  std::memcpy(arena_.data() + vals_[r.id].offset, data, n * sizeof(double));
  return r;
}

Tape::ValRef Tape::constant(std::initializer_list<double> data) {
  return constant(data.begin(), static_cast<int>(data.size()));
}

Tape::ValRef Tape::constant_scalar(double v) { return constant(&v, 1); }

Tape::ValRef Tape::emit(Op op, int out_len, ValRef a, ValRef b, ValRef c,
                        int i0, int i1, double s) {
  ValRef out = alloc(out_len, Kind::Computed);
  Node n;
  n.op = op;
  n.a = a.id;
  n.b = b.id;
  n.c = c.id;
  n.out = out.id;
  n.i0 = i0;
  n.i1 = i1;
  n.s = s;
  nodes_.push_back(n);
  return out;
}

Tape::ValRef Tape::add(ValRef a, ValRef b) {
  check_len(b, len(a), "add");
  return emit(Op::Add, len(a), a, b);
}
Tape::ValRef Tape::sub(ValRef a, ValRef b) {
  check_len(b, len(a), "sub");
  return emit(Op::Sub, len(a), a, b);
}
Tape::ValRef Tape::neg(ValRef a) { return emit(Op::Neg, len(a), a); }
Tape::ValRef Tape::scale(ValRef a, double c) {
  return emit(Op::ScaleC, len(a), a, {}, {}, 0, 0, c);
}
Tape::ValRef Tape::axpy(double c, ValRef y, ValRef x) {
  check_len(y, len(x), "axpy");
  return emit(Op::Axpy, len(x), x, y, {}, 0, 0, c);
}
Tape::ValRef Tape::scalar_mul(ValRef s, ValRef x) {
  check_len(s, 1, "scalar_mul");
  return emit(Op::ScalarMul, len(x), s, x);
}
Tape::ValRef Tape::recip(ValRef s) {
  check_len(s, 1, "recip");
  return emit(Op::Recip, 1, s);
}
Tape::ValRef Tape::tanh_(ValRef a) { return emit(Op::Tanh, len(a), a); }
Tape::ValRef Tape::one_minus_sq(ValRef a) {
  return emit(Op::OneMinusSq, len(a), a);
}
Tape::ValRef Tape::hadamard(ValRef a, ValRef b) {
  check_len(b, len(a), "hadamard");
  return emit(Op::Hadamard, len(a), a, b);
}
Tape::ValRef Tape::dot(ValRef a, ValRef b) {
  check_len(b, len(a), "dot");
  return emit(Op::Dot, 1, a, b);
}
Tape::ValRef Tape::sum_sq(ValRef a) { return emit(Op::SumSq, 1, a); }
Tape::ValRef Tape::cross(ValRef a, ValRef b) {
  check_len(a, 3, "cross");
  check_len(b, 3, "cross");
  return emit(Op::Cross, 3, a, b);
}
Tape::ValRef Tape::slice(ValRef a, int from, int n) {
  if (from < 0 || from + n > len(a)) throw InvalidInput("slice out of range");
  return emit(Op::Slice, n, a, {}, {}, from);
}
Tape::ValRef Tape::concat(ValRef a, ValRef b) {
  return emit(Op::Concat2, len(a) + len(b), a, b, {}, len(a));
}

Tape::ValRef Tape::affine(ValRef W, ValRef b, ValRef x, int out_dim,
                          int in_dim) {
  check_len(W, out_dim * in_dim, "affine");
  check_len(b, out_dim, "affine");
  check_len(x, in_dim, "affine");
  return emit(Op::Affine, out_dim, W, b, x, out_dim, in_dim);
}
Tape::ValRef Tape::affine_t(ValRef W, ValRef g, int out_dim, int in_dim) {
  check_len(W, out_dim * in_dim, "affine_t");
  check_len(g, out_dim, "affine_t");
  return emit(Op::AffineT, in_dim, W, g, {}, out_dim, in_dim);
}

Tape::ValRef Tape::matmul(ValRef A, ValRef B) {
  check_len(A, 9, "matmul");
  check_len(B, 9, "matmul");
  return emit(Op::MatMul, 9, A, B);
}
Tape::ValRef Tape::matmul_tn(ValRef A, ValRef B) {
  check_len(A, 9, "matmul_tn");
  check_len(B, 9, "matmul_tn");
  return emit(Op::MatMulTN, 9, A, B);
}
Tape::ValRef Tape::matmul_nt(ValRef A, ValRef B) {
  check_len(A, 9, "matmul_nt");
  check_len(B, 9, "matmul_nt");
  return emit(Op::MatMulNT, 9, A, B);
}
Tape::ValRef Tape::transpose3(ValRef A) {
  check_len(A, 9, "transpose3");
  return emit(Op::Transpose3, 9, A);
}
Tape::ValRef Tape::matvec(ValRef M, ValRef x) {
  check_len(M, 9, "matvec");
  check_len(x, 3, "matvec");
  return emit(Op::MatVec3, 3, M, x);
}
Tape::ValRef Tape::matvec_t(ValRef M, ValRef x) {
  check_len(M, 9, "matvec_t");
  check_len(x, 3, "matvec_t");
  return emit(Op::MatTVec3, 3, M, x);
}
Tape::ValRef Tape::hat3(ValRef v) {
  check_len(v, 3, "hat3");
  return emit(Op::Hat3, 9, v);
}
Tape::ValRef Tape::vee3(ValRef M) {
  check_len(M, 9, "vee3");
  return emit(Op::Vee3, 3, M);
}
Tape::ValRef Tape::trace3(ValRef M) {
  check_len(M, 9, "trace3");
  return emit(Op::Trace3, 1, M);
}
Tape::ValRef Tape::outer3(ValRef a, ValRef b) {
  check_len(a, 3, "outer3");
  check_len(b, 3, "outer3");
  return emit(Op::Outer3, 9, a, b);
}
Tape::ValRef Tape::tri_factor(ValRef l6) {
  check_len(l6, 6, "tri_factor");
  return emit(Op::TriFactor, 9, l6);
}
Tape::ValRef Tape::solve3(ValRef A, ValRef b) {
  check_len(A, 9, "solve3");
  check_len(b, 3, "solve3");
  return emit(Op::Solve3, 3, A, b);
}
Tape::ValRef Tape::log_so3_(ValRef R) {
  check_len(R, 9, "log_so3");
  return emit(Op::LogSO3, 3, R);
}

int Tape::len(ValRef r) const {
  if (!r.valid() || r.id >= static_cast<int>(vals_.size()))
    throw InvalidInput("dangling value reference");
  return vals_[r.id].len;
}

void Tape::set_input(ValRef slot, const double* data, int n) {
  check_len(slot, n, "set_input");
  if (vals_[slot.id].kind != Kind::Input)
    throw InvalidInput("set_input target is not an input slot");
  std::memcpy(arena_.data() + vals_[slot.id].offset, data, n * sizeof(double));
}

const double* Tape::value(ValRef r) const {
  return arena_.data() + vals_[r.id].offset;
}

double Tape::scalar(ValRef r) const {
  check_len(r, 1, "scalar");
  return arena_[vals_[r.id].offset];
}

void Tape::execute(const double* vars) {
  double* A = arena_.data();
  for (int id : var_leaves_) {
    const Value& v = vals_[id];
    std::memcpy(A + v.offset, vars + v.var_offset, v.len * sizeof(double));
  }
  for (const Node& n : nodes_) {
    const Value& vo = vals_[n.out];
    double* out = A + vo.offset;
    const double* a = n.a >= 0 ? A + vals_[n.a].offset : nullptr;
    const double* b = n.b >= 0 ? A + vals_[n.b].offset : nullptr;
    const double* c = n.c >= 0 ? A + vals_[n.c].offset : nullptr;
    const int la = n.a >= 0 ? vals_[n.a].len : 0;
    switch (n.op) {
      case Op::Add:
        for (int i = 0; i < vo.len; ++i) out[i] = a[i] + b[i];
        break;
      case Op::Sub:
        for (int i = 0; i < vo.len; ++i) out[i] = a[i] - b[i];
        break;
      case Op::Neg:
        for (int i = 0; i < vo.len; ++i) out[i] = -a[i];
        break;
      case Op::ScaleC:
        for (int i = 0; i < vo.len; ++i) out[i] = n.s * a[i];
        break;
      case Op::Axpy:
        for (int i = 0; i < vo.len; ++i) out[i] = a[i] + n.s * b[i];
        break;
      case Op::ScalarMul:
        for (int i = 0; i < vo.len; ++i) out[i] = a[0] * b[i];
        break;
      case Op::Recip:
        out[0] = 1.0 / a[0];
        break;
      case Op::Tanh:
        for (int i = 0; i < vo.len; ++i) out[i] = std::tanh(a[i]);
        break;
      case Op::OneMinusSq:
        for (int i = 0; i < vo.len; ++i) out[i] = 1.0 - a[i] * a[i];
        break;
      case Op::Hadamard:
        for (int i = 0; i < vo.len; ++i) out[i] = a[i] * b[i];
        break;
      case Op::Dot: {
        double s = 0.0;
        for (int i = 0; i < la; ++i) s += a[i] * b[i];
        out[0] = s;
        break;
      }
      case Op::SumSq: {
        double s = 0.0;
        for (int i = 0; i < la; ++i) s += a[i] * a[i];
        out[0] = s;
        break;
      }
      case Op::Cross:
        out[0] = a[1] * b[2] - a[2] * b[1];
        out[1] = a[2] * b[0] - a[0] * b[2];
        out[2] = a[0] * b[1] - a[1] * b[0];
        break;
      case Op::Slice:
        std::memcpy(out, a + n.i0, vo.len * sizeof(double));
        break;
      case Op::Concat2:
        std::memcpy(out, a, n.i0 * sizeof(double));
        std::memcpy(out + n.i0, b, (vo.len - n.i0) * sizeof(double));
        break;
      case Op::Affine: {
        CRowMat W(a, n.i0, n.i1);
        CVecX bias(b, n.i0), x(c, n.i1);
        MVecX(out, n.i0) = W * x + bias;
        break;
      }
      case Op::AffineT: {
        CRowMat W(a, n.i0, n.i1);
        CVecX g(b, n.i0);
        MVecX(out, n.i1) = W.transpose() * g;
        break;
      }
      case Op::MatMul: {
        MMat3 o(out);
        o = CMat3(a) * CMat3(b);
        break;
      }
      case Op::MatMulTN: {
        MMat3 o(out);
        o = CMat3(a).transpose() * CMat3(b);
        break;
      }
      case Op::MatMulNT: {
        MMat3 o(out);
        o = CMat3(a) * CMat3(b).transpose();
        break;
      }
      case Op::Transpose3: {
        MMat3 o(out);
        o = CMat3(a).transpose();
        break;
      }
      case Op::MatVec3: {
        MVec3m o(out);
        o = CMat3(a) * CVec3m(b);
        break;
      }
      case Op::MatTVec3: {
        MVec3m o(out);
        o = CMat3(a).transpose() * CVec3m(b);
        break;
      }
      case Op::Hat3:
        out[0] = 0.0;     out[1] = -a[2];  out[2] = a[1];
        out[3] = a[2];    out[4] = 0.0;    out[5] = -a[0];
        out[6] = -a[1];   out[7] = a[0];   out[8] = 0.0;
        break;
      case Op::Vee3:
        out[0] = 0.5 * (a[7] - a[5]);
        out[1] = 0.5 * (a[2] - a[6]);
        out[2] = 0.5 * (a[3] - a[1]);
        break;
      case Op::Trace3:
        out[0] = a[0] + a[4] + a[8];
        break;
      case Op::Outer3:
        for (int r = 0; r < 3; ++r)
          for (int col = 0; col < 3; ++col) out[3 * r + col] = a[r] * b[col];
        break;
      case Op::TriFactor:
        out[0] = a[0]; out[1] = 0.0;  out[2] = 0.0;
        out[3] = a[1]; out[4] = a[2]; out[5] = 0.0;
        out[6] = a[3]; out[7] = a[4]; out[8] = a[5];
        break;
      case Op::Solve3: {
        const Eigen::Matrix3d M = CMat3(a);
        MVec3m o(out);
        o = M.partialPivLu().solve(Eigen::Vector3d(CVec3m(b)));
        break;
      }
      case Op::LogSO3: {
        const double tr = a[0] + a[4] + a[8];
        const double x = std::clamp(0.5 * (tr - 1.0), -1.0, 1.0);
        double theta = std::acos(x);
        const double u0 = a[7] - a[5], u1 = a[2] - a[6], u2 = a[3] - a[1];
        double coef;
        if (theta < 1e-4) {
          const double t2 = theta * theta;
          coef = 0.5 * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0);
        } else {
          if (theta > kLogClamp) theta = kLogClamp;
          coef = theta / (2.0 * std::sin(theta));
        }
        out[0] = coef * u0;
        out[1] = coef * u1;
        out[2] = coef * u2;
        break;
      }
    }
  }
}

void Tape::backward(ValRef root, double* var_grads) {
  check_len(root, 1, "backward");
  grad_.assign(arena_.size(), 0.0);
  grad_[vals_[root.id].offset] = 1.0;
  double* A = arena_.data();
  double* G = grad_.data();
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    const Node& n = *it;
    const Value& vo = vals_[n.out];
    const double* out = A + vo.offset;
    const double* go = G + vo.offset;
    const double* a = n.a >= 0 ? A + vals_[n.a].offset : nullptr;
    const double* b = n.b >= 0 ? A + vals_[n.b].offset : nullptr;
    double* ga = n.a >= 0 ? G + vals_[n.a].offset : nullptr;
    double* gb = n.b >= 0 ? G + vals_[n.b].offset : nullptr;
    double* gc = n.c >= 0 ? G + vals_[n.c].offset : nullptr;
    const int la = n.a >= 0 ? vals_[n.a].len : 0;
    switch (n.op) {
      case Op::Add:
        for (int i = 0; i < vo.len; ++i) {
          ga[i] += go[i];
          gb[i] += go[i];
        }
        break;
      case Op::Sub:
        for (int i = 0; i < vo.len; ++i) {
          ga[i] += go[i];
          gb[i] -= go[i];
        }
        break;
      case Op::Neg:
        for (int i = 0; i < vo.len; ++i) ga[i] -= go[i];
        break;
      case Op::ScaleC:
        for (int i = 0; i < vo.len; ++i) ga[i] += n.s * go[i];
        break;
      case Op::Axpy:
        for (int i = 0; i < vo.len; ++i) {
          ga[i] += go[i];
          gb[i] += n.s * go[i];
        }
        break;
      case Op::ScalarMul: {
        double s = 0.0;
        for (int i = 0; i < vo.len; ++i) {
          s += b[i] * go[i];
          gb[i] += a[0] * go[i];
        }
        ga[0] += s;
        break;
      }
      case Op::Recip:
        ga[0] -= go[0] * out[0] * out[0];
        break;
      case Op::Tanh:
        for (int i = 0; i < vo.len; ++i)
          ga[i] += (1.0 - out[i] * out[i]) * go[i];
        break;
      case Op::OneMinusSq:
        for (int i = 0; i < vo.len; ++i) ga[i] -= 2.0 * a[i] * go[i];
        break;
      case Op::Hadamard:
        for (int i = 0; i < vo.len; ++i) {
          ga[i] += b[i] * go[i];
          gb[i] += a[i] * go[i];
        }
        break;
      case Op::Dot:
        for (int i = 0; i < la; ++i) {
          ga[i] += b[i] * go[0];
          gb[i] += a[i] * go[0];
        }
        break;
      case Op::SumSq:
        for (int i = 0; i < la; ++i) ga[i] += 2.0 * a[i] * go[0];
        break;
      case Op::Cross:
        // d(a x b) in adjoint form: ga += b x go, gb += go x a.
        ga[0] += b[1] * go[2] - b[2] * go[1];
        ga[1] += b[2] * go[0] - b[0] * go[2];
        ga[2] += b[0] * go[1] - b[1] * go[0];
        gb[0] += go[1] * a[2] - go[2] * a[1];
        gb[1] += go[2] * a[0] - go[0] * a[2];
        gb[2] += go[0] * a[1] - go[1] * a[0];
        break;
      case Op::Slice:
        for (int i = 0; i < vo.len; ++i) ga[n.i0 + i] += go[i];
        break;
      case Op::Concat2:
        for (int i = 0; i < n.i0; ++i) ga[i] += go[i];
        for (int i = n.i0; i < vo.len; ++i) gb[i - n.i0] += go[i];
        break;
      case Op::Affine: {
        const double* x = A + vals_[n.c].offset;
        CRowMat W(a, n.i0, n.i1);
        CVecX gov(go, n.i0);
        MRowMat gW(ga, n.i0, n.i1);
        gW.noalias() += gov * CVecX(x, n.i1).transpose();
        MVecX(gb, n.i0) += gov;
        MVecX(gc, n.i1).noalias() += W.transpose() * gov;
        break;
      }
      case Op::AffineT: {
        CRowMat W(a, n.i0, n.i1);
        CVecX gvec(b, n.i0), gov(go, n.i1);
        MRowMat gW(ga, n.i0, n.i1);
        gW.noalias() += gvec * gov.transpose();
        MVecX(gb, n.i0).noalias() += W * gov;
        break;
      }
      case Op::MatMul:
        MMat3(ga).noalias() += CMat3(go) * CMat3(b).transpose();
        MMat3(gb).noalias() += CMat3(a).transpose() * CMat3(go);
        break;
      case Op::MatMulTN:
        MMat3(ga).noalias() += CMat3(b) * CMat3(go).transpose();
        MMat3(gb).noalias() += CMat3(a) * CMat3(go);
        break;
      case Op::MatMulNT:
        MMat3(ga).noalias() += CMat3(go) * CMat3(b);
        MMat3(gb).noalias() += CMat3(go).transpose() * CMat3(a);
        break;
      case Op::Transpose3:
        MMat3(ga) += CMat3(go).transpose();
        break;
      case Op::MatVec3:
        MMat3(ga).noalias() += CVec3m(go) * CVec3m(b).transpose();
        MVec3m(gb).noalias() += CMat3(a).transpose() * CVec3m(go);
        break;
      case Op::MatTVec3:
        MMat3(ga).noalias() += CVec3m(b) * CVec3m(go).transpose();
        MVec3m(gb).noalias() += CMat3(a) * CVec3m(go);
        break;
      case Op::Hat3:
        ga[0] += go[7] - go[5];
        ga[1] += go[2] - go[6];
        ga[2] += go[3] - go[1];
        break;
      case Op::Vee3:
        ga[7] += 0.5 * go[0];
        ga[5] -= 0.5 * go[0];
        ga[2] += 0.5 * go[1];
        ga[6] -= 0.5 * go[1];
        ga[3] += 0.5 * go[2];
        ga[1] -= 0.5 * go[2];
        break;
      case Op::Trace3:
        ga[0] += go[0];
        ga[4] += go[0];
        ga[8] += go[0];
        break;
      case Op::Outer3:
        for (int r = 0; r < 3; ++r)
          for (int col = 0; col < 3; ++col) {
            ga[r] += go[3 * r + col] * b[col];
            gb[col] += go[3 * r + col] * a[r];
          }
        break;
      case Op::TriFactor:
        ga[0] += go[0];
        ga[1] += go[3];
        ga[2] += go[4];
        ga[3] += go[6];
        ga[4] += go[7];
        ga[5] += go[8];
        break;
      case Op::Solve3: {
        // x = A^-1 b: gb += A^-T go, gA -= (A^-T go) x'.
        Eigen::Matrix3d At = CMat3(a).transpose();
        const Eigen::Vector3d lambda =
            At.partialPivLu().solve(Eigen::Vector3d(CVec3m(go)));
        MVec3m(gb) += lambda;
        MMat3(ga).noalias() -= lambda * CVec3m(out).transpose();
        break;
      }
      case Op::LogSO3: {
        const double tr = a[0] + a[4] + a[8];
        const double x = std::clamp(0.5 * (tr - 1.0), -1.0, 1.0);
        double theta = std::acos(x);
        const double u0 = a[7] - a[5], u1 = a[2] - a[6], u2 = a[3] - a[1];
        double coef, dcoef_dtr;
        if (theta < 1e-4) {
          const double t2 = theta * theta;
          coef = 0.5 * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0);
          dcoef_dtr = -1.0 / 12.0 - t2 / 30.0;
        } else if (theta > kLogClamp) {
          coef = kLogClamp / (2.0 * std::sin(kLogClamp));
          dcoef_dtr = 0.0;  // frozen by the clamp
        } else {
          const double sn = std::sin(theta), cs = std::cos(theta);
          coef = theta / (2.0 * sn);
          dcoef_dtr = -(sn - theta * cs) / (4.0 * sn * sn * sn);
        }
        ga[7] += coef * go[0];
        ga[5] -= coef * go[0];
        ga[2] += coef * go[1];
        ga[6] -= coef * go[1];
        ga[3] += coef * go[2];
        ga[1] -= coef * go[2];
        const double gtr = dcoef_dtr * (u0 * go[0] + u1 * go[1] + u2 * go[2]);
        ga[0] += gtr;
        ga[4] += gtr;
        ga[8] += gtr;
        break;
      }
    }
  }
  for (int id : var_leaves_) {
    const Value& v = vals_[id];
    for (int i = 0; i < v.len; ++i)
      var_grads[v.var_offset + i] += grad_[v.offset + i];
  }
}

AdamState::AdamState(int n, double lr)
    : lr0(lr), m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}

double AdamState::current_lr() const {
  if (decay_every <= 0) return lr0;
  const long k = t / decay_every;
  return lr0 * std::pow(decay_factor, static_cast<double>(k));
}

void AdamState::step(std::vector<double>& params,
                     const std::vector<double>& grads) {
  if (static_cast<int>(params.size()) != m.size() ||
      params.size() != grads.size())
    throw InvalidInput("adam: size mismatch");
  const double lr = current_lr();
  t += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (int i = 0; i < m.size(); ++i) {
    const double g = grads[i];
    if (!std::isfinite(g)) throw NonFiniteValue("adam: non-finite gradient");
    m[i] = beta1 * m[i] + (1.0 - beta1) * g;
    v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
    params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
  }
}

void adam_step(AdamState& state, std::vector<double>& params,
               const std::vector<double>& grads) {
  state.step(params, grads);
}

}  // namespace fvin
