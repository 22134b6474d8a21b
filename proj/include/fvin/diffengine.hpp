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
#include <initializer_list>
#include <vector>

#include <Eigen/Dense>

#include "fvin/errors.hpp"

namespace fvin {

// Reverse-mode engine over block operations. A Tape is built once for a fixed
// computation shape, then re-executed many times with different variable and
// input bindings; values live in a flat arena and nodes are stored in issue
// order, so one backward sweep visits them reversed. All kernels are
// sequential and branch-free per shape, which keeps repeated runs bit-identical.
class Tape {
 public:
  struct ValRef {
    int id;
    ValRef() : id(-1) {}
    explicit ValRef(int id) : id(id) {}
    bool valid() const { return id >= 0; }
  };

  Tape() = default;

  // Leaves. var() views a slice of the external variable vector (bound at
  // execute()); input() is a data slot filled via set_input(); constants are
  // baked at build time.
  ValRef var(int var_offset, int len);
  ValRef input(int len);
  ValRef constant(const double* data, int len);
  ValRef constant(std::initializer_list<double> data);
  ValRef constant_scalar(double v);

  // Elementwise and vector ops.
  ValRef add(ValRef a, ValRef b);
  ValRef sub(ValRef a, ValRef b);
  ValRef neg(ValRef a);
  ValRef scale(ValRef a, double c);
  ValRef axpy(double c, ValRef y, ValRef x);  // x + c*y
  ValRef scalar_mul(ValRef s, ValRef x);      // s is length 1
  ValRef recip(ValRef s);
  ValRef tanh_(ValRef a);
  ValRef one_minus_sq(ValRef a);
  ValRef hadamard(ValRef a, ValRef b);
  ValRef dot(ValRef a, ValRef b);
  ValRef sum_sq(ValRef a);
  ValRef cross(ValRef a, ValRef b);
  ValRef slice(ValRef a, int from, int len);
  ValRef concat(ValRef a, ValRef b);

  // Dense layers. W is out_dim x in_dim row-major.
  ValRef affine(ValRef W, ValRef b, ValRef x, int out_dim, int in_dim);
  ValRef affine_t(ValRef W, ValRef g, int out_dim, int in_dim);  // W'g

  // 3x3 matrix ops; matrices are 9 doubles row-major.
  ValRef matmul(ValRef A, ValRef B);
  ValRef matmul_tn(ValRef A, ValRef B);  // A'B
  ValRef matmul_nt(ValRef A, ValRef B);  // AB'
  ValRef transpose3(ValRef A);
  ValRef matvec(ValRef M, ValRef x);
  ValRef matvec_t(ValRef M, ValRef x);  // M'x
  ValRef hat3(ValRef v);
  ValRef vee3(ValRef M);  // averaged skew extraction, no validation
  ValRef trace3(ValRef M);
  ValRef outer3(ValRef a, ValRef b);
  ValRef tri_factor(ValRef l6);       // packed lower triangle to 3x3
  ValRef solve3(ValRef A, ValRef b);  // A^-1 b via partial-pivot LU
  // Principal rotation log; the angle is clamped to pi - 1e-6 so downstream
  // zero weights cannot meet NaN from an exactly flipped sample.
  ValRef log_so3_(ValRef R);

  int len(ValRef r) const;
  int node_count() const { return static_cast<int>(nodes_.size()); }
  int var_span() const { return var_span_; }

  // Execution. set_input survives across execute() calls.
  void set_input(ValRef slot, const double* data, int n);
  void execute(const double* vars);
  const double* value(ValRef r) const;
  double scalar(ValRef r) const;
  // Accumulates d(root)/d(vars) into var_grads (not zeroed here). Requires a
  // preceding execute() with the same vars.
  void backward(ValRef root, double* var_grads);

 private:
  enum class Op : std::uint8_t {
    Add, Sub, Neg, ScaleC, Axpy, ScalarMul, Recip, Tanh, OneMinusSq,
    Hadamard, Dot, SumSq, Cross, Slice, Concat2, Affine, AffineT,
    MatMul, MatMulTN, MatMulNT, Transpose3, MatVec3, MatTVec3,
    Hat3, Vee3, Trace3, Outer3, TriFactor, Solve3, LogSO3,
  };
  enum class Kind : std::uint8_t { Const, Var, Input, Computed };

  struct Value {
    int offset;
    int len;
    Kind kind;
    int var_offset;  // for Var leaves
  };
  struct Node {
    Op op;
    int a = -1, b = -1, c = -1;
    int out = -1;
    int i0 = 0, i1 = 0;
    double s = 0.0;
  };

  ValRef alloc(int n, Kind kind, int var_offset = -1);
  ValRef emit(Op op, int out_len, ValRef a, ValRef b = ValRef(),
              ValRef c = ValRef(), int i0 = 0, int i1 = 0, double s = 0.0);
  void check_len(ValRef r, int n, const char* who) const;

  std::vector<Value> vals_;
  std::vector<Node> nodes_;
  std::vector<double> arena_;
  std::vector<double> grad_;
  std::vector<int> var_leaves_;
  int var_span_ = 0;
};

// Adam with optional staircase decay: lr is multiplied by decay_factor after
// every decay_every steps (0 disables).
struct AdamState {
  AdamState(int n, double lr);
  double lr0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  int decay_every = 0;
  double decay_factor = 0.5;
  long t = 0;
  Eigen::VectorXd m, v;

  double current_lr() const;  // lr applied on the next step
  void step(std::vector<double>& params, const std::vector<double>& grads);
};

void adam_step(AdamState& state, std::vector<double>& params,
               const std::vector<double>& grads);

}  // namespace fvin
