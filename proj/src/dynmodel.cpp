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

#include "fvin/dynmodel.hpp"

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

namespace fvin {

using Eigen::VectorXd;
using nlohmann::json;

int MLPSpec::param_count() const {
  int n = 0;
  for (size_t l = 0; l + 1 < dims.size(); ++l)
    n += dims[l + 1] * dims[l] + dims[l + 1];
  return n;
}

VectorXd mlp_forward(const MLPSpec& spec, const double* params,
                     const VectorXd& input) {
  VectorXd h = input;
  const double* p = params;
  for (size_t l = 0; l + 1 < spec.dims.size(); ++l) {
    const int nin = spec.dims[l], nout = spec.dims[l + 1];
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
        W(p, nout, nin);
    Eigen::Map<const VectorXd> b(p + nout * nin, nout);
    h = W * h + b;
    if (spec.acts[l] == Activation::Tanh) h = h.array().tanh().matrix();
    p += nout * nin + nout;
  }
  return h;
}

MLPScalarEval mlp_scalar_with_input_grad(const MLPSpec& spec,
                                         const double* params,
                                         const VectorXd& input) {
  const size_t L = spec.dims.size() - 1;
  std::vector<VectorXd> post(L + 1);
  std::vector<const double*> lp(L);
  post[0] = input;
  const double* p = params;
  for (size_t l = 0; l < L; ++l) {
    const int nin = spec.dims[l], nout = spec.dims[l + 1];
    lp[l] = p;
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
        W(p, nout, nin);
    Eigen::Map<const VectorXd> b(p + nout * nin, nout);
    post[l + 1] = W * post[l] + b;
    if (spec.acts[l] == Activation::Tanh)
      post[l + 1] = post[l + 1].array().tanh().matrix();
    p += nout * nin + nout;
  }
  VectorXd g = VectorXd::Ones(1);
  for (size_t l = L; l-- > 0;) {
    const int nin = spec.dims[l], nout = spec.dims[l + 1];
    if (spec.acts[l] == Activation::Tanh)
      g = (g.array() * (1.0 - post[l + 1].array().square())).matrix();
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
        W(lp[l], nout, nin);
    g = W.transpose() * g;
  }
  return MLPScalarEval{post[L][0], g};
}

std::string to_string(ForceConvention c) {
  return c == ForceConvention::PendulumSO3 ? "pendulum-so3" : "quadrotor-se3";
}

static ForceConvention convention_from_string(const std::string& s) {
  if (s == "pendulum-so3") return ForceConvention::PendulumSO3;
  if (s == "quadrotor-se3") return ForceConvention::QuadrotorSE3;
  throw InvalidInput("unknown force convention: " + s);
}

int q_input_dim(ForceConvention c) {
  return c == ForceConvention::PendulumSO3 ? 9 : 12;
}

VectorXd flatten_q(ForceConvention c, const Vec3& x, const Rotation& R) {
  VectorXd q(q_input_dim(c));
  int at = 0;
  if (c == ForceConvention::QuadrotorSE3) {
    q.head<3>() = x;
    at = 3;
  }
  const Mat3& m = R.matrix();
  for (int r = 0; r < 3; ++r)
    for (int col = 0; col < 3; ++col) q[at++] = m(r, col);
  return q;
}

Mat3 inertia_from_factor(const double* l6, double eps) {
  Mat3 L = Mat3::Zero();
  L(0, 0) = l6[0];
  L(1, 0) = l6[1];
  L(1, 1) = l6[2];
  L(2, 0) = l6[3];
  L(2, 1) = l6[4];
  L(2, 2) = l6[5];
  return L * L.transpose() + eps * Mat3::Identity();
}

int DynamicsModel::inertia_param_count() const {
  return inertia_is_net() ? inertia_net_.spec.param_count() : 6;
}

int DynamicsModel::control_dim() const {
  return convention_ == ForceConvention::PendulumSO3 ? 1 : 4;
}

static MLPSpec make_spec(std::vector<int> dims, std::vector<Activation> acts) {
  return MLPSpec{std::move(dims), std::move(acts)};
}

DynamicsModel DynamicsModel::pendulum_so3(std::uint64_t seed) {
  DynamicsModel m;
  m.convention_ = ForceConvention::PendulumSO3;
  const auto acts = std::vector<Activation>{Activation::Tanh, Activation::Tanh,
                                            Activation::Identity,
                                            Activation::Identity};
  m.inertia_net_.spec = make_spec({9, 10, 10, 10, 6}, acts);
  m.potential_net_.spec = make_spec({9, 10, 10, 10, 1}, acts);
  m.gains_net_.spec = make_spec({9, 10, 10, 10, 3}, acts);
  m.inertia_offset_ = 0;
  m.inertia_net_.offset = 0;
  m.potential_net_.offset = m.inertia_net_.spec.param_count();
  m.gains_net_.offset =
      m.potential_net_.offset + m.potential_net_.spec.param_count();
  m.init_params(seed, 1.0);
  // Bias the factor output toward the unit trace isotropic inertia. With
  // zero biases the random net emits a tiny factor, L L^T sits below the
  // positivity floor, and training drags the potential and gain scales down
  // with it; the floor term then distorts the learnt flow.
  double* ob = m.params_.data() + m.inertia_net_.offset +
               m.inertia_net_.spec.param_count() - 6;
  const double d = 1.0 / std::sqrt(3.0);
  ob[0] += d;
  ob[2] += d;
  ob[5] += d;
  return m;
}

DynamicsModel DynamicsModel::quadrotor_se3(std::uint64_t seed) {
  DynamicsModel m;
  m.convention_ = ForceConvention::QuadrotorSE3;
  const auto acts = std::vector<Activation>{
      Activation::Tanh, Activation::Tanh, Activation::Tanh,
      Activation::Identity, Activation::Identity};
  m.potential_net_.spec = make_spec({12, 10, 10, 10, 10, 1}, acts);
  m.gains_net_.spec = make_spec({12, 10, 10, 10, 10, 24}, acts);
  m.mass_offset_ = 0;
  m.inertia_offset_ = 1;
  m.potential_net_.offset = 7;
  m.gains_net_.offset =
      m.potential_net_.offset + m.potential_net_.spec.param_count();
  m.init_params(seed, 1.0);
  return m;
}

DynamicsModel DynamicsModel::custom(ForceConvention c, int width, int depth,
                                    std::uint64_t seed, double init_scale) {
  DynamicsModel m;
  m.convention_ = c;
  const int in = q_input_dim(c);
  std::vector<int> base{in};
  std::vector<Activation> acts;
  for (int d = 0; d < depth; ++d) {
    base.push_back(width);
    acts.push_back(d < depth - 1 ? Activation::Tanh : Activation::Identity);
  }
  acts.push_back(Activation::Identity);
  auto with_out = [&](int out) {
    auto dims = base;
    dims.push_back(out);
    return make_spec(dims, acts);
  };
  m.potential_net_.spec = with_out(1);
  if (c == ForceConvention::PendulumSO3) {
    m.inertia_net_.spec = with_out(6);
    m.gains_net_.spec = with_out(3);
    m.inertia_offset_ = 0;
    m.inertia_net_.offset = 0;
    m.potential_net_.offset = m.inertia_net_.spec.param_count();
  } else {
    m.gains_net_.spec = with_out(24);
    m.mass_offset_ = 0;
    m.inertia_offset_ = 1;
    m.potential_net_.offset = 7;
  }
  m.gains_net_.offset =
      m.potential_net_.offset + m.potential_net_.spec.param_count();
  m.init_params(seed, init_scale);
  return m;
}

void DynamicsModel::init_params(std::uint64_t seed, double init_scale) {
  seed_ = seed;
  int total = potential_net_.spec.param_count() + gains_net_.spec.param_count();
  total += inertia_is_net() ? inertia_net_.spec.param_count() : 7;
  params_.assign(total, 0.0);

  std::mt19937_64 rng(seed);
  auto fill_net = [&](const MLPLayout& net) {
    double* p = params_.data() + net.offset;
    for (size_t l = 0; l + 1 < net.spec.dims.size(); ++l) {
      const int nin = net.spec.dims[l], nout = net.spec.dims[l + 1];
      const double bound = init_scale / std::sqrt(static_cast<double>(nin));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (int i = 0; i < nout * nin; ++i) *p++ = dist(rng);
      p += nout;  // biases stay zero
    }
  };
  if (inertia_is_net()) {
    fill_net(inertia_net_);
  } else {
    params_[mass_offset_] = 1.0;  // r, mass = r^2
    params_[inertia_offset_ + 0] = 1.0;
    params_[inertia_offset_ + 2] = 1.0;
    params_[inertia_offset_ + 5] = 1.0;
  }
  fill_net(potential_net_);
  fill_net(gains_net_);
}

double DynamicsModel::mass() const {
  if (mass_offset_ < 0) return 1.0;
  const double r = params_[mass_offset_];
  return r * r;
}

Mat3 DynamicsModel::inertia_at(const Vec3& x, const Rotation& R) const {
  if (inertia_is_net()) {
    const VectorXd q = flatten_q(convention_, x, R);
    const VectorXd l6 =
        mlp_forward(inertia_net_.spec, params_.data() + inertia_net_.offset, q);
    return inertia_from_factor(l6.data(), epsilon_);
  }
  return inertia_from_factor(params_.data() + inertia_offset_, epsilon_);
}

PotentialEval DynamicsModel::potential_at(const Vec3& x,
                                          const Rotation& R) const {
  const VectorXd q = flatten_q(convention_, x, R);
  const MLPScalarEval ev = mlp_scalar_with_input_grad(
      potential_net_.spec, params_.data() + potential_net_.offset, q);
  PotentialEval out;
  out.U = ev.value;
  int at = 0;
  if (convention_ == ForceConvention::QuadrotorSE3) {
    out.dU_dx = ev.input_grad.head<3>();
    at = 3;
  }
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out.dU_dR(r, c) = ev.input_grad[at++];
  return out;
}

DiscreteForces DynamicsModel::forces_at(const Vec3& x, const Rotation& R,
                                        const VectorXd& u) const {
  if (u.size() != control_dim())
    throw InvalidInput("control has wrong dimension");
  const VectorXd q = flatten_q(convention_, x, R);
  const VectorXd g =
      mlp_forward(gains_net_.spec, params_.data() + gains_net_.offset, q);
  DiscreteForces f;
  if (convention_ == ForceConvention::PendulumSO3) {
    f.fR_minus = Vec3(g[0], g[1], g[2]) * u[0];
  } else {
    Eigen::Map<const Eigen::Matrix<double, 6, 4, Eigen::RowMajor>> G(g.data());
    const Eigen::Matrix<double, 6, 1> F = G * u;
    f.fx_minus = f.fx_plus = 0.5 * F.head<3>();
    f.fR_minus = f.fR_plus = 0.5 * F.tail<3>();
  }
  return f;
}

ModelQueries DynamicsModel::queries() const {
  ModelQueries q;
  q.mass = [this] { return mass(); };
  q.inertia = [this](const Vec3& x, const Rotation& R) {
    return inertia_at(x, R);
  };
  q.potential = [this](const Vec3& x, const Rotation& R) {
    return potential_at(x, R);
  };
  q.forces = [this](const Vec3& x, const Rotation& R, const VectorXd& u) {
    return forces_at(x, R, u);
  };
  return q;
}

static json spec_to_json(const MLPSpec& s) {
  json acts = json::array();
  for (auto a : s.acts)
    acts.push_back(a == Activation::Tanh ? "tanh" : "identity");
  return json{{"dims", s.dims}, {"acts", acts}};
}

static MLPSpec spec_from_json(const json& j) {
  MLPSpec s;
  s.dims = j.at("dims").get<std::vector<int>>();
  for (const auto& a : j.at("acts")) {
    const std::string name = a.get<std::string>();
    if (name == "tanh")
      s.acts.push_back(Activation::Tanh);
    else if (name == "identity")
      s.acts.push_back(Activation::Identity);
    else
      throw InvalidInput("unknown activation: " + name);
  }
  if (s.acts.size() + 1 != s.dims.size())
    throw InvalidInput("activation list does not match layer count");
  return s;
}

json DynamicsModel::to_json() const {
  json nets;
  if (inertia_is_net())
    nets["inertia"] = spec_to_json(inertia_net_.spec);
  else
    nets["inertia"] = json{{"const_factor", true}};
  nets["potential"] = spec_to_json(potential_net_.spec);
  nets["gains"] = spec_to_json(gains_net_.spec);

  auto slice = [&](int off, int n) {
    return std::vector<double>(params_.begin() + off, params_.begin() + off + n);
  };
  json params;
  if (mass_offset_ >= 0) params["mass"] = slice(mass_offset_, 1);
  params["inertia"] = slice(inertia_offset_, inertia_param_count());
  params["potential"] =
      slice(potential_net_.offset, potential_net_.spec.param_count());
  params["gains"] = slice(gains_net_.offset, gains_net_.spec.param_count());

  return json{{"schema_version", 1},
              {"kind", "structured"},
              {"convention", to_string(convention_)},
              {"epsilon", epsilon_},
              {"seed", seed_},
              {"nets", nets},
              {"params", params}};
}

DynamicsModel DynamicsModel::from_json(const json& j) {
  if (j.at("schema_version").get<int>() != 1)
    throw InvalidInput("unsupported checkpoint schema version");
  if (j.at("kind").get<std::string>() != "structured")
    throw InvalidInput("checkpoint is not a structured dynamics model");
  DynamicsModel m;
  m.convention_ = convention_from_string(j.at("convention").get<std::string>());
  m.epsilon_ = j.at("epsilon").get<double>();
  m.seed_ = j.at("seed").get<std::uint64_t>();

  const json& nets = j.at("nets");
  m.potential_net_.spec = spec_from_json(nets.at("potential"));
  m.gains_net_.spec = spec_from_json(nets.at("gains"));
  int total;
  if (m.convention_ == ForceConvention::PendulumSO3) {
    m.inertia_net_.spec = spec_from_json(nets.at("inertia"));
    m.inertia_offset_ = m.inertia_net_.offset = 0;
    m.potential_net_.offset = m.inertia_net_.spec.param_count();
    m.gains_net_.offset =
        m.potential_net_.offset + m.potential_net_.spec.param_count();
    total = m.gains_net_.offset + m.gains_net_.spec.param_count();
  } else {
    m.mass_offset_ = 0;
    m.inertia_offset_ = 1;
    m.potential_net_.offset = 7;
    m.gains_net_.offset =
        m.potential_net_.offset + m.potential_net_.spec.param_count();
    total = m.gains_net_.offset + m.gains_net_.spec.param_count();
  }
  m.params_.assign(total, 0.0);

  auto load = [&](const char* key, int off, int n) {
    const auto v = j.at("params").at(key).get<std::vector<double>>();
    if (static_cast<int>(v.size()) != n)
      throw InvalidInput(std::string("parameter block '") + key +
                         "' has wrong length");
    std::copy(v.begin(), v.end(), m.params_.begin() + off);
  };
  if (m.mass_offset_ >= 0) load("mass", m.mass_offset_, 1);
  load("inertia", m.inertia_offset_, m.inertia_param_count());
  load("potential", m.potential_net_.offset,
       m.potential_net_.spec.param_count());
  load("gains", m.gains_net_.offset, m.gains_net_.spec.param_count());
  return m;
}

}  // namespace fvin
