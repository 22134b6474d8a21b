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
#include <cstdio>
#include <fstream>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fvin/dataio.hpp"
#include "fvin/envs.hpp"
#include "fvin/mpcctl.hpp"

namespace {

using namespace fvin;

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path);
  return out;
}

Rotation random_rotation(std::mt19937_64& rng, double max_angle) {
  std::normal_distribution<double> dn(0.0, 1.0);
  std::uniform_real_distribution<double> da(0.0, max_angle);
  Vec3 axis(dn(rng), dn(rng), dn(rng));
  while (axis.norm() < 1e-6) axis = Vec3(dn(rng), dn(rng), dn(rng));
  return exp_so3(da(rng) * axis.normalized());
}

Vec3 random_vec3(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> d(-scale, scale);
  return Vec3(d(rng), d(rng), d(rng));
}

Eigen::VectorXd random_vecxd(std::mt19937_64& rng, int n, double scale) {
  std::uniform_real_distribution<double> d(-scale, scale);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

// ---------------------------------------------------------------- gen-data

struct GenArgs {
  std::string system = "pendulum";
  std::string kind = "pv";
  std::string out;
  std::uint64_t seed = 0;
  int trajectories = -1;
  int steps = -1;
  double h = 0.02;
};

int run_gen_data(const GenArgs& a) {
  DataGenSpec spec;
  spec.h = a.h;
  spec.seed = a.seed;
  DatasetManifest man;
  man.system = a.system;
  man.seed = a.seed;
  man.h = a.h;
  long n = 0;
  if (a.system == "pendulum") {
    if (a.trajectories > 0) spec.trajectories = a.trajectories;
    if (a.steps > 0) spec.steps_per_traj = a.steps;
    man.u_dim = 1;
    if (a.kind == "pv") {
      auto data = generate_pendulum_dataset(spec);
      n = static_cast<long>(data.size());
      save_dataset(a.out, man, data);
    } else {
      auto data = generate_pendulum_dataset_p(spec);
      n = static_cast<long>(data.size());
      save_dataset(a.out, man, data);
    }
  } else if (a.system == "quadrotor") {
    if (a.trajectories > 0) spec.quad_trajectories = a.trajectories;
    if (a.steps > 0) spec.quad_steps = a.steps;
    man.u_dim = 4;
    if (a.kind == "pv") {
      auto data = generate_quadrotor_dataset(spec);
      n = static_cast<long>(data.size());
      save_dataset(a.out, man, data);
    } else {
      auto data = generate_quadrotor_dataset_p(spec);
      n = static_cast<long>(data.size());
      save_dataset(a.out, man, data);
    }
  } else {
    throw InvalidInput("unknown system " + a.system);
  }
  std::printf("wrote %ld %s transitions (%s) to %s\n", n, a.kind.c_str(),
              a.system.c_str(), a.out.c_str());
  return 0;
}

// ------------------------------------------------------------------ train

struct TrainArgs {
  std::string config, data, out, loss_csv, algorithm;
  long iterations = -1;
  long long seed = -1;
};

int run_train(const TrainArgs& a) {
  ExperimentConfig cfg =
      a.config.empty() ? ExperimentConfig{} : load_experiment_config(a.config);
  if (!a.algorithm.empty()) cfg.algorithm = a.algorithm;
  if (a.iterations >= 0) cfg.iterations = a.iterations;
  if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);

  const DatasetManifest man = read_manifest(a.data);
  if (man.system != cfg.system) {
    std::printf("note: dataset system %s overrides config %s\n",
                man.system.c_str(), cfg.system.c_str());
    cfg.system = man.system;
  }
  if (man.h != cfg.h) {
    std::printf("note: using the dataset step size h = %g\n", man.h);
    cfg.h = man.h;
  }

  const bool baseline = cfg.algorithm == "baseline";
  TrainConfig tc;
  if (baseline) {
    tc.h = cfg.h;
    tc.alpha = cfg.alpha;
    tc.iterations = cfg.iterations;
    tc.lr = cfg.lr;
    tc.lr_decay_every = cfg.lr_decay_every;
    tc.lr_decay_factor = cfg.lr_decay_factor;
    tc.log_every = cfg.log_every;
    tc.stop_below = cfg.stop_below;
  } else {
    tc = cfg.train_config();
  }
  const ForceConvention conv = cfg.system == "pendulum"
                                   ? ForceConvention::PendulumSO3
                                   : ForceConvention::QuadrotorSE3;

  TrainResult result;
  if (baseline) {
    std::vector<TransitionPV> data;
    load_dataset_pv(a.data, data);
    BaselineModel model = BaselineModel::make(conv, {64, 64, 64}, cfg.seed);
    std::printf("baseline: %zu params, %zu transitions, %ld iterations\n",
                model.params.size(), data.size(), tc.iterations);
    result = train_blackbox_baseline(model, data, tc);
    if (!a.out.empty()) save_model(a.out, model);
  } else {
    DynamicsModel model = conv == ForceConvention::PendulumSO3
                              ? DynamicsModel::pendulum_so3(cfg.seed)
                              : DynamicsModel::quadrotor_se3(cfg.seed);
    const Algorithm alg = tc.algorithm;
    std::printf("%s: %d params, %ld iterations\n", to_string(alg).c_str(),
                model.param_count(), tc.iterations);
    if (alg == Algorithm::IIa || alg == Algorithm::IIb) {
      std::vector<TransitionP> data;
      load_dataset_p(a.data, data);
      std::printf("loaded %zu pose triples\n", data.size());
      result = train(model, data, tc);
    } else {
      std::vector<TransitionPV> data;
      load_dataset_pv(a.data, data);
      std::printf("loaded %zu transitions\n", data.size());
      result = train(model, data, tc);
    }
    if (!a.out.empty()) save_model(a.out, model);
  }
  if (!a.loss_csv.empty()) write_loss_csv(a.loss_csv, result.log);
  std::printf("final loss %.6e after %ld iterations\n", result.final_loss,
              result.iterations_run);
  if (!a.out.empty()) std::printf("checkpoint written to %s\n", a.out.c_str());
  return 0;
}

// ------------------------------------------------------------------- eval

struct EvalArgs {
  std::string checkpoint;
  std::string mode = "energy";
  std::string out;
  int steps = 2000;
  double h = 0.02;
  double alpha = 0.5;
};

struct EvalSource {
  std::string system;
  bool structured = false;
  DynamicsModel model = DynamicsModel::pendulum_so3(0);
};

EvalSource resolve_source(const std::string& checkpoint) {
  EvalSource src;
  if (checkpoint == "truth:pendulum") {
    src.system = "pendulum";
  } else if (checkpoint == "truth:quadrotor") {
    src.system = "quadrotor";
  } else {
    if (model_kind(checkpoint) != "structured")
      throw InvalidInput("eval needs a structured checkpoint or truth:*");
    src.model = load_structured_model(checkpoint);
    src.structured = true;
    src.system = src.model.convention() == ForceConvention::PendulumSO3
                     ? "pendulum"
                     : "quadrotor";
  }
  return src;
}

int run_eval(const EvalArgs& a) {
  const EvalSource src = resolve_source(a.checkpoint);
  // Built after src rests at its final address; the structured queries hold a
  // pointer back into src.model.
  const ModelQueries queries =
      src.structured ? src.model.queries()
      : src.system == "pendulum"
          ? pendulum_truth_queries(PendulumTruth{}, a.h)
          : quad_truth_queries(QuadrotorTruth{}, a.h);
  const IntegratorParams p(a.h, a.alpha);
  const NewtonConfig newton;

  if (a.mode == "learned-quantities") {
    if (!src.structured || src.system != "pendulum")
      throw InvalidInput(
          "learned-quantities needs a structured pendulum checkpoint");
    const int grid = 65;
    std::vector<double> phis(grid), j33(grid), u_raw(grid), g_raw(grid);
    for (int i = 0; i < grid; ++i) {
      const double phi = -M_PI + 2.0 * M_PI * i / (grid - 1);
      const Rotation R = exp_so3(Vec3(0.0, 0.0, phi));
      phis[i] = phi;
      j33[i] = src.model.inertia_at(Vec3::Zero(), R)(2, 2);
      u_raw[i] = src.model.potential_at(Vec3::Zero(), R).U;
      g_raw[i] = src.model
                     .forces_at(Vec3::Zero(), R, Eigen::VectorXd::Constant(1, 1.0))
                     .fR_minus.z();
    }
    double j_mean = 0.0, u_mean = 0.0;
    for (int i = 0; i < grid; ++i) j_mean += j33[i] / grid;
    for (int i = 0; i < grid; ++i) u_mean += u_raw[i] / grid;
    const double lambda = j_mean / (1.0 / 3.0);
    double ut_mean = 0.0;
    std::vector<double> ut(grid);
    for (int i = 0; i < grid; ++i) {
      ut[i] = 5.0 * (1.0 - std::cos(phis[i]));
      ut_mean += ut[i] / grid;
    }
    double num = 0.0, den = 0.0, g_mean = 0.0;
    for (int i = 0; i < grid; ++i) {
      const double ug = (u_raw[i] - u_mean) / lambda;
      const double uc = ut[i] - ut_mean;
      num += (ug - uc) * (ug - uc);
      den += uc * uc;
      g_mean += g_raw[i] / (a.h * lambda) / grid;
    }
    const double rel_rmse = std::sqrt(num / den);
    std::printf("gauge lambda    %.6f\n", lambda);
    std::printf("U rel RMSE      %.4f (centered, gauge-normalized)\n", rel_rmse);
    std::printf("mean gain       %.4f (true 1.0)\n", g_mean);
    if (!a.out.empty()) {
      auto out = open_csv(a.out);
      out << "phi,J33,U_raw,U_centered_gauge,U_true_centered,gain_eff\n";
      char buf[256];
      for (int i = 0; i < grid; ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      phis[i], j33[i], u_raw[i], (u_raw[i] - u_mean) / lambda,
                      ut[i] - ut_mean, g_raw[i] / (a.h * lambda));
        out << buf;
      }
    }
    return 0;
  }

  if (a.mode != "energy" && a.mode != "constraint" && a.mode != "phase")
    throw InvalidInput("unknown eval mode " + a.mode);
  if (a.mode == "phase" && src.system != "pendulum")
    throw InvalidInput("phase eval only applies to the pendulum");

  std::ofstream out;
  const bool csv = !a.out.empty();
  if (csv) out = open_csv(a.out);
  char buf[256];
  double max_orth = 0.0;

  if (src.system == "pendulum") {
    if (csv) out << "step,time,phi,phid,energy,orth_error\n";
    const PendulumTruth truth;
    SO3State s = pendulum_embed(2.0, 0.0);
    const Eigen::VectorXd u0 = Eigen::VectorXd::Zero(1);
    double e0 = 0.0, e_last = 0.0;
    for (int k = 0; k <= a.steps; ++k) {
      const auto [phi, phid] = pendulum_extract(s);
      const double e = pendulum_true_energy(truth, phi, phid);
      const double orth = orthogonality_error(s.R.matrix());
      max_orth = std::max(max_orth, orth);
      if (k == 0) e0 = e;
      e_last = e;
      if (csv) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      k, k * a.h, phi, phid, e, orth);
        out << buf;
      }
      if (k < a.steps)
        s = step_so3(s, queries.forces(Vec3::Zero(), s.R, u0), queries, p,
                     newton);
    }
    std::printf("steps %d  E0 %.6f  E_final %.6f  drift %.3e  max orth %.3e\n",
                a.steps, e0, e_last, e_last - e0, max_orth);
  } else {
    if (csv) out << "step,time,energy,orth_error\n";
    const QuadrotorTruth truth;
    SE3State s;
    s.x = Vec3(0.0, 0.0, 1.0);
    s.v = Vec3(0.3, 0.0, 0.0);
    s.omega = Vec3(0.5, 0.4, 0.3);
    const Eigen::VectorXd u0 = Eigen::VectorXd::Zero(4);
    double e0 = 0.0, e_last = 0.0;
    for (int k = 0; k <= a.steps; ++k) {
      const double e = quad_true_energy(truth, s);
      const double orth = orthogonality_error(s.R.matrix());
      max_orth = std::max(max_orth, orth);
      if (k == 0) e0 = e;
      e_last = e;
      if (csv) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", k, k * a.h,
                      e, orth);
        out << buf;
      }
      if (k < a.steps)
        s = step_se3(s, queries.forces(s.x, s.R, u0), queries, p, newton);
    }
    std::printf("steps %d  E0 %.6f  E_final %.6f  drift %.3e  max orth %.3e\n",
                a.steps, e0, e_last, e_last - e0, max_orth);
  }
  return 0;
}

// -------------------------------------------------------------------- mpc

struct MpcArgs {
  std::string task = "swingup";
  std::string model = "truth";
  std::string out;
  int steps = -1;
  int horizon = -1;
  int iters = 50;
  double lr = -1.0;
  double h = 0.02;
};

int run_mpc_swingup(const MpcArgs& a) {
  const IntegratorParams p(a.h, 0.5);
  const PendulumTruth truth;
  PendulumTruthStepper truth_stepper(truth, p, 3);
  DynamicsModel learnt = DynamicsModel::pendulum_so3(0);
  std::unique_ptr<LearntStepper> learnt_stepper;
  const TapeStepper* stepper = &truth_stepper;
  if (a.model != "truth") {
    learnt = load_structured_model(a.model);
    if (learnt.convention() != ForceConvention::PendulumSO3)
      throw InvalidInput("swingup needs an attitude-only model");
    learnt_stepper = std::make_unique<LearntStepper>(learnt, p, 3);
    stepper = learnt_stepper.get();
  }

  MPCProblem prob;
  prob.horizon = a.horizon > 0 ? a.horizon : 20;
  prob.cost = CostSpec::pendulum_swingup();
  prob.u_lo = Eigen::VectorXd::Constant(1, -20.0);
  prob.u_hi = Eigen::VectorXd::Constant(1, 20.0);
  prob.iters = a.iters;
  prob.lr = a.lr > 0 ? a.lr : 0.1;
  MPCPlanner planner(*stepper, prob);

  PlantStep plant = [&](const SE3State& s, const Eigen::VectorXd& u) {
    auto [phi, phid] = pendulum_extract(SO3State{s.R, s.omega});
    std::tie(phi, phid) = pendulum_step(truth, phi, phid, u[0], a.h);
    const SO3State n = pendulum_embed(phi, phid);
    SE3State out;
    out.R = n.R;
    out.omega = n.omega;
    return out;
  };

  const int steps = a.steps > 0 ? a.steps : 500;
  SE3State s0;  // hanging at rest
  const ClosedLoopResult r = run_closed_loop(planner, s0, steps, plant);

  const Mat3 R_goal = prob.cost.R_goal;
  double worst_att = 0.0, worst_om = 0.0;
  const int tail = std::min(100, steps);
  for (int k = steps + 1 - tail; k <= steps; ++k) {
    const double att = 3.0 - (R_goal.transpose() * r.states[k].R.matrix()).trace();
    worst_att = std::max(worst_att, att);
    worst_om = std::max(worst_om, r.states[k].omega.norm());
  }
  if (!a.out.empty()) {
    auto out = open_csv(a.out);
    out << "step,time,phi,phid,u,att_err,omega_norm,planned_cost\n";
    char buf[256];
    for (int k = 0; k < steps; ++k) {
      const auto [phi, phid] =
          pendulum_extract(SO3State{r.states[k].R, r.states[k].omega});
      const double att =
          3.0 - (R_goal.transpose() * r.states[k].R.matrix()).trace();
      std::snprintf(buf, sizeof(buf),
                    "%d,%.6g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", k,
                    k * a.h, phi, phid, r.controls[k][0], att,
                    r.states[k].omega.norm(), r.planned_costs[k]);
      out << buf;
    }
  }
  std::printf("swingup: %d steps, final-100 max attitude error %.4f, "
              "max |omega| %.4f\n",
              steps, worst_att, worst_om);
  return 0;
}

Vec3 piecewise_ref(const std::vector<std::pair<double, Vec3>>& wps, double t) {
  if (t <= wps.front().first) return wps.front().second;
  for (std::size_t i = 1; i < wps.size(); ++i) {
    if (t <= wps[i].first) {
      const double a = (t - wps[i - 1].first) /
                       (wps[i].first - wps[i - 1].first);
      return (1.0 - a) * wps[i - 1].second + a * wps[i].second;
    }
  }
  return wps.back().second;
}

int run_mpc_quad(const MpcArgs& a, bool diamond) {
  const IntegratorParams p(a.h, 0.5);
  const QuadrotorTruth truth;
  QuadTruthStepper truth_stepper(truth, p, 3);
  DynamicsModel learnt = DynamicsModel::pendulum_so3(0);
  std::unique_ptr<LearntStepper> learnt_stepper;
  const TapeStepper* stepper = &truth_stepper;
  if (a.model != "truth") {
    learnt = load_structured_model(a.model);
    if (learnt.convention() != ForceConvention::QuadrotorSE3)
      throw InvalidInput("this task needs a full-pose model");
    learnt_stepper = std::make_unique<LearntStepper>(learnt, p, 3);
    stepper = learnt_stepper.get();
  }

  MPCProblem prob;
  prob.horizon = a.horizon > 0 ? a.horizon : 15;
  prob.cost = CostSpec::quadrotor_track();
  // A short horizon plus an absolute velocity penalty makes lagging the
  // reference cheap; boosting the terminal stage recovers tracking.
  prob.terminal_weight = 20.0;
  prob.u_lo = Eigen::VectorXd(4);
  prob.u_hi = Eigen::VectorXd(4);
  prob.u_lo << 0.0, -truth.tau_max[0], -truth.tau_max[1], -truth.tau_max[2];
  prob.u_hi << truth.f_max, truth.tau_max[0], truth.tau_max[1],
      truth.tau_max[2];
  prob.iters = a.iters;
  prob.lr = a.lr > 0 ? a.lr : 0.02;
  MPCPlanner planner(*stepper, prob);

  PlantStep plant = [&](const SE3State& s, const Eigen::VectorXd& u) {
    return quad_step(truth, s, Eigen::Vector4d(u), a.h);
  };

  std::vector<std::pair<double, Vec3>> wps;
  SE3State s0;
  int steps;
  if (diamond) {
    wps = {{0.0, Vec3(0.0, 0.0, 1.0)},
           {2.5, Vec3(1.0, 0.0, 1.125)},
           {5.0, Vec3(0.0, 1.0, 1.25)},
           {7.5, Vec3(-1.0, 0.0, 1.375)},
           {10.0, Vec3(0.0, -1.0, 1.5)}};
    s0.x = Vec3(0.0, 0.0, 1.0);
    steps = a.steps > 0 ? a.steps : 500;
  } else {
    // Hold station at (0,0,1) from a small offset. Uncontrolled free fall
    // exceeds the 0.05 m band within 0.1 s, so holding the band for the
    // whole window requires genuine closed-loop thrust regulation.
    wps = {{0.0, Vec3(0.0, 0.0, 1.0)}};
    s0.x = Vec3(0.03, 0.0, 0.97);
    steps = a.steps > 0 ? a.steps : 250;
  }
  PositionRef ref = [&](int k) { return piecewise_ref(wps, k * a.h); };

  const ClosedLoopResult r = run_closed_loop(planner, s0, steps, plant, ref);

  double max_err = 0.0, sum_err = 0.0, tail_err = 0.0;
  const int tail = std::min(50, steps);
  for (int k = 0; k <= steps; ++k) {
    const double err = (r.states[k].x - ref(k)).norm();
    max_err = std::max(max_err, err);
    sum_err += err / (steps + 1);
    if (k > steps - tail) tail_err = std::max(tail_err, err);
  }
  if (!a.out.empty()) {
    auto out = open_csv(a.out);
    out << "step,time,x,y,z,ref_x,ref_y,ref_z,err,f,tau1,tau2,tau3,"
           "planned_cost\n";
    char buf[512];
    for (int k = 0; k < steps; ++k) {
      const Vec3& x = r.states[k].x;
      const Vec3 rr = ref(k);
      std::snprintf(buf, sizeof(buf),
                    "%d,%.6g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,"
                    "%.10g,%.10g,%.10g,%.10g\n",
                    k, k * a.h, x.x(), x.y(), x.z(), rr.x(), rr.y(), rr.z(),
                    (x - rr).norm(), r.controls[k][0], r.controls[k][1],
                    r.controls[k][2], r.controls[k][3], r.planned_costs[k]);
      out << buf;
    }
  }
  std::printf("%s: %d steps, mean err %.4f m, max err %.4f m, "
              "final-%d max err %.4f m\n",
              diamond ? "diamond" : "hover", steps, sum_err, max_err, tail,
              tail_err);
  return 0;
}

int run_mpc(const MpcArgs& a) {
  if (a.task == "swingup") return run_mpc_swingup(a);
  if (a.task == "hover") return run_mpc_quad(a, false);
  if (a.task == "diamond") return run_mpc_quad(a, true);
  throw InvalidInput("unknown mpc task " + a.task);
}

// -------------------------------------------------------------- gradcheck

struct GcArgs {
  std::string algorithm = "Ia";
  int samples = 2;
  std::uint64_t seed = 0;
  double h = 0.02;
};

int run_gradcheck(const GcArgs& a) {
  const Algorithm alg = algorithm_from_string(a.algorithm);
  const bool p_only = alg == Algorithm::IIa || alg == Algorithm::IIb;
  const ForceConvention conv =
      p_only ? ForceConvention::QuadrotorSE3 : ForceConvention::PendulumSO3;
  DynamicsModel model = DynamicsModel::custom(conv, 6, 2, a.seed);
  std::mt19937_64 rng(a.seed + 17);

  TrainConfig tc;
  tc.algorithm = alg;
  tc.h = a.h;

  // Components below ~1e-5 of the dominant gradient sit at the roundoff
  // floor of a step-1e-6 central difference, so they are compared against
  // this scale instead of their own magnitude.
  auto fd_floor = [](const std::vector<double>& g) {
    double m = 0.0;
    for (double v : g) m = std::max(m, std::abs(v));
    return 1e-5 * (1.0 + m);
  };

  double err;
  if (p_only) {
    std::vector<TransitionP> data;
    for (int i = 0; i < a.samples; ++i) {
      TransitionP t;
      t.R0 = random_rotation(rng, 2.0);
      t.R1 = Rotation(t.R0.matrix() * random_rotation(rng, 0.1).matrix());
      t.R2 = Rotation(t.R1.matrix() * random_rotation(rng, 0.1).matrix());
      t.x0 = random_vec3(rng, 1.0);
      t.x1 = t.x0 + random_vec3(rng, 0.05);
      t.x2 = t.x1 + random_vec3(rng, 0.05);
      t.u0 = random_vecxd(rng, 4, 1.0);
      t.u1 = random_vecxd(rng, 4, 1.0);
      data.push_back(std::move(t));
    }
    const auto num = numeric_loss_grad(model, data, tc);
    const auto ana = analytic_loss_grad(model, data, tc);
    err = max_rel_error(num, ana, fd_floor(ana));
  } else {
    std::vector<TransitionPV> data;
    for (int i = 0; i < a.samples; ++i) {
      TransitionPV t;
      t.R0 = random_rotation(rng, 2.0);
      t.R1 = Rotation(t.R0.matrix() * random_rotation(rng, 0.1).matrix());
      t.w0 = random_vec3(rng, 1.0);
      t.w1 = random_vec3(rng, 1.0);
      t.u = random_vecxd(rng, 1, 1.0);
      data.push_back(std::move(t));
    }
    const auto num = numeric_loss_grad(model, data, tc);
    const auto ana = analytic_loss_grad(model, data, tc);
    err = max_rel_error(num, ana, fd_floor(ana));
  }
  std::printf("%s gradient check over %d samples, %d params: "
              "max rel error %.3e\n",
              a.algorithm.c_str(), a.samples, model.param_count(), err);
  if (err <= 1e-5) {
    std::printf("PASS\n");
    return 0;
  }
  std::printf("FAIL (limit 1e-5)\n");
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"forced variational integrators, dynamics learning, and MPC"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* cgen = app.add_subcommand("gen-data", "simulate a training dataset");
  cgen->add_option("--system", gen.system, "pendulum or quadrotor");
  cgen->add_option("--kind", gen.kind, "pv (with velocities) or p (poses)")
      ->check(CLI::IsMember({"pv", "p"}));
  cgen->add_option("--out", gen.out, "output JSON-lines path")->required();
  cgen->add_option("--seed", gen.seed, "RNG seed");
  cgen->add_option("--trajectories", gen.trajectories, "trajectory count");
  cgen->add_option("--steps", gen.steps, "steps per trajectory");
  cgen->add_option("--dt", gen.h, "step size");

  TrainArgs tr;
  auto* ctr = app.add_subcommand("train", "fit a model to a dataset");
  ctr->add_option("--config", tr.config, "experiment config JSON");
  ctr->add_option("--data", tr.data, "dataset path")->required();
  ctr->add_option("--out", tr.out, "checkpoint output path");
  ctr->add_option("--loss-csv", tr.loss_csv, "write the loss log as CSV");
  ctr->add_option("--algorithm", tr.algorithm,
                  "Ia, Ib, IIa, IIb, or baseline (overrides the config)");
  ctr->add_option("--iterations", tr.iterations, "override iteration count");
  ctr->add_option("--seed", tr.seed, "override init seed");

  EvalArgs ev;
  auto* cev = app.add_subcommand("eval", "roll out and report diagnostics");
  cev->add_option("--checkpoint", ev.checkpoint,
                  "model JSON, truth:pendulum, or truth:quadrotor")
      ->required();
  cev->add_option("--mode", ev.mode,
                  "energy, constraint, phase, or learned-quantities");
  cev->add_option("--out", ev.out, "CSV output path");
  cev->add_option("--steps", ev.steps, "rollout length");
  cev->add_option("--dt", ev.h, "step size");
  cev->add_option("--alpha", ev.alpha, "quadrature weight");

  MpcArgs mp;
  auto* cmp = app.add_subcommand("mpc", "closed-loop receding-horizon control");
  cmp->add_option("--task", mp.task, "swingup, hover, or diamond");
  cmp->add_option("--model", mp.model, "checkpoint path or truth");
  cmp->add_option("--out", mp.out, "CSV output path");
  cmp->add_option("--steps", mp.steps, "closed-loop steps");
  cmp->add_option("--horizon", mp.horizon, "planning horizon");
  cmp->add_option("--iters", mp.iters, "optimizer iterations per plan");
  cmp->add_option("--lr", mp.lr, "optimizer step size");
  cmp->add_option("--dt", mp.h, "step size");

  GcArgs gc;
  auto* cgc = app.add_subcommand("gradcheck",
                                 "compare analytic and numeric gradients");
  cgc->add_option("--algorithm", gc.algorithm, "Ia, Ib, IIa, or IIb");
  cgc->add_option("--samples", gc.samples, "number of random samples");
  cgc->add_option("--seed", gc.seed, "RNG seed");
  cgc->add_option("--dt", gc.h, "step size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*cgen) return run_gen_data(gen);
    if (*ctr) return run_train(tr);
    if (*cev) return run_eval(ev);
    if (*cmp) return run_mpc(mp);
    if (*cgc) return run_gradcheck(gc);
  } catch (const InvalidInput& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
