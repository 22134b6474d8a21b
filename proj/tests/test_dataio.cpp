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

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "doctest.h"
#include "fvin/dataio.hpp"
#include "fvin/envs.hpp"
#include "test_util.hpp"

using namespace fvin;
namespace fs = std::filesystem;

namespace {

// Unique scratch path; removed by the caller when done.
std::string scratch(const std::string& stem) {
  static std::mt19937_64 rng(std::random_device{}());
  return (fs::temp_directory_path() /
          (stem + "-" + std::to_string(rng()) + ".tmp"))
      .string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("position-velocity dataset round trips bit exactly") {
  DataGenSpec spec;
  spec.seed = 21;
  spec.trajectories = 3;
  const auto data = generate_pendulum_dataset(spec);
  DatasetManifest man;
  man.kind = "pv";
  man.system = "pendulum";
  man.count = static_cast<long>(data.size());
  man.seed = spec.seed;
  man.h = spec.h;
  man.u_dim = 1;

  const std::string path = scratch("fvin-pv");
  save_dataset(path, man, data);
  std::vector<TransitionPV> back;
  const DatasetManifest got = load_dataset_pv(path, back);
  fs::remove(path);

  CHECK(got.kind == "pv");
  CHECK(got.system == "pendulum");
  CHECK(got.count == man.count);
  CHECK(got.seed == 21);
  CHECK(got.h == spec.h);
  REQUIRE(back.size() == data.size());
  for (size_t i = 0; i < data.size(); ++i) {
    CHECK((back[i].R0.matrix() - data[i].R0.matrix()).norm() == 0.0);
    CHECK((back[i].R1.matrix() - data[i].R1.matrix()).norm() == 0.0);
    CHECK((back[i].w0 - data[i].w0).norm() == 0.0);
    CHECK((back[i].w1 - data[i].w1).norm() == 0.0);
    CHECK((back[i].u - data[i].u).norm() == 0.0);
  }
}

TEST_CASE("position-only dataset round trips bit exactly") {
  DataGenSpec spec;
  spec.seed = 22;
  spec.quad_trajectories = 2;
  const auto data = generate_quadrotor_dataset_p(spec);
  DatasetManifest man;
  man.kind = "p";
  man.system = "quadrotor";
  man.count = static_cast<long>(data.size());
  man.u_dim = 4;

  const std::string path = scratch("fvin-p");
  save_dataset(path, man, data);
  std::vector<TransitionP> back;
  const DatasetManifest got = load_dataset_p(path, back);
  fs::remove(path);

  CHECK(got.u_dim == 4);
  REQUIRE(back.size() == data.size());
  for (size_t i = 0; i < data.size(); ++i) {
    CHECK((back[i].x0 - data[i].x0).norm() == 0.0);
    CHECK((back[i].x2 - data[i].x2).norm() == 0.0);
    CHECK((back[i].R2.matrix() - data[i].R2.matrix()).norm() == 0.0);
    CHECK((back[i].u1 - data[i].u1).norm() == 0.0);
  }
}

TEST_CASE("dataset kind mismatch is rejected") {
  DataGenSpec spec;
  spec.seed = 23;
  spec.trajectories = 1;
  const auto data = generate_pendulum_dataset(spec);
  DatasetManifest man;
  man.kind = "pv";
  man.system = "pendulum";
  man.count = static_cast<long>(data.size());

  const std::string path = scratch("fvin-kind");
  save_dataset(path, man, data);
  std::vector<TransitionP> wrong;
  CHECK_THROWS_AS(load_dataset_p(path, wrong), InvalidInput);
  CHECK(read_manifest(path).kind == "pv");
  fs::remove(path);
  CHECK_THROWS_AS(read_manifest(path), InvalidInput);
}

TEST_CASE("structured model checkpoints restore parameters and behavior") {
  const DynamicsModel m =
      DynamicsModel::custom(ForceConvention::QuadrotorSE3, 6, 2, 31);
  const std::string path = scratch("fvin-model");
  save_model(path, m);
  CHECK(model_kind(path) == "structured");
  const DynamicsModel back = load_structured_model(path);
  fs::remove(path);

  REQUIRE(back.param_count() == m.param_count());
  for (int i = 0; i < m.param_count(); ++i)
    CHECK(back.params()[i] == m.params()[i]);
  CHECK(back.convention() == m.convention());

  std::mt19937_64 rng(77);
  const Rotation R = testutil::random_rotation(rng, 1.0);
  const Vec3 x = testutil::random_vec3(rng, 0.5);
  CHECK((back.inertia_at(x, R) - m.inertia_at(x, R)).norm() == 0.0);
  CHECK(back.potential_at(x, R).U == m.potential_at(x, R).U);
}

TEST_CASE("baseline checkpoints are distinguished from structured ones") {
  const BaselineModel m =
      BaselineModel::make(ForceConvention::PendulumSO3, {8, 8}, 5);
  const std::string path = scratch("fvin-baseline");
  save_model(path, m);
  CHECK(model_kind(path) == "baseline");
  CHECK_THROWS_AS(load_structured_model(path), InvalidInput);
  const BaselineModel back = load_baseline_model(path);
  fs::remove(path);
  REQUIRE(back.params.size() == m.params.size());
  for (size_t i = 0; i < m.params.size(); ++i)
    CHECK(back.params[i] == m.params[i]);
}

TEST_CASE("saving a model twice writes identical bytes") {
  const DynamicsModel m =
      DynamicsModel::custom(ForceConvention::PendulumSO3, 5, 2, 33);
  const std::string p1 = scratch("fvin-bytes1");
  const std::string p2 = scratch("fvin-bytes2");
  save_model(p1, m);
  save_model(p2, m);
  CHECK(read_file(p1) == read_file(p2));
  fs::remove(p1);
  fs::remove(p2);
}

TEST_CASE("loss history lands in a csv with a header") {
  std::vector<TrainLogEntry> log = {{1, 2.5, 1e-3}, {10, 0.5, 1e-3}};
  const std::string path = scratch("fvin-loss");
  write_loss_csv(path, log);
  std::ifstream in(path);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "iter,loss,lr");
  REQUIRE(std::getline(in, line));
  CHECK(line.substr(0, 2) == "1,");
  REQUIRE(std::getline(in, line));
  CHECK(line.substr(0, 3) == "10,");
  in.close();
  fs::remove(path);
}

TEST_CASE("experiment config defaults and overrides") {
  const std::string path = scratch("fvin-cfg");
  {
    std::ofstream out(path);
    out << R"({"system": "quadrotor", "algorithm": "Ib", "iterations": 42})";
  }
  const ExperimentConfig cfg = load_experiment_config(path);
  fs::remove(path);
  CHECK(cfg.system == "quadrotor");
  CHECK(cfg.algorithm == "Ib");
  CHECK(cfg.iterations == 42);
  CHECK(cfg.h == 0.02);        // default
  CHECK(cfg.alpha == 0.5);     // default
  CHECK(cfg.lr == 1e-3);       // default
  const TrainConfig tc = cfg.train_config();
  CHECK(tc.algorithm == Algorithm::Ib);
  CHECK(tc.iterations == 42);
}

TEST_CASE("invalid experiment configs are rejected") {
  const std::string path = scratch("fvin-badcfg");
  {
    std::ofstream out(path);
    out << R"({"system": "hovercraft"})";
  }
  CHECK_THROWS_AS(load_experiment_config(path), InvalidInput);
  {
    std::ofstream out(path);
    out << "not json at all {";
  }
  CHECK_THROWS_AS(load_experiment_config(path), InvalidInput);
  fs::remove(path);
  CHECK_THROWS_AS(load_experiment_config(path), InvalidInput);
}
