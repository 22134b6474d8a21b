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

#include "fvin/dataio.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fvin {

namespace {

using nlohmann::json;

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json rot_to_json(const Rotation& r) {
  const auto rm = r.to_row_major();
  json a = json::array();
  for (double x : rm) a.push_back(x);
  return a;
}

Eigen::VectorXd vec_from_json(const json& a) {
  if (!a.is_array()) throw InvalidInput("expected a JSON array of numbers");
  Eigen::VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
  return v;
}

Vec3 vec3_from_json(const json& a) {
  if (!a.is_array() || a.size() != 3)
    throw InvalidInput("expected a length-3 JSON array");
  return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
}

Rotation rot_from_json(const json& a) {
  if (!a.is_array() || a.size() != 9)
    throw InvalidInput("expected a length-9 JSON array");
  std::array<double, 9> rm;
  for (int i = 0; i < 9; ++i) rm[i] = a[i].get<double>();
  return Rotation::from_row_major(rm);
}

json manifest_to_json(const DatasetManifest& man) {
  return json{{"schema_version", man.schema_version}, {"kind", man.kind},
              {"system", man.system},                 {"count", man.count},
              {"seed", man.seed},                     {"h", man.h},
              {"u_dim", man.u_dim}};
}

DatasetManifest manifest_from_json(const json& j) {
  DatasetManifest man;
  man.schema_version = j.value("schema_version", 1);
  if (man.schema_version != 1)
    throw InvalidInput("unsupported dataset schema version");
  man.kind = j.value("kind", "");
  man.system = j.value("system", "");
  man.count = j.value("count", 0L);
  man.seed = j.value("seed", std::uint64_t{0});
  man.h = j.value("h", 0.02);
  man.u_dim = j.value("u_dim", 1);
  if (man.kind != "pv" && man.kind != "p")
    throw InvalidInput("dataset manifest kind must be \"pv\" or \"p\"");
  return man;
}

json parse_line(const std::string& line, const std::string& path, long num) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded())
    throw InvalidInput("bad JSON at " + path + ":" + std::to_string(num));
  return j;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path);
  return out;
}

}  // namespace

void save_dataset(const std::string& path, const DatasetManifest& man,
                  const std::vector<TransitionPV>& data) {
  DatasetManifest m = man;
  m.kind = "pv";
  m.count = static_cast<long>(data.size());
  auto out = open_out(path);
  out << manifest_to_json(m) << "\n";
  for (const TransitionPV& t : data) {
    json j{{"x0", vec3_to_json(t.x0)}, {"R0", rot_to_json(t.R0)},
           {"v0", vec3_to_json(t.v0)}, {"w0", vec3_to_json(t.w0)},
           {"u", vec_to_json(t.u)},    {"x1", vec3_to_json(t.x1)},
           {"R1", rot_to_json(t.R1)},  {"v1", vec3_to_json(t.v1)},
           {"w1", vec3_to_json(t.w1)}};
    out << j << "\n";
  }
}

void save_dataset(const std::string& path, const DatasetManifest& man,
                  const std::vector<TransitionP>& data) {
  DatasetManifest m = man;
  m.kind = "p";
  m.count = static_cast<long>(data.size());
  auto out = open_out(path);
  out << manifest_to_json(m) << "\n";
  for (const TransitionP& t : data) {
    json j{{"x0", vec3_to_json(t.x0)}, {"R0", rot_to_json(t.R0)},
           {"x1", vec3_to_json(t.x1)}, {"R1", rot_to_json(t.R1)},
           {"x2", vec3_to_json(t.x2)}, {"R2", rot_to_json(t.R2)},
           {"u0", vec_to_json(t.u0)},  {"u1", vec_to_json(t.u1)}};
    out << j << "\n";
  }
}

DatasetManifest read_manifest(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("empty dataset " + path);
  return manifest_from_json(parse_line(line, path, 1));
}

DatasetManifest load_dataset_pv(const std::string& path,
                                std::vector<TransitionPV>& out) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("empty dataset " + path);
  DatasetManifest man = manifest_from_json(parse_line(line, path, 1));
  if (man.kind != "pv")
    throw InvalidInput(path + " holds a \"" + man.kind + "\" dataset");
  out.clear();
  long num = 1;
  while (std::getline(in, line)) {
    ++num;
    if (line.empty()) continue;
    const json j = parse_line(line, path, num);
    TransitionPV t;
    t.x0 = vec3_from_json(j.at("x0"));
    t.R0 = rot_from_json(j.at("R0"));
    t.v0 = vec3_from_json(j.at("v0"));
    t.w0 = vec3_from_json(j.at("w0"));
    t.u = vec_from_json(j.at("u"));
    t.x1 = vec3_from_json(j.at("x1"));
    t.R1 = rot_from_json(j.at("R1"));
    t.v1 = vec3_from_json(j.at("v1"));
    t.w1 = vec3_from_json(j.at("w1"));
    out.push_back(std::move(t));
  }
  if (static_cast<long>(out.size()) != man.count)
    throw InvalidInput(path + " manifest count does not match the lines");
  return man;
}

DatasetManifest load_dataset_p(const std::string& path,
                               std::vector<TransitionP>& out) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("empty dataset " + path);
  DatasetManifest man = manifest_from_json(parse_line(line, path, 1));
  if (man.kind != "p")
    throw InvalidInput(path + " holds a \"" + man.kind + "\" dataset");
  out.clear();
  long num = 1;
  while (std::getline(in, line)) {
    ++num;
    if (line.empty()) continue;
    const json j = parse_line(line, path, num);
    TransitionP t;
    t.x0 = vec3_from_json(j.at("x0"));
    t.R0 = rot_from_json(j.at("R0"));
    t.x1 = vec3_from_json(j.at("x1"));
    t.R1 = rot_from_json(j.at("R1"));
    t.x2 = vec3_from_json(j.at("x2"));
    t.R2 = rot_from_json(j.at("R2"));
    t.u0 = vec_from_json(j.at("u0"));
    t.u1 = vec_from_json(j.at("u1"));
    out.push_back(std::move(t));
  }
  if (static_cast<long>(out.size()) != man.count)
    throw InvalidInput(path + " manifest count does not match the lines");
  return man;
}

void save_model(const std::string& path, const DynamicsModel& m) {
  auto out = open_out(path);
  out << m.to_json().dump(2) << "\n";
}

void save_model(const std::string& path, const BaselineModel& m) {
  auto out = open_out(path);
  out << m.to_json().dump(2) << "\n";
}

namespace {

json load_checkpoint_json(const std::string& path) {
  auto in = open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  json j = json::parse(ss.str(), nullptr, false);
  if (j.is_discarded()) throw InvalidInput("bad JSON in " + path);
  return j;
}

}  // namespace

std::string model_kind(const std::string& path) {
  const json j = load_checkpoint_json(path);
  if (!j.contains("kind")) throw InvalidInput(path + " has no model kind");
  return j.at("kind").get<std::string>();
}

DynamicsModel load_structured_model(const std::string& path) {
  return DynamicsModel::from_json(load_checkpoint_json(path));
}

BaselineModel load_baseline_model(const std::string& path) {
  return BaselineModel::from_json(load_checkpoint_json(path));
}

void write_loss_csv(const std::string& path,
                    const std::vector<TrainLogEntry>& log) {
  auto out = open_out(path);
  out << "iter,loss,lr\n";
  char buf[128];
  for (const TrainLogEntry& e : log) {
    std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g\n", e.iter, e.loss, e.lr);
    out << buf;
  }
}

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig cfg;
  cfg.algorithm = algorithm_from_string(algorithm);
  cfg.h = h;
  cfg.alpha = alpha;
  cfg.iterations = iterations;
  cfg.lr = lr;
  cfg.lr_decay_every = lr_decay_every;
  cfg.lr_decay_factor = lr_decay_factor;
  cfg.log_every = log_every;
  cfg.stop_below = stop_below;
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  const json j = load_checkpoint_json(path);
  ExperimentConfig c;
  c.system = j.value("system", c.system);
  c.algorithm = j.value("algorithm", c.algorithm);
  c.h = j.value("h", c.h);
  c.alpha = j.value("alpha", c.alpha);
  c.iterations = j.value("iterations", c.iterations);
  c.lr = j.value("lr", c.lr);
  c.lr_decay_every = j.value("lr_decay_every", c.lr_decay_every);
  c.lr_decay_factor = j.value("lr_decay_factor", c.lr_decay_factor);
  c.log_every = j.value("log_every", c.log_every);
  c.stop_below = j.value("stop_below", c.stop_below);
  c.seed = j.value("seed", c.seed);
  if (c.system != "pendulum" && c.system != "quadrotor")
    throw InvalidInput("config system must be pendulum or quadrotor");
  if (c.h <= 0.0 || c.iterations < 0 || c.lr <= 0.0)
    throw InvalidInput("config has a non-positive h, lr, or iteration count");
  if (c.algorithm != "baseline") algorithm_from_string(c.algorithm);
  return c;
}

}  // namespace fvin
