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

#include <string>
#include <vector>

#include "fvin/trainer.hpp"

namespace fvin {

// Datasets are JSON lines: a manifest object on the first line, then one
// transition object per line. Doubles round-trip exactly through the text.
struct DatasetManifest {
  int schema_version = 1;
  std::string kind;    // "pv" or "p"
  std::string system;  // "pendulum" or "quadrotor"
  long count = 0;
  std::uint64_t seed = 0;
  double h = 0.02;
  int u_dim = 1;
};

void save_dataset(const std::string& path, const DatasetManifest& man,
                  const std::vector<TransitionPV>& data);
void save_dataset(const std::string& path, const DatasetManifest& man,
                  const std::vector<TransitionP>& data);
DatasetManifest read_manifest(const std::string& path);
DatasetManifest load_dataset_pv(const std::string& path,
                                std::vector<TransitionPV>& out);
DatasetManifest load_dataset_p(const std::string& path,
                               std::vector<TransitionP>& out);

// Model checkpoints are single JSON documents; the stored "kind" says whether
// the file holds a structured model or the unstructured baseline.
void save_model(const std::string& path, const DynamicsModel& m);
void save_model(const std::string& path, const BaselineModel& m);
std::string model_kind(const std::string& path);
DynamicsModel load_structured_model(const std::string& path);
BaselineModel load_baseline_model(const std::string& path);

void write_loss_csv(const std::string& path,
                    const std::vector<TrainLogEntry>& log);

// Training run description, loaded from JSON with defaults for every field.
struct ExperimentConfig {
  std::string system = "pendulum";  // "pendulum" or "quadrotor"
  std::string algorithm = "Ia";
  double h = 0.02;
  double alpha = 0.5;
  long iterations = 2000;
  double lr = 1e-3;
  int lr_decay_every = 0;
  double lr_decay_factor = 0.5;
  int log_every = 10;
  double stop_below = 0.0;
  std::uint64_t seed = 0;

  TrainConfig train_config() const;
};

ExperimentConfig load_experiment_config(const std::string& path);

}  // namespace fvin
