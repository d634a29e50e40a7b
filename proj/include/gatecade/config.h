/*
 * Copyright 2026 The Gatecade Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


// Experiment configuration read from a JSON document. Every key is optional;
// unknown keys are rejected so that typos fail loudly.

#ifndef GATECADE_CONFIG_H_
#define GATECADE_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include "gatecade/cascade.h"
#include "gatecade/dataset.h"
#include "gatecade/model.h"
#include "gatecade/power_model.h"
#include "gatecade/sweep.h"
#include "gatecade/trainer.h"

namespace gatecade {

struct SimulationConfig {
  // "analytic" draws Bernoulli outcomes from `power`; "empirical" runs a
  // trained model over the test split.
  std::string mode = "analytic";
  std::uint64_t samples = 1000000;
  std::uint64_t seed = 0;
  int workers = 1;
  double a = 0.5;
  bool trace = false;
};

struct ExperimentConfig {
  std::uint64_t seed = 2026;
  DatasetSpec dataset;
  BackboneConfig backbone;
  TrainConfig train;
  double target_incorrect_rate = 0.01;
  EvaluateOptions evaluate;
  SweepConfig sweep;
  GcPowerParams power{.rho = 0.2, .mu = 0.2, .nu = 0.9, .gamma = 1.0};
  std::vector<double> a_grid = {0.9, 0.5, 0.1};
  SimulationConfig simulation;
  // Inputs for the calibrate / evaluate / simulate subcommands.
  std::string model_path;
  std::string threshold_path;
  // FNV-1a 64 of the canonical JSON dump of the parsed input.
  std::uint64_t hash = 0;

  void Validate() const;
};

ExperimentConfig ParseConfig(const std::string& json_text);
ExperimentConfig LoadConfig(const std::string& path);

std::uint64_t Fnv1a64(const std::string& bytes);

// Threshold files: {"tau": ..., "tau_hex": ..., ...}. The hex field is
// authoritative when present.
std::string ThresholdToJson(const GatingThreshold& threshold);
GatingThreshold ThresholdFromJson(const std::string& json_text);

}  // namespace gatecade

#endif  // GATECADE_CONFIG_H_
