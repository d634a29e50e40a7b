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


#include "gatecade/config.h"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "gatecade/checkpoint.h"
#include "gatecade/error.h"
#include "json.hpp"

namespace gatecade {
namespace {

using Json = nlohmann::json;

void CheckKeys(const Json& object, const std::string& where,
               std::initializer_list<const char*> allowed) {
  if (!object.is_object()) {
    throw Error(ErrorCode::kConfig, "'" + where + "' must be an object");
  }
  for (auto it = object.begin(); it != object.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) known = known || it.key() == key;
    if (!known) {
      throw Error(ErrorCode::kConfig,
                  "unknown key '" + it.key() + "' in '" + where + "'");
    }
  }
}

template <typename T>
void Read(const Json& object, const char* key, const std::string& where,
          T& target) {
  if (!object.contains(key)) return;
  try {
    target = object.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kConfig,
                "bad value for '" + where + "." + key + "': " + e.what());
  }
}

void ParseDataset(const Json& j, DatasetSpec& d) {
  CheckKeys(j, "dataset",
            {"generator", "num_positive_classes", "num_background_classes",
             "rho", "n_train", "n_val", "n_test", "seed", "stratified",
             "input_dim", "tokens", "separation", "positive_spacing",
             "noise_std"});
  std::string generator = GeneratorKindName(d.generator);
  Read(j, "generator", "dataset", generator);
  d.generator = ParseGeneratorKind(generator);
  Read(j, "num_positive_classes", "dataset", d.num_positive_classes);
  Read(j, "num_background_classes", "dataset", d.num_background_classes);
  Read(j, "rho", "dataset", d.rho);
  Read(j, "n_train", "dataset", d.n_train);
  Read(j, "n_val", "dataset", d.n_val);
  Read(j, "n_test", "dataset", d.n_test);
  Read(j, "seed", "dataset", d.seed);
  Read(j, "stratified", "dataset", d.stratified);
  Read(j, "input_dim", "dataset", d.input_dim);
  Read(j, "tokens", "dataset", d.tokens);
  Read(j, "separation", "dataset", d.separation);
  Read(j, "positive_spacing", "dataset", d.positive_spacing);
  Read(j, "noise_std", "dataset", d.noise_std);
}

void ParseBackbone(const Json& j, BackboneConfig& b) {
  CheckKeys(j, "backbone", {"kind", "width", "depth", "key_dim", "mlp_hidden"});
  std::string kind = BackboneKindName(b.kind);
  Read(j, "kind", "backbone", kind);
  b.kind = ParseBackboneKind(kind);
  Read(j, "width", "backbone", b.width);
  Read(j, "depth", "backbone", b.depth);
  Read(j, "key_dim", "backbone", b.key_dim);
  Read(j, "mlp_hidden", "backbone", b.mlp_hidden);
}

void ParseTrain(const Json& j, TrainConfig& t) {
  CheckKeys(j, "train",
            {"epochs", "hardening_epochs", "batch_size", "mu", "with_gc", "gc",
             "optimizer", "schedule", "seed"});
  Read(j, "epochs", "train", t.epochs);
  Read(j, "hardening_epochs", "train", t.hardening_epochs);
  Read(j, "batch_size", "train", t.batch_size);
  Read(j, "mu", "train", t.mu);
  Read(j, "seed", "train", t.seed);
  bool with_gc = t.gc.has_value();
  Read(j, "with_gc", "train", with_gc);
  if (!with_gc) {
    t.gc.reset();
  } else if (!t.gc) {
    t.gc = GcLayerOptions{};
  }
  if (j.contains("gc")) {
    const Json& g = j.at("gc");
    CheckKeys(g, "train.gc", {"alpha", "lambda", "mask_init_logit"});
    if (t.gc) {
      Read(g, "alpha", "train.gc", t.gc->alpha);
      Read(g, "lambda", "train.gc", t.gc->lambda_gc);
      Read(g, "mask_init_logit", "train.gc", t.gc->mask_init_logit);
    }
  }
  if (j.contains("optimizer")) {
    const Json& o = j.at("optimizer");
    CheckKeys(o, "train.optimizer", {"beta1", "beta2", "epsilon"});
    Read(o, "beta1", "train.optimizer", t.adam.beta1);
    Read(o, "beta2", "train.optimizer", t.adam.beta2);
    Read(o, "epsilon", "train.optimizer", t.adam.epsilon);
  }
  if (j.contains("schedule")) {
    const Json& s = j.at("schedule");
    CheckKeys(s, "train.schedule",
              {"kind", "learning_rate", "terminal_fraction", "boundaries",
               "values"});
    Read(s, "kind", "train.schedule", t.schedule.kind);
    Read(s, "learning_rate", "train.schedule", t.schedule.learning_rate);
    Read(s, "terminal_fraction", "train.schedule",
         t.schedule.terminal_fraction);
    Read(s, "boundaries", "train.schedule", t.schedule.boundaries);
    Read(s, "values", "train.schedule", t.schedule.values);
  }
}

ExperimentConfig FromJson(const Json& j) {
  ExperimentConfig c;
  CheckKeys(j, "config",
            {"seed", "dataset", "backbone", "train", "calibration", "evaluate",
             "sweep", "power", "simulation", "model", "threshold"});
  Read(j, "seed", "config", c.seed);
  if (j.contains("dataset")) ParseDataset(j.at("dataset"), c.dataset);
  if (j.contains("backbone")) ParseBackbone(j.at("backbone"), c.backbone);
  c.train.seed = c.seed;
  if (j.contains("train")) ParseTrain(j.at("train"), c.train);
  if (j.contains("calibration")) {
    const Json& k = j.at("calibration");
    CheckKeys(k, "calibration", {"target_incorrect_rate"});
    Read(k, "target_incorrect_rate", "calibration", c.target_incorrect_rate);
  }
  c.evaluate.seed = c.seed;
  if (j.contains("evaluate")) {
    const Json& e = j.at("evaluate");
    CheckKeys(e, "evaluate", {"repeats", "workers", "seed"});
    Read(e, "repeats", "evaluate", c.evaluate.repeats);
    Read(e, "workers", "evaluate", c.evaluate.workers);
    Read(e, "seed", "evaluate", c.evaluate.seed);
  }
  c.sweep.seed = c.seed;
  if (j.contains("sweep")) {
    const Json& s = j.at("sweep");
    CheckKeys(s, "sweep",
              {"mu_grid", "alpha_grid", "targets", "regimes", "repeats",
               "baseline", "workers", "seed"});
    Read(s, "mu_grid", "sweep", c.sweep.mu_grid);
    Read(s, "alpha_grid", "sweep", c.sweep.alpha_grid);
    Read(s, "targets", "sweep", c.sweep.targets);
    Read(s, "regimes", "sweep", c.sweep.regimes);
    Read(s, "repeats", "sweep", c.sweep.repeats);
    Read(s, "baseline", "sweep", c.sweep.baseline);
    Read(s, "workers", "sweep", c.sweep.workers);
    Read(s, "seed", "sweep", c.sweep.seed);
  }
  if (j.contains("power")) {
    const Json& p = j.at("power");
    CheckKeys(p, "power", {"rho", "mu", "nu", "gamma", "a_grid"});
    Read(p, "rho", "power", c.power.rho);
    Read(p, "mu", "power", c.power.mu);
    Read(p, "nu", "power", c.power.nu);
    Read(p, "gamma", "power", c.power.gamma);
    Read(p, "a_grid", "power", c.a_grid);
  }
  c.simulation.seed = c.seed;
  if (j.contains("simulation")) {
    const Json& s = j.at("simulation");
    CheckKeys(s, "simulation",
              {"mode", "samples", "seed", "workers", "a", "trace"});
    Read(s, "mode", "simulation", c.simulation.mode);
    Read(s, "samples", "simulation", c.simulation.samples);
    Read(s, "seed", "simulation", c.simulation.seed);
    Read(s, "workers", "simulation", c.simulation.workers);
    Read(s, "a", "simulation", c.simulation.a);
    Read(s, "trace", "simulation", c.simulation.trace);
  }
  Read(j, "model", "config", c.model_path);
  Read(j, "threshold", "config", c.threshold_path);

  c.backbone.input_dim = c.dataset.input_dim;
  c.backbone.num_classes =
      static_cast<std::size_t>(c.dataset.num_positive_classes) + 1;
  if (c.train.gc) c.train.gc->mu = c.train.mu;
  c.sweep.backbone = c.backbone;
  c.sweep.train = c.train;
  c.hash = Fnv1a64(j.dump());
  c.Validate();
  return c;
}

}  // namespace

void ExperimentConfig::Validate() const {
  dataset.Validate();
  backbone.Validate();
  const bool tokens = dataset.generator == GeneratorKind::kTokenSequences;
  if (tokens != (backbone.kind == BackboneKind::kAttention)) {
    throw Error(ErrorCode::kConfig,
                "token-sequences data requires the attention backbone and "
                "vector data the mlp backbone");
  }
  if (!(target_incorrect_rate >= 0.0 && target_incorrect_rate <= 1.0)) {
    throw Error(ErrorCode::kConfig,
                "calibration.target_incorrect_rate must lie in [0, 1]");
  }
  if (evaluate.repeats < 1 || evaluate.workers < 1) {
    throw Error(ErrorCode::kConfig, "evaluate repeats and workers must be >= 1");
  }
  sweep.Validate();
  if (a_grid.empty()) throw Error(ErrorCode::kConfig, "power.a_grid is empty");
  if (simulation.mode != "analytic" && simulation.mode != "empirical") {
    throw Error(ErrorCode::kConfig,
                "simulation.mode must be 'analytic' or 'empirical'");
  }
  if (simulation.samples < 1 || simulation.workers < 1) {
    throw Error(ErrorCode::kConfig,
                "simulation samples and workers must be >= 1");
  }
}

ExperimentConfig ParseConfig(const std::string& json_text) {
  Json j;
  try {
    j = Json::parse(json_text, nullptr, true, /*ignore_comments=*/true);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("invalid JSON: ") + e.what());
  }
  return FromJson(j);
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseConfig(buffer.str());
}

std::uint64_t Fnv1a64(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string ThresholdToJson(const GatingThreshold& threshold) {
  Json j;
  j["tau"] = threshold.tau;
  j["tau_hex"] = FormatHexDouble(threshold.tau);
  j["target_incorrect_rate"] = threshold.target_incorrect_rate;
  j["calibration_incorrect_rate"] = threshold.calibration_incorrect_rate;
  j["calibration_positives"] = threshold.calibration_positives;
  j["undersampled"] = threshold.undersampled;
  return j.dump(2) + "\n";
}

GatingThreshold ThresholdFromJson(const std::string& json_text) {
  GatingThreshold t;
  try {
    const Json j = Json::parse(json_text);
    t.tau = j.contains("tau_hex")
                ? ParseHexDouble(j.at("tau_hex").get<std::string>())
                : j.at("tau").get<double>();
    t.target_incorrect_rate = j.value("target_incorrect_rate", 0.0);
    t.calibration_incorrect_rate = j.value("calibration_incorrect_rate", 0.0);
    t.calibration_positives = j.value("calibration_positives", std::size_t{0});
    t.undersampled = j.value("undersampled", false);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kConfig,
                std::string("invalid threshold file: ") + e.what());
  }
  return t;
}

}  // namespace gatecade
