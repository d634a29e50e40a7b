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


#include "test_util.h"

namespace gatecade::testing {

DatasetSpec SmallTaskSpec() {
  DatasetSpec spec;
  spec.n_train = 1500;
  spec.n_val = 1000;
  spec.n_test = 1000;
  spec.seed = 3;
  return spec;
}

BackboneConfig SmallBackbone(const DatasetSpec& spec) {
  BackboneConfig backbone;
  backbone.input_dim = spec.input_dim;
  backbone.num_classes = static_cast<std::size_t>(spec.num_positive_classes) + 1;
  backbone.width = 16;
  backbone.depth = 10;
  return backbone;
}

TrainConfig SmallTrainConfig(double mu) {
  TrainConfig config;
  config.epochs = 6;
  config.hardening_epochs = 3;
  config.mu = mu;
  return config;
}

SmallTask TrainSmallTask(double mu, std::uint64_t seed) {
  const DatasetSpec spec = SmallTaskSpec();
  DatasetSplits data = GenerateDataset(spec);
  TrainConfig config = SmallTrainConfig(mu);
  config.seed = seed;
  TrainResult trained = Train(SmallBackbone(spec), config, data.train);
  return {std::move(data), std::move(trained.model)};
}

}  // namespace gatecade::testing
