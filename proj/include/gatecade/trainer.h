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


// Mini-batch training of a partitioned model with Adam.

#ifndef GATECADE_TRAINER_H_
#define GATECADE_TRAINER_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gatecade/dataset.h"
#include "gatecade/model.h"
#include "gatecade/optimizer.h"

namespace gatecade {

struct ScheduleConfig {
  // "constant", "cosine" or "piecewise".
  std::string kind = "cosine";
  double learning_rate = 0.01;
  // Cosine: final rate as a fraction of learning_rate.
  double terminal_fraction = 0.0;
  // Piecewise: step boundaries and one more value than boundaries.
  std::vector<long> boundaries;
  std::vector<double> values;

  // `total_steps` is the cosine decay horizon.
  LrSchedule Build(long total_steps) const;
};

struct TrainConfig {
  int epochs = 8;
  std::size_t batch_size = 64;
  ScheduleConfig schedule;
  AdamOptions adam;
  // Requested depth fraction of the prefix; realized as PrefixDepthFor(mu).
  double mu = 0.3;
  // Unset trains the ungated baseline.
  std::optional<GcLayerOptions> gc = GcLayerOptions{
      .alpha = 0.5, .lambda_gc = 1.25, .mu = 0.3, .mask_init_logit = 3.0};
  // The last `hardening_epochs` of `epochs` run with every mask logit
  // saturated to +/-kHardenedMaskLogit (same side of 0.5 as before) and
  // frozen, so the soft mask seen in training equals the inference mask.
  int hardening_epochs = 4;
  std::uint64_t seed = 0;
};

inline constexpr double kHardenedMaskLogit = 30.0;

// Saturates the mask logits of `layer` without changing its binary mask.
void HardenMask(GcLayer& layer);

struct TrainLogEntry {
  long step = 0;
  int epoch = 0;
  double learning_rate = 0.0;
  double task_loss = 0.0;
  double gate_loss = 0.0;      // 0 without GC
  double sparsity_loss = 0.0;  // 0 without GC
  double total_loss = 0.0;
};

struct TrainResult {
  PartitionedModel model;
  std::vector<TrainLogEntry> log;
};

// Parameters are initialized from DeriveSeed(seed, 0) and batches shuffled
// from DeriveSeed(seed, 1). A non-finite loss aborts with a kNumeric error.
TrainResult Train(const BackboneConfig& backbone, const TrainConfig& config,
                  const Dataset& train);

// CSV: step,epoch,learning_rate,task_loss,gate_loss,sparsity_loss,total_loss
void WriteTrainLog(std::ostream& out, const std::vector<TrainLogEntry>& log);

}  // namespace gatecade

#endif  // GATECADE_TRAINER_H_
