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


#include "gatecade/trainer.h"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "gatecade/error.h"
#include "gatecade/random.h"

namespace gatecade {

LrSchedule ScheduleConfig::Build(long total_steps) const {
  if (!(learning_rate > 0.0)) {
    throw Error(ErrorCode::kConfig, "learning_rate must be positive");
  }
  if (kind == "constant") return LrSchedule::Constant(learning_rate);
  if (kind == "cosine") {
    return LrSchedule::CosineDecay(learning_rate, std::max(total_steps, 1L),
                                   terminal_fraction);
  }
  if (kind == "piecewise") return LrSchedule::PiecewiseConstant(boundaries, values);
  throw Error(ErrorCode::kConfig, "unknown schedule '" + kind + "'");
}

namespace {

struct BatchLoss {
  Var total;
  Var task;
  std::optional<GcLoss> gc;
};

BatchLoss ForwardBatch(Graph& graph, PartitionedModel& model,
                       const Dataset& data,
                       const std::vector<std::size_t>& indices) {
  const ParamView backbone = ParamView::Trainable(model.backbone_params());
  const FeatureLayout layout = model.backbone().layout();
  std::vector<int> labels;
  std::vector<int> background;
  for (std::size_t i : indices) {
    labels.push_back(data.labels[i]);
    background.push_back(data.class_map.IsBackground(data.labels[i]) ? 1 : 0);
  }

  Var logits;
  std::optional<GcForwardOutput> gc_out;
  if (layout == FeatureLayout::kRowsAreSamples) {
    std::vector<Tensor> rows;
    for (std::size_t i : indices) rows.push_back(data.inputs[i]);
    Var features = model.Prefix(graph, backbone,
                                graph.Input(StackRows(rows), "batch"));
    if (model.has_gc()) {
      graph.set_scope("gc");
      gc_out = GcForward(graph, model.gc(), features, GcMode::kTrain, layout);
      features = gc_out->gated_features;
    }
    logits = model.Suffix(graph, backbone, features);
  } else {
    // Token backbones take one sample per forward pass; per-sample outputs
    // are stacked so the batch loss matches the vector case.
    std::vector<Var> sample_logits;
    std::vector<Var> gate_logits;
    std::vector<Var> gate_scores;
    for (std::size_t i : indices) {
      Var features =
          model.Prefix(graph, backbone, graph.Input(data.inputs[i], "sample"));
      if (model.has_gc()) {
        graph.set_scope("gc");
        GcForwardOutput out =
            GcForward(graph, model.gc(), features, GcMode::kTrain, layout);
        if (!gc_out) gc_out = out;
        gate_logits.push_back(out.gate_logits);
        gate_scores.push_back(out.gate_scores);
        features = out.gated_features;
      }
      sample_logits.push_back(model.Suffix(graph, backbone, features));
    }
    logits = Concat(sample_logits, 0);
    if (gc_out) {
      gc_out->gate_logits = Concat(gate_logits, 0);
      gc_out->gate_scores = Concat(gate_scores, 0);
    }
  }

  graph.set_scope("loss");
  BatchLoss loss;
  loss.task = CrossEntropyWithLogits(logits, labels);
  loss.total = loss.task;
  if (gc_out) {
    loss.gc = ComputeGcLoss(model.gc(), *gc_out, loss.task, background);
    loss.total = loss.gc->total;
  }
  return loss;
}

double ScalarValue(Var v) { return v.value().item(); }

}  // namespace

void HardenMask(GcLayer& layer) {
  for (double& v : layer.params().Get("mask_logits").value.values()) {
    v = StableSigmoid(v) >= 0.5 ? kHardenedMaskLogit : -kHardenedMaskLogit;
  }
}

TrainResult Train(const BackboneConfig& backbone, const TrainConfig& config,
                  const Dataset& train) {
  if (config.epochs < 0) {
    throw Error(ErrorCode::kConfig, "epochs must be >= 0");
  }
  if (config.batch_size == 0) {
    throw Error(ErrorCode::kConfig, "batch_size must be positive");
  }
  if (config.hardening_epochs < 0 || config.hardening_epochs > config.epochs) {
    throw Error(ErrorCode::kConfig, "hardening_epochs must lie in [0, epochs]");
  }
  if (train.size() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "empty training set");
  }
  Rng init_rng(DeriveSeed(config.seed, 0));
  Rng shuffle_rng(DeriveSeed(config.seed, 1));
  TrainResult result{
      PartitionedModel(backbone, PrefixDepthFor(config.mu, backbone.depth),
                       train.class_map, config.gc, init_rng),
      {}};
  PartitionedModel& model = result.model;

  const std::size_t batches =
      (train.size() + config.batch_size - 1) / config.batch_size;
  const long total_steps = static_cast<long>(batches) * config.epochs;
  const LrSchedule schedule = config.schedule.Build(total_steps);
  Adam adam(config.adam);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Parameter*> params = model.TrainableParameters();

  long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (model.has_gc() && epoch == config.epochs - config.hardening_epochs) {
      HardenMask(model.gc());
      std::erase_if(params, [](const Parameter* p) {
        return p->name == "mask_logits";
      });
    }
    shuffle_rng.Shuffle(order);
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t begin = b * config.batch_size;
      const std::size_t end = std::min(train.size(), begin + config.batch_size);
      std::vector<std::size_t> indices(order.begin() + begin, order.begin() + end);

      model.ZeroGrad();
      Graph graph;
      BatchLoss loss = ForwardBatch(graph, model, train, indices);
      TrainLogEntry entry;
      entry.step = ++step;
      entry.epoch = epoch;
      entry.learning_rate = schedule.Rate(step - 1);
      entry.task_loss = ScalarValue(loss.task);
      entry.total_loss = ScalarValue(loss.total);
      if (loss.gc) {
        entry.gate_loss = ScalarValue(loss.gc->gate_loss);
        entry.sparsity_loss = ScalarValue(loss.gc->sparsity_loss);
      }
      if (!std::isfinite(entry.total_loss)) {
        throw Error(ErrorCode::kNumeric,
                    "training diverged: non-finite loss at step " +
                        std::to_string(step) + " (epoch " +
                        std::to_string(epoch) + ", task loss " +
                        std::to_string(entry.task_loss) + ")");
      }
      graph.Backward(loss.total);
      adam.Step(params, schedule, step);
      result.log.push_back(entry);
    }
  }
  return result;
}

void WriteTrainLog(std::ostream& out, const std::vector<TrainLogEntry>& log) {
  out << "step,epoch,learning_rate,task_loss,gate_loss,sparsity_loss,"
         "total_loss\n";
  char buf[256];
  for (const TrainLogEntry& e : log) {
    std::snprintf(buf, sizeof(buf), "%ld,%d,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  e.step, e.epoch, e.learning_rate, e.task_loss, e.gate_loss,
                  e.sparsity_loss, e.total_loss);
    out << buf;
  }
}

}  // namespace gatecade
