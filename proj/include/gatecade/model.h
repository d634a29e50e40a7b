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

// A backbone split into a prefix and a suffix at a GC layer.
//
// The backbone is a stack of `depth` blocks, each counting as one unit of
// depth:
//   block 0            input projection, relu(x W + b)
//   blocks 1..depth-2  MLP: relu(h + h W + b); attention: AttentionBlock
//   block depth-1      classifier head (attention pools tokens first)
// The prefix runs blocks [0, prefix_depth) and the suffix the rest, so the
// recorded mu is exactly prefix_depth / depth.

#ifndef GATECADE_MODEL_H_
#define GATECADE_MODEL_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gatecade/checkpoint.h"
#include "gatecade/dataset.h"
#include "gatecade/gc_layer.h"
#include "gatecade/graph.h"
#include "gatecade/layers.h"

namespace gatecade {

enum class BackboneKind { kMlp, kAttention };

BackboneKind ParseBackboneKind(const std::string& name);
std::string BackboneKindName(BackboneKind kind);

struct BackboneConfig {
  BackboneKind kind = BackboneKind::kMlp;
  std::size_t input_dim = 8;
  std::size_t width = 32;
  std::size_t depth = 20;
  std::size_t num_classes = 4;
  // Attention blocks only.
  std::size_t key_dim = 8;
  std::size_t mlp_hidden = 32;

  void Validate() const;
  AttentionConfig attention() const { return {width, key_dim, mlp_hidden}; }
  FeatureLayout layout() const {
    return kind == BackboneKind::kMlp ? FeatureLayout::kRowsAreSamples
                                      : FeatureLayout::kRowsAreTokens;
  }
};

// prefix_depth for a requested depth fraction: round(mu * depth), clamped to
// [1, depth - 1].
std::size_t PrefixDepthFor(double mu, std::size_t depth);

class PartitionedModel {
 public:
  // With `gc` unset the model is the ungated original: prefix and suffix run
  // back to back and every sample is fully evaluated.
  PartitionedModel(const BackboneConfig& backbone, std::size_t prefix_depth,
                   const ClassMap& class_map,
                   const std::optional<GcLayerOptions>& gc, Rng& rng);

  const BackboneConfig& backbone() const { return backbone_; }
  std::size_t prefix_depth() const { return prefix_depth_; }
  double mu() const {
    return static_cast<double>(prefix_depth_) /
           static_cast<double>(backbone_.depth);
  }
  const ClassMap& class_map() const { return class_map_; }

  bool has_gc() const { return gc_.has_value(); }
  GcLayer& gc() { return gc_.value(); }
  const GcLayer& gc() const { return gc_.value(); }

  ParameterStore& backbone_params() { return params_; }
  const ParameterStore& backbone_params() const { return params_; }
  // Backbone and GC parameters together.
  std::vector<Parameter*> TrainableParameters();
  void ZeroGrad();

  // Graph-level pieces. `input` is one batch: [samples, input_dim] for the
  // MLP backbone, or one sample [tokens, input_dim] for attention.
  Var Prefix(Graph& graph, const ParamView& params, Var input) const;
  // Returns logits, [samples, num_classes] (attention: [1, num_classes]).
  Var Suffix(Graph& graph, const ParamView& params, Var features) const;

  // Width of the tensor crossing the partition.
  std::size_t feature_width() const { return backbone_.width; }

  Checkpoint ToCheckpoint() const;
  static PartitionedModel FromCheckpoint(const Checkpoint& checkpoint);

 private:
  PartitionedModel() = default;
  void CreateBlock(std::size_t index, Rng& rng);
  Var Block(Graph& graph, const ParamView& params, std::size_t index,
            Var h) const;

  BackboneConfig backbone_;
  std::size_t prefix_depth_ = 1;
  ClassMap class_map_;
  ParameterStore params_;
  std::optional<GcLayer> gc_;
};

// Read-only inference helpers on a single sample.
struct PrefixResult {
  Tensor features;       // prefix output, before masking
  Tensor gated;          // binary-masked features (== features without GC)
  double gate_score = 0.0;  // 0 without GC
};

PrefixResult RunPrefix(const PartitionedModel& model, const Tensor& sample);
// Logits [1, num_classes] from gated prefix features.
Tensor RunSuffix(const PartitionedModel& model, const Tensor& gated);
int Argmax(std::span<const double> values);

// Gate scores for many samples, batched where the backbone allows it.
std::vector<double> GateScores(const PartitionedModel& model,
                               const std::vector<Tensor>& samples);

// Suffix evaluation that skips every multiply whose left operand is an exact
// zero (e.g. a masked-out feature). Numerically equal to RunSuffix up to
// summation order; `skipped` / `performed` count multiply-accumulates.
struct CompressedStats {
  long performed = 0;
  long skipped = 0;
};
Tensor RunSuffixCompressed(const PartitionedModel& model, const Tensor& gated,
                           CompressedStats* stats = nullptr);

}  // namespace gatecade

#endif  // GATECADE_MODEL_H_
