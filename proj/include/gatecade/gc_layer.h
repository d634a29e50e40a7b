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

// Gated compression layer: a binary gate head that scores how likely a sample
// is background, plus a per-feature mask that zeroes features before they are
// handed to the rest of the network.
//
// Training objective (added to the task loss):
//   lambda_gc * (alpha * BCE(gate, is_background) + beta * mean(soft_mask))
// with beta = 1 - alpha always.

#ifndef GATECADE_GC_LAYER_H_
#define GATECADE_GC_LAYER_H_

#include <vector>

#include "gatecade/graph.h"

namespace gatecade {

enum class GcMode { kTrain, kInfer };

// How the rows of a feature matrix map to samples. Vector backbones put one
// sample per row; token backbones pass one sample as [tokens, width].
enum class FeatureLayout { kRowsAreSamples, kRowsAreTokens };

struct GcLayerOptions {
  double alpha = 0.5;
  double lambda_gc = 1.0;
  // Fraction of the backbone depth that runs before the layer, in (0, 1).
  double mu = 0.3;
  // Initial value of every mask logit (sigmoid(1) ~ 0.73, i.e. mostly open).
  double mask_init_logit = 1.0;
};

class GcLayer {
 public:
  // Parameters: "gate.w" [width, 1] (Glorot), "gate.b" [1], "mask_logits"
  // [width] (constant mask_init_logit).
  GcLayer(std::size_t width, const GcLayerOptions& options, Rng& rng);
  // Adopts existing parameters (e.g. from a checkpoint).
  GcLayer(ParameterStore params, const GcLayerOptions& options);

  std::size_t width() const { return width_; }
  double alpha() const { return alpha_; }
  double beta() const { return 1.0 - alpha_; }
  double lambda_gc() const { return lambda_gc_; }
  double mu() const { return mu_; }

  void set_alpha(double alpha);
  void set_lambda_gc(double lambda_gc);
  void set_mu(double mu);

  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

  // sigmoid(mask_logits), shape [width].
  Tensor SoftMask() const;
  // 1[sigmoid(mask_logits) >= 0.5], shape [width].
  Tensor BinaryMask() const;

 private:
  void Validate() const;

  std::size_t width_ = 0;
  double alpha_ = 0.5;
  double lambda_gc_ = 1.0;
  double mu_ = 0.3;
  ParameterStore params_;
};

struct GcForwardOutput {
  // Masked features handed to the suffix (same shape as the input features).
  Var gated_features;
  // Gate logit and score per sample, shape [samples, 1]. The score is the
  // probability that the sample is background.
  Var gate_logits;
  Var gate_scores;
  // Mask actually applied: the soft sigmoid mask in training, the binary
  // mask (as a constant) at inference. Shape [width].
  Var applied_mask;
  Var soft_mask;
  Tensor binary_mask;
};

// Gate head: mean over the token axis (identity for one-sample-per-row
// layouts), then a single dense unit and a sigmoid. The gate reads the
// unmasked features.
GcForwardOutput GcForward(Graph& graph, const ParamView& params,
                          std::size_t width, Var features, GcMode mode,
                          FeatureLayout layout);
GcForwardOutput GcForward(Graph& graph, GcLayer& layer, Var features,
                          GcMode mode, FeatureLayout layout);
GcForwardOutput GcForward(Graph& graph, const GcLayer& layer, Var features,
                          GcMode mode, FeatureLayout layout);

struct GcLoss {
  Var task_loss;
  Var gate_loss;      // mean BCE of gate score vs. background label
  Var sparsity_loss;  // mean |soft_mask|
  Var total;          // task + lambda_gc * (alpha * gate + beta * sparsity)
};

// `background` holds one 0/1 label per sample (1 = background/negative).
GcLoss ComputeGcLoss(const GcLayer& layer, const GcForwardOutput& output,
                     Var task_loss, const std::vector<int>& background);

// Fraction of exactly-zero entries. Throws on an empty span.
double MeasureSparsity(std::span<const double> values);
inline double MeasureSparsity(const Tensor& t) {
  return MeasureSparsity(t.values());
}

}  // namespace gatecade

#endif  // GATECADE_GC_LAYER_H_
