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

#include "gatecade/gc_layer.h"

#include <algorithm>
#include <cmath>

#include "gatecade/error.h"

namespace gatecade {

GcLayer::GcLayer(std::size_t width, const GcLayerOptions& options, Rng& rng)
    : width_(width),
      alpha_(options.alpha),
      lambda_gc_(options.lambda_gc),
      mu_(options.mu) {
  if (width == 0) {
    throw Error(ErrorCode::kInvalidArgument, "GC layer width must be positive");
  }
  Validate();
  params_.Create("gate.w", {width, 1}, Init::kGlorot, rng);
  params_.Create("gate.b", {1}, Init::kZeros, rng);
  params_.Create("mask_logits", {width}, Init::kConstant, rng,
                 options.mask_init_logit);
}

GcLayer::GcLayer(ParameterStore params, const GcLayerOptions& options)
    : alpha_(options.alpha),
      lambda_gc_(options.lambda_gc),
      mu_(options.mu),
      params_(std::move(params)) {
  Validate();
  const Tensor& logits = params_.Get("mask_logits").value;
  width_ = logits.size();
  if (params_.Get("gate.w").value.shape() != Shape{width_, 1} ||
      params_.Get("gate.b").value.size() != 1) {
    throw Error(ErrorCode::kShapeMismatch,
                "GC gate head does not match mask width " +
                    std::to_string(width_));
  }
}

void GcLayer::Validate() const {
  if (!(alpha_ >= 0.0 && alpha_ <= 1.0)) {
    throw Error(ErrorCode::kOutOfRange, "alpha must lie in [0, 1]");
  }
  if (!(lambda_gc_ >= 0.0) || !std::isfinite(lambda_gc_)) {
    throw Error(ErrorCode::kOutOfRange, "lambda_gc must be finite and >= 0");
  }
  if (!(mu_ > 0.0 && mu_ < 1.0)) {
    throw Error(ErrorCode::kOutOfRange, "mu must lie in (0, 1)");
  }
}

void GcLayer::set_alpha(double alpha) {
  const double old = alpha_;
  alpha_ = alpha;
  try {
    Validate();
  } catch (...) {
    alpha_ = old;
    throw;
  }
}

void GcLayer::set_lambda_gc(double lambda_gc) {
  const double old = lambda_gc_;
  lambda_gc_ = lambda_gc;
  try {
    Validate();
  } catch (...) {
    lambda_gc_ = old;
    throw;
  }
}

void GcLayer::set_mu(double mu) {
  const double old = mu_;
  mu_ = mu;
  try {
    Validate();
  } catch (...) {
    mu_ = old;
    throw;
  }
}

Tensor GcLayer::SoftMask() const {
  Tensor mask = params_.Get("mask_logits").value;
  for (double& v : mask.values()) v = StableSigmoid(v);
  return mask;
}

Tensor GcLayer::BinaryMask() const {
  Tensor mask = SoftMask();
  for (double& v : mask.values()) v = v >= 0.5 ? 1.0 : 0.0;
  return mask;
}

GcForwardOutput GcForward(Graph& graph, const ParamView& params,
                          std::size_t width, Var features, GcMode mode,
                          FeatureLayout layout) {
  const Tensor& x = features.value();
  if (x.rank() > 2 || x.cols() != width) {
    graph.FailShape("gc_forward", "features " + ShapeToString(x.shape()) +
                                      " vs mask width " + std::to_string(width));
  }
  GcForwardOutput out;
  Var pooled = layout == FeatureLayout::kRowsAreTokens ? MeanRows(features)
                                                       : features;
  out.gate_logits = Dense(pooled, params.Get(graph, "gate.w"),
                          params.Get(graph, "gate.b"));
  out.gate_scores = Sigmoid(out.gate_logits);

  Var logits = params.Get(graph, "mask_logits");
  out.soft_mask = Sigmoid(logits);
  out.binary_mask = Tensor(out.soft_mask.value().shape());
  for (std::size_t i = 0; i < width; ++i) {
    out.binary_mask[i] = out.soft_mask.value()[i] >= 0.5 ? 1.0 : 0.0;
  }
  out.applied_mask = mode == GcMode::kTrain
                         ? out.soft_mask
                         : graph.Input(out.binary_mask, "binary_mask");
  out.gated_features = Mul(features, out.applied_mask);
  return out;
}

GcForwardOutput GcForward(Graph& graph, GcLayer& layer, Var features,
                          GcMode mode, FeatureLayout layout) {
  return GcForward(graph, ParamView::Trainable(layer.params()), layer.width(),
                   features, mode, layout);
}

GcForwardOutput GcForward(Graph& graph, const GcLayer& layer, Var features,
                          GcMode mode, FeatureLayout layout) {
  return GcForward(graph, ParamView::Frozen(layer.params()), layer.width(),
                   features, mode, layout);
}

GcLoss ComputeGcLoss(const GcLayer& layer, const GcForwardOutput& output,
                     Var task_loss, const std::vector<int>& background) {
  std::vector<double> targets(background.begin(), background.end());
  GcLoss loss;
  loss.task_loss = task_loss;
  loss.gate_loss = BinaryCrossEntropyWithLogits(output.gate_logits, targets);
  const double width = static_cast<double>(layer.width());
  loss.sparsity_loss = Scale(L1Norm(output.soft_mask), 1.0 / width);
  Var gc_term = Add(Scale(loss.gate_loss, layer.alpha()),
                    Scale(loss.sparsity_loss, layer.beta()));
  loss.total = Add(task_loss, Scale(gc_term, layer.lambda_gc()));
  return loss;
}

double MeasureSparsity(std::span<const double> values) {
  if (values.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "sparsity of an empty tensor is undefined");
  }
  const auto zeros = std::count(values.begin(), values.end(), 0.0);
  return static_cast<double>(zeros) / static_cast<double>(values.size());
}

}  // namespace gatecade
