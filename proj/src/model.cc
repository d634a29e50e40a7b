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

#include "gatecade/model.h"

#include <algorithm>
#include <cmath>

#include "gatecade/error.h"

namespace gatecade {

BackboneKind ParseBackboneKind(const std::string& name) {
  if (name == "mlp") return BackboneKind::kMlp;
  if (name == "attention") return BackboneKind::kAttention;
  throw Error(ErrorCode::kConfig, "unknown backbone kind '" + name + "'");
}

std::string BackboneKindName(BackboneKind kind) {
  return kind == BackboneKind::kMlp ? "mlp" : "attention";
}

void BackboneConfig::Validate() const {
  if (input_dim == 0 || width == 0) {
    throw Error(ErrorCode::kInvalidArgument, "backbone widths must be positive");
  }
  if (depth < 2) {
    throw Error(ErrorCode::kInvalidArgument, "backbone depth must be >= 2");
  }
  if (num_classes < 2) {
    throw Error(ErrorCode::kInvalidArgument, "need at least two classes");
  }
  if (kind == BackboneKind::kAttention) attention().Validate();
}

std::size_t PrefixDepthFor(double mu, std::size_t depth) {
  if (!(mu > 0.0 && mu < 1.0)) {
    throw Error(ErrorCode::kOutOfRange, "mu must lie in (0, 1)");
  }
  const long k = std::lround(mu * static_cast<double>(depth));
  return static_cast<std::size_t>(
      std::clamp<long>(k, 1, static_cast<long>(depth) - 1));
}

namespace {

std::string BlockName(std::size_t index) {
  return "block" + std::to_string(index);
}

}  // namespace

PartitionedModel::PartitionedModel(const BackboneConfig& backbone,
                                   std::size_t prefix_depth,
                                   const ClassMap& class_map,
                                   const std::optional<GcLayerOptions>& gc,
                                   Rng& rng)
    : backbone_(backbone), prefix_depth_(prefix_depth), class_map_(class_map) {
  backbone_.Validate();
  if (prefix_depth < 1 || prefix_depth >= backbone_.depth) {
    throw Error(ErrorCode::kOutOfRange,
                "prefix depth must lie in [1, depth - 1], got " +
                    std::to_string(prefix_depth));
  }
  if (static_cast<std::size_t>(class_map.num_classes()) != backbone_.num_classes) {
    throw Error(ErrorCode::kInvalidArgument,
                "class map has " + std::to_string(class_map.num_classes()) +
                    " classes but backbone has " +
                    std::to_string(backbone_.num_classes));
  }
  for (std::size_t i = 0; i < backbone_.depth; ++i) CreateBlock(i, rng);
  if (gc.has_value()) {
    GcLayerOptions options = *gc;
    options.mu = mu();
    gc_.emplace(backbone_.width, options, rng);
  }
}

void PartitionedModel::CreateBlock(std::size_t index, Rng& rng) {
  const std::string name = BlockName(index);
  const std::size_t w = backbone_.width;
  if (index == 0) {
    CreateDenseParams(params_, name, backbone_.input_dim, w, rng);
  } else if (index + 1 == backbone_.depth) {
    CreateDenseParams(params_, name, w, backbone_.num_classes, rng);
  } else if (backbone_.kind == BackboneKind::kMlp) {
    CreateDenseParams(params_, name, w, w, rng);
  } else {
    CreateAttentionParams(params_, name, backbone_.attention(), rng);
  }
}

Var PartitionedModel::Block(Graph& graph, const ParamView& params,
                            std::size_t index, Var h) const {
  const std::string name = BlockName(index);
  graph.set_scope(name);
  if (index == 0) return Relu(DenseLayer(graph, params, name, h));
  if (index + 1 == backbone_.depth) {
    if (backbone_.kind == BackboneKind::kAttention) h = MeanRows(h);
    return DenseLayer(graph, params, name, h);
  }
  if (backbone_.kind == BackboneKind::kMlp) {
    return Relu(Add(h, DenseLayer(graph, params, name, h)));
  }
  return AttentionBlock(graph, params, name, backbone_.attention(), h);
}

Var PartitionedModel::Prefix(Graph& graph, const ParamView& params,
                             Var input) const {
  const Tensor& x = input.value();
  if (x.rank() != 2 || x.cols() != backbone_.input_dim) {
    graph.set_scope(BlockName(0));
    graph.FailShape("prefix_input",
                    "expected [*, " + std::to_string(backbone_.input_dim) +
                        "], got " + ShapeToString(x.shape()));
  }
  Var h = input;
  for (std::size_t i = 0; i < prefix_depth_; ++i) h = Block(graph, params, i, h);
  return h;
}

Var PartitionedModel::Suffix(Graph& graph, const ParamView& params,
                             Var features) const {
  if (features.value().cols() != backbone_.width) {
    graph.set_scope(BlockName(prefix_depth_));
    graph.FailShape("suffix_input",
                    "expected width " + std::to_string(backbone_.width) +
                        ", got " + ShapeToString(features.shape()));
  }
  Var h = features;
  for (std::size_t i = prefix_depth_; i < backbone_.depth; ++i) {
    h = Block(graph, params, i, h);
  }
  return h;
}

std::vector<Parameter*> PartitionedModel::TrainableParameters() {
  std::vector<Parameter*> out = params_.All();
  if (gc_) {
    for (Parameter* p : gc_->params().All()) out.push_back(p);
  }
  return out;
}

void PartitionedModel::ZeroGrad() {
  params_.ZeroGrad();
  if (gc_) gc_->params().ZeroGrad();
}

Checkpoint PartitionedModel::ToCheckpoint() const {
  Checkpoint ck;
  ck.meta["backbone.kind"] = BackboneKindName(backbone_.kind);
  ck.meta["backbone.input_dim"] = std::to_string(backbone_.input_dim);
  ck.meta["backbone.width"] = std::to_string(backbone_.width);
  ck.meta["backbone.depth"] = std::to_string(backbone_.depth);
  ck.meta["backbone.num_classes"] = std::to_string(backbone_.num_classes);
  ck.meta["backbone.key_dim"] = std::to_string(backbone_.key_dim);
  ck.meta["backbone.mlp_hidden"] = std::to_string(backbone_.mlp_hidden);
  ck.meta["prefix_depth"] = std::to_string(prefix_depth_);
  ck.meta["classes.positive"] = std::to_string(class_map_.num_positive());
  ck.meta["classes.background_originals"] =
      std::to_string(class_map_.num_originals() - class_map_.num_positive());
  ck.meta["gc.present"] = gc_ ? "1" : "0";
  if (gc_) {
    ck.SetMetaDouble("gc.alpha", gc_->alpha());
    ck.SetMetaDouble("gc.lambda", gc_->lambda_gc());
    ck.SetMetaDouble("gc.mu", gc_->mu());
    ck.AddStore(gc_->params(), "gc/");
  }
  ck.AddStore(params_, "backbone/");
  return ck;
}

PartitionedModel PartitionedModel::FromCheckpoint(const Checkpoint& ck) {
  PartitionedModel model;
  BackboneConfig& b = model.backbone_;
  b.kind = ParseBackboneKind(ck.MetaString("backbone.kind"));
  b.input_dim = static_cast<std::size_t>(ck.MetaInt("backbone.input_dim"));
  b.width = static_cast<std::size_t>(ck.MetaInt("backbone.width"));
  b.depth = static_cast<std::size_t>(ck.MetaInt("backbone.depth"));
  b.num_classes = static_cast<std::size_t>(ck.MetaInt("backbone.num_classes"));
  b.key_dim = static_cast<std::size_t>(ck.MetaInt("backbone.key_dim"));
  b.mlp_hidden = static_cast<std::size_t>(ck.MetaInt("backbone.mlp_hidden"));
  b.Validate();
  model.prefix_depth_ = static_cast<std::size_t>(ck.MetaInt("prefix_depth"));
  if (model.prefix_depth_ < 1 || model.prefix_depth_ >= b.depth) {
    throw Error(ErrorCode::kIo, "checkpoint prefix depth out of range");
  }
  model.class_map_ =
      ClassMap(static_cast<int>(ck.MetaInt("classes.positive")),
               static_cast<int>(ck.MetaInt("classes.background_originals")));
  ck.LoadStore(model.params_, "backbone/");
  if (ck.MetaString("gc.present") == "1") {
    ParameterStore gc_params;
    ck.LoadStore(gc_params, "gc/");
    GcLayerOptions options;
    options.alpha = ck.MetaDouble("gc.alpha");
    options.lambda_gc = ck.MetaDouble("gc.lambda");
    options.mu = ck.MetaDouble("gc.mu");
    model.gc_.emplace(std::move(gc_params), options);
    if (model.gc_->width() != b.width) {
      throw Error(ErrorCode::kShapeMismatch,
                  "checkpoint GC width does not match backbone width");
    }
  }
  return model;
}

PrefixResult RunPrefix(const PartitionedModel& model, const Tensor& sample) {
  Graph graph;
  const ParamView frozen = ParamView::Frozen(model.backbone_params());
  Var features = model.Prefix(graph, frozen, graph.Input(sample, "sample"));
  PrefixResult result;
  result.features = features.value();
  if (!model.has_gc()) {
    result.gated = result.features;
    return result;
  }
  graph.set_scope("gc");
  GcForwardOutput out = GcForward(graph, model.gc(), features, GcMode::kInfer,
                                  model.backbone().layout());
  if (out.gate_scores.value().size() != 1) {
    throw Error(ErrorCode::kShapeMismatch,
                "RunPrefix expects a single sample, got " +
                    ShapeToString(sample.shape()));
  }
  result.gate_score = out.gate_scores.value()[0];
  result.gated = out.gated_features.value();
  return result;
}

Tensor RunSuffix(const PartitionedModel& model, const Tensor& gated) {
  Graph graph;
  return model
      .Suffix(graph, ParamView::Frozen(model.backbone_params()),
              graph.Input(gated, "gated"))
      .value();
}

int Argmax(std::span<const double> values) {
  return static_cast<int>(std::max_element(values.begin(), values.end()) -
                          values.begin());
}

std::vector<double> GateScores(const PartitionedModel& model,
                               const std::vector<Tensor>& samples) {
  if (!model.has_gc()) {
    throw Error(ErrorCode::kInvalidArgument, "model has no GC layer");
  }
  std::vector<double> scores;
  scores.reserve(samples.size());
  if (model.backbone().kind == BackboneKind::kAttention) {
    for (const Tensor& s : samples) scores.push_back(RunPrefix(model, s).gate_score);
    return scores;
  }
  constexpr std::size_t kChunk = 512;
  for (std::size_t begin = 0; begin < samples.size(); begin += kChunk) {
    const std::size_t end = std::min(samples.size(), begin + kChunk);
    Graph graph;
    Tensor batch = StackRows(std::span<const Tensor>(samples).subspan(begin, end - begin));
    Var features = model.Prefix(graph, ParamView::Frozen(model.backbone_params()),
                                graph.Input(std::move(batch), "batch"));
    GcForwardOutput out = GcForward(graph, model.gc(), features, GcMode::kInfer,
                                    model.backbone().layout());
    for (double g : out.gate_scores.value().values()) scores.push_back(g);
  }
  return scores;
}

// --- Compressed suffix ----------------------------------------------------

namespace {

// x [m,k] * w [k,n], skipping every x entry that is exactly zero.
Tensor SparseMatMul(const Tensor& x, const Tensor& w, CompressedStats* stats) {
  const std::size_t m = x.rows(), k = x.cols(), n = w.cols();
  Tensor out({m, n});
  std::vector<std::size_t> nonzero;
  for (std::size_t i = 0; i < m; ++i) {
    nonzero.clear();
    for (std::size_t p = 0; p < k; ++p) {
      if (x[i * k + p] != 0.0) nonzero.push_back(p);
    }
    if (stats) {
      stats->performed += static_cast<long>(nonzero.size() * n);
      stats->skipped += static_cast<long>((k - nonzero.size()) * n);
    }
    for (std::size_t p : nonzero) {
      const double xp = x[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += xp * w[p * n + j];
    }
  }
  return out;
}

void AddBiasInPlace(Tensor& x, const Tensor& b) {
  const std::size_t n = x.cols();
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += b[i % n];
}

void ReluInPlace(Tensor& x) {
  for (double& v : x.values()) v = v < 0.0 ? 0.0 : v;
}

Tensor DenseCompressed(const ParameterStore& p, const std::string& name,
                       const Tensor& x, CompressedStats* stats) {
  Tensor y = SparseMatMul(x, p.Get(name + ".w").value, stats);
  AddBiasInPlace(y, p.Get(name + ".b").value);
  return y;
}

Tensor AttentionCompressed(const ParameterStore& p, const std::string& name,
                           const AttentionConfig& config, const Tensor& x,
                           CompressedStats* stats) {
  const std::size_t t = x.rows(), d = config.key_dim;
  const Tensor q = SparseMatMul(x, p.Get(name + ".wq").value, stats);
  const Tensor k = SparseMatMul(x, p.Get(name + ".wk").value, stats);
  const Tensor v = SparseMatMul(x, p.Get(name + ".wv").value, stats);
  Tensor weights({t, t});
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < t; ++i) {
    double mx = -INFINITY;
    for (std::size_t j = 0; j < t; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += q[i * d + c] * k[j * d + c];
      weights[i * t + j] = s * inv_sqrt_d;
      mx = std::max(mx, weights[i * t + j]);
    }
    double total = 0.0;
    for (std::size_t j = 0; j < t; ++j) {
      weights[i * t + j] = std::exp(weights[i * t + j] - mx);
      total += weights[i * t + j];
    }
    for (std::size_t j = 0; j < t; ++j) weights[i * t + j] /= total;
  }
  const Tensor mixed = SparseMatMul(weights, v, stats);
  Tensor h = SparseMatMul(mixed, p.Get(name + ".wo").value, stats);
  for (std::size_t i = 0; i < h.size(); ++i) h[i] += x[i];
  Tensor hidden = DenseCompressed(p, name + ".mlp1", h, stats);
  ReluInPlace(hidden);
  Tensor y = DenseCompressed(p, name + ".mlp2", hidden, stats);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += h[i];
  return y;
}

}  // namespace

Tensor RunSuffixCompressed(const PartitionedModel& model, const Tensor& gated,
                           CompressedStats* stats) {
  const BackboneConfig& b = model.backbone();
  const ParameterStore& p = model.backbone_params();
  if (gated.cols() != b.width) {
    throw Error(ErrorCode::kShapeMismatch,
                "compressed suffix expects width " + std::to_string(b.width));
  }
  Tensor h = gated.rank() == 2 ? gated : Tensor({1, gated.size()}, std::vector<double>(gated.values().begin(), gated.values().end()));
  for (std::size_t i = model.prefix_depth(); i < b.depth; ++i) {
    const std::string name = BlockName(i);
    if (i + 1 == b.depth) {
      if (b.kind == BackboneKind::kAttention) {
        Tensor pooled({1, b.width});
        for (std::size_t r = 0; r < h.rows(); ++r) {
          for (std::size_t c = 0; c < b.width; ++c) pooled[c] += h.at(r, c);
        }
        for (double& v : pooled.values()) v /= static_cast<double>(h.rows());
        h = std::move(pooled);
      }
      return DenseCompressed(p, name, h, stats);
    }
    if (b.kind == BackboneKind::kMlp) {
      Tensor y = DenseCompressed(p, name, h, stats);
      for (std::size_t j = 0; j < y.size(); ++j) y[j] += h[j];
      ReluInPlace(y);
      h = std::move(y);
    } else {
      h = AttentionCompressed(p, name, b.attention(), h, stats);
    }
  }
  return h;
}

}  // namespace gatecade
