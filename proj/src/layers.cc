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

#include "gatecade/layers.h"

#include "gatecade/error.h"

namespace gatecade {

void CreateDenseParams(ParameterStore& store, const std::string& name,
                       std::size_t in, std::size_t out, Rng& rng) {
  store.Create(name + ".w", {in, out}, Init::kGlorot, rng);
  store.Create(name + ".b", {out}, Init::kZeros, rng);
}

Var DenseLayer(Graph& graph, const ParamView& params, const std::string& name,
               Var x) {
  return Dense(x, params.Get(graph, name + ".w"), params.Get(graph, name + ".b"));
}

void AttentionConfig::Validate() const {
  if (width == 0 || key_dim == 0 || mlp_hidden == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "attention widths must be positive");
  }
  if (width % key_dim != 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "attention width " + std::to_string(width) +
                    " is not divisible by key_dim " + std::to_string(key_dim));
  }
}

void CreateAttentionParams(ParameterStore& store, const std::string& name,
                           const AttentionConfig& config, Rng& rng) {
  config.Validate();
  const std::size_t w = config.width, d = config.key_dim;
  store.Create(name + ".wq", {w, d}, Init::kGlorot, rng);
  store.Create(name + ".wk", {w, d}, Init::kGlorot, rng);
  store.Create(name + ".wv", {w, d}, Init::kGlorot, rng);
  store.Create(name + ".wo", {d, w}, Init::kGlorot, rng);
  CreateDenseParams(store, name + ".mlp1", w, config.mlp_hidden, rng);
  CreateDenseParams(store, name + ".mlp2", config.mlp_hidden, w, rng);
}

Var AttentionBlock(Graph& graph, const ParamView& params,
                   const std::string& name, const AttentionConfig& config,
                   Var x) {
  config.Validate();
  if (x.value().rank() != 2 || x.value().cols() != config.width) {
    graph.FailShape("attention_block",
                    "expected [tokens, " + std::to_string(config.width) +
                        "], got " + ShapeToString(x.shape()));
  }
  Var q = MatMul(x, params.Get(graph, name + ".wq"));
  Var k = MatMul(x, params.Get(graph, name + ".wk"));
  Var v = MatMul(x, params.Get(graph, name + ".wv"));
  Var attended = MatMul(ScaledDotProductAttention(q, k, v),
                        params.Get(graph, name + ".wo"));
  Var h = Add(x, attended);
  Var hidden = Relu(DenseLayer(graph, params, name + ".mlp1", h));
  return Add(h, DenseLayer(graph, params, name + ".mlp2", hidden));
}

}  // namespace gatecade
