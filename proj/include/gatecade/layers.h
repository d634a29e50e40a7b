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

#ifndef GATECADE_LAYERS_H_
#define GATECADE_LAYERS_H_

#include <string>

#include "gatecade/graph.h"

namespace gatecade {

// Creates "<name>.w" [in, out] (Glorot) and "<name>.b" [out] (zeros).
void CreateDenseParams(ParameterStore& store, const std::string& name,
                       std::size_t in, std::size_t out, Rng& rng);
Var DenseLayer(Graph& graph, const ParamView& params, const std::string& name,
               Var x);

// Single-head attention block without layer normalization:
//   h = x + softmax(x Wq (x Wk)^T / sqrt(key_dim)) (x Wv) Wo
//   y = h + relu(h W1 + b1) W2 + b2
struct AttentionConfig {
  std::size_t width = 16;
  // Query/key/value projection size; must divide width.
  std::size_t key_dim = 8;
  std::size_t mlp_hidden = 32;

  void Validate() const;
};

void CreateAttentionParams(ParameterStore& store, const std::string& name,
                           const AttentionConfig& config, Rng& rng);

// x: [tokens, width]. Output has the same shape.
Var AttentionBlock(Graph& graph, const ParamView& params,
                   const std::string& name, const AttentionConfig& config,
                   Var x);

}  // namespace gatecade

#endif  // GATECADE_LAYERS_H_
