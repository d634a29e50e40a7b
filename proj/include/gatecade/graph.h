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

// Reverse-mode automatic differentiation over a tape of dense operations.
//
// A Graph is built eagerly: every operation computes its value immediately
// and appends a node that remembers its inputs and how to push a gradient
// back to them. Nodes are therefore stored in topological order and
// Backward() is a single reverse sweep.
//
//   ParameterStore store;
//   Parameter& w = store.Create("w", {3, 2}, Init::kGlorot, rng);
//   Graph g;
//   Var y = Relu(MatMul(g.Input(x), g.Param(w)));
//   g.Backward(Sum(y));  // w.grad now holds d sum(y) / d w
//
// A graph is single-threaded. Distinct graphs share nothing except the
// parameters they read, and only Backward() writes to those (their grads).

#ifndef GATECADE_GRAPH_H_
#define GATECADE_GRAPH_H_

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "gatecade/random.h"
#include "gatecade/tensor.h"

namespace gatecade {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

enum class Init { kZeros, kGlorot, kConstant };

// Named parameters with stable addresses. Iteration order is by name, which
// keeps checkpoints and optimizer sweeps deterministic.
class ParameterStore {
 public:
  ParameterStore() = default;
  // Glorot uses fan_in = shape[0], fan_out = shape[1] (or 1 for vectors).
  Parameter& Create(const std::string& name, Shape shape, Init init, Rng& rng,
                    double constant = 0.0);
  Parameter& Add(const std::string& name, Tensor value);

  Parameter& Get(const std::string& name);
  const Parameter& Get(const std::string& name) const;
  bool Contains(const std::string& name) const {
    return params_.count(name) > 0;
  }

  std::vector<Parameter*> All();
  std::vector<const Parameter*> All() const;
  std::size_t size() const { return params_.size(); }

  void ZeroGrad();

 private:
  std::map<std::string, Parameter> params_;
};

// Glorot/Xavier uniform limit sqrt(6 / (fan_in + fan_out)).
double GlorotLimit(std::size_t fan_in, std::size_t fan_out);

class Graph;

// Handle to a node of a Graph.
struct Var {
  Graph* graph = nullptr;
  int id = -1;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

class Graph {
 public:
  struct Node {
    std::string op;
    std::string scope;
    Tensor value;
    Tensor grad;
    std::vector<int> inputs;
    // Reads this node's grad and accumulates into the inputs' grads.
    std::function<void(Graph&, int)> backward;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var Input(Tensor value, const std::string& name = "input");
  // Leaf bound to a parameter; repeated calls for the same parameter return
  // the same node. Backward() accumulates into param.grad.
  Var Param(Parameter& param);
  // Frozen copy of a parameter value; never receives gradients.
  Var Constant(const Parameter& param);

  // Reverse sweep from a scalar loss. Parameter grads are accumulated (not
  // overwritten), so call ParameterStore::ZeroGrad() between steps.
  void Backward(Var loss);

  const Node& node(int id) const { return nodes_.at(id); }
  const Tensor& grad(Var v) const { return nodes_.at(v.id).grad; }
  std::size_t num_nodes() const { return nodes_.size(); }

  // Label attached to subsequently created nodes (used in error messages).
  void set_scope(std::string scope) { scope_ = std::move(scope); }
  const std::string& scope() const { return scope_; }

  // Appends a node. `backward` may be empty for non-differentiable nodes.
  Var AddNode(std::string op, Tensor value, std::vector<int> inputs,
              std::function<void(Graph&, int)> backward);
  [[noreturn]] void FailShape(const std::string& op,
                              const std::string& detail) const;

  Tensor& mutable_grad(int id) { return nodes_[id].grad; }
  const Tensor& value(int id) const { return nodes_[id].value; }
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }

 private:
  std::vector<Node> nodes_;
  std::map<const Parameter*, int> param_nodes_;
  std::string scope_;
};

// Reads parameters from a store into a graph, either as trainable leaves or
// as frozen constants (read-only inference on a const model).
class ParamView {
 public:
  static ParamView Trainable(ParameterStore& store) {
    return ParamView(&store, &store);
  }
  static ParamView Frozen(const ParameterStore& store) {
    return ParamView(nullptr, &store);
  }

  Var Get(Graph& graph, const std::string& name) const;
  bool trainable() const { return mutable_ != nullptr; }
  const ParameterStore& store() const { return *store_; }

 private:
  ParamView(ParameterStore* mutable_store, const ParameterStore* store)
      : mutable_(mutable_store), store_(store) {}

  ParameterStore* mutable_;
  const ParameterStore* store_;
};

// --- Primitives -----------------------------------------------------------
// 2-D operands are [rows, cols]; a rank-1 operand of length n is a row.

Var MatMul(Var a, Var b);                 // [m,k] x [k,n] -> [m,n]
Var AddBias(Var x, Var bias);             // [m,n] + [n] broadcast over rows
Var Dense(Var x, Var weight, Var bias);   // MatMul + AddBias
Var Add(Var a, Var b);                    // same shape
Var Mul(Var a, Var b);                    // same shape, or [m,n] * [n]
Var Scale(Var x, double factor);
Var Relu(Var x);
Var Sigmoid(Var x);
Var Softmax(Var x);                       // row-wise
Var Transpose(Var x);                     // 2-D only
Var Sum(Var x);                           // -> scalar
Var Mean(Var x);                          // -> scalar
Var MeanRows(Var x);                      // [m,n] -> [1,n]
Var Concat(const std::vector<Var>& parts, int axis);  // axis 0 or 1
Var L1Norm(Var x);                        // sum |x| -> scalar
// Mean softmax cross-entropy over rows; labels[i] indexes a column.
Var CrossEntropyWithLogits(Var logits, const std::vector<int>& labels);
// Mean binary cross-entropy of sigmoid(logits) against targets in [0, 1].
Var BinaryCrossEntropyWithLogits(Var logits,
                                 const std::vector<double>& targets);
// softmax(q k^T / sqrt(d_k)) v for q,k: [t,d_k], v: [t,d_v].
Var ScaledDotProductAttention(Var q, Var k, Var v);

// Numerically stable scalar logistic.
double StableSigmoid(double x);

}  // namespace gatecade

#endif  // GATECADE_GRAPH_H_
