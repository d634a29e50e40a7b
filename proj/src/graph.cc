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

#include "gatecade/graph.h"

#include <algorithm>
#include <cmath>

#include "gatecade/error.h"

namespace gatecade {

// --- ParameterStore -------------------------------------------------------

double GlorotLimit(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

Parameter& ParameterStore::Create(const std::string& name, Shape shape,
                                  Init init, Rng& rng, double constant) {
  Tensor value(shape);
  switch (init) {
    case Init::kZeros:
      break;
    case Init::kConstant:
      value.Fill(constant);
      break;
    case Init::kGlorot: {
      const std::size_t fan_in = shape[0];
      const std::size_t fan_out = shape.size() > 1 ? shape[1] : 1;
      const double limit = GlorotLimit(fan_in, fan_out);
      for (double& v : value.values()) v = rng.Uniform(-limit, limit);
      break;
    }
  }
  return Add(name, std::move(value));
}

Parameter& ParameterStore::Add(const std::string& name, Tensor value) {
  if (params_.count(name) > 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "duplicate parameter name '" + name + "'");
  }
  Tensor grad = Tensor::ZerosLike(value);
  auto [it, inserted] =
      params_.emplace(name, Parameter{name, std::move(value), std::move(grad)});
  return it->second;
}

Parameter& ParameterStore::Get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw Error(ErrorCode::kInvalidArgument, "no parameter named '" + name + "'");
  }
  return it->second;
}

const Parameter& ParameterStore::Get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw Error(ErrorCode::kInvalidArgument, "no parameter named '" + name + "'");
  }
  return it->second;
}

std::vector<Parameter*> ParameterStore::All() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& [name, p] : params_) out.push_back(&p);
  return out;
}

std::vector<const Parameter*> ParameterStore::All() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& [name, p] : params_) out.push_back(&p);
  return out;
}

void ParameterStore::ZeroGrad() {
  for (auto& [name, p] : params_) p.grad.Fill(0.0);
}

// --- Graph ----------------------------------------------------------------

const Tensor& Var::value() const { return graph->value(id); }

Var Graph::Input(Tensor value, const std::string& name) {
  Node node;
  node.op = name;
  node.scope = scope_;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

Var Graph::Param(Parameter& param) {
  auto it = param_nodes_.find(&param);
  if (it != param_nodes_.end()) return Var{this, it->second};
  Node node;
  node.op = "param:" + param.name;
  node.scope = scope_;
  node.value = param.value;
  node.param = &param;
  node.needs_grad = true;
  nodes_.push_back(std::move(node));
  const int id = static_cast<int>(nodes_.size() - 1);
  param_nodes_[&param] = id;
  return Var{this, id};
}

Var Graph::Constant(const Parameter& param) {
  Node node;
  node.op = "const:" + param.name;
  node.scope = scope_;
  node.value = param.value;
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

Var ParamView::Get(Graph& graph, const std::string& name) const {
  if (mutable_ != nullptr) return graph.Param(mutable_->Get(name));
  return graph.Constant(store_->Get(name));
}

Var Graph::AddNode(std::string op, Tensor value, std::vector<int> inputs,
                   std::function<void(Graph&, int)> backward) {
  Node node;
  node.op = std::move(op);
  node.scope = scope_;
  node.value = std::move(value);
  node.needs_grad =
      backward && std::any_of(inputs.begin(), inputs.end(),
                              [this](int i) { return nodes_[i].needs_grad; });
  node.inputs = std::move(inputs);
  if (node.needs_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

void Graph::FailShape(const std::string& op, const std::string& detail) const {
  throw ShapeError(static_cast<int>(nodes_.size()), op, scope_, detail);
}

void Graph::Backward(Var loss) {
  if (loss.graph != this) {
    throw Error(ErrorCode::kInvalidArgument,
                "Backward: loss belongs to a different graph");
  }
  const Tensor& loss_value = nodes_.at(loss.id).value;
  if (loss_value.size() != 1) {
    throw Error(ErrorCode::kShapeMismatch,
                "Backward: loss must be scalar, got shape " +
                    ShapeToString(loss_value.shape()));
  }
  for (int i = 0; i <= loss.id; ++i) {
    Node& node = nodes_[i];
    if (node.needs_grad) node.grad = Tensor::ZerosLike(node.value);
  }
  if (!nodes_[loss.id].needs_grad) return;
  nodes_[loss.id].grad[0] = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& node = nodes_[i];
    if (!node.needs_grad) continue;
    if (node.backward) node.backward(*this, i);
    if (node.param != nullptr) {
      Tensor& dst = node.param->grad;
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += node.grad[j];
    }
  }
}

// --- Primitives -----------------------------------------------------------

double StableSigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

Graph& GraphOf(Var a) {
  if (a.graph == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "operation on an unbound Var");
  }
  return *a.graph;
}

Graph& GraphOf(Var a, Var b) {
  if (a.graph != b.graph) {
    throw Error(ErrorCode::kInvalidArgument,
                "operands belong to different graphs");
  }
  return GraphOf(a);
}

Shape Matrix(std::size_t rows, std::size_t cols) { return {rows, cols}; }

// Elementwise map with derivative expressed through input and output values.
template <typename F, typename D>
Var Elementwise(const char* op, Var x, F f, D dfdx) {
  Graph& g = GraphOf(x);
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  const int xi = x.id;
  return g.AddNode(op, std::move(out), {xi}, [xi, dfdx](Graph& gr, int self) {
    const Tensor& input = gr.value(xi);
    const Tensor& output = gr.value(self);
    const Tensor& dy = gr.node(self).grad;
    Tensor& dx = gr.mutable_grad(xi);
    for (std::size_t i = 0; i < dx.size(); ++i) {
      dx[i] += dy[i] * dfdx(input[i], output[i]);
    }
  });
}

}  // namespace

Var MatMul(Var a, Var b) {
  Graph& g = GraphOf(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t m = av.rows(), k = av.cols();
  if (bv.rank() > 2 || bv.rows() != k) {
    g.FailShape("matmul", "lhs " + ShapeToString(av.shape()) + " rhs " +
                              ShapeToString(bv.shape()));
  }
  const std::size_t n = bv.cols();
  Tensor out(Matrix(m, n));
  {
    const double* A = av.values().data();
    const double* B = bv.values().data();
    double* C = out.values().data();
    for (std::size_t i = 0; i < m; ++i) {
      double* c = C + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = A[i * k + p];
        if (aip == 0.0) continue;
        const double* b = B + p * n;
        for (std::size_t j = 0; j < n; ++j) c[j] += aip * b[j];
      }
    }
  }
  const int ai = a.id, bi = b.id;
  return g.AddNode(
      "matmul", std::move(out), {ai, bi},
      [ai, bi, m, k, n](Graph& gr, int self) {
        const double* dc = gr.node(self).grad.values().data();
        const double* A = gr.value(ai).values().data();
        const double* B = gr.value(bi).values().data();
        if (gr.needs_grad(ai)) {
          // dA = dC B^T, accumulated row by row against B^T so the inner
          // loop runs over contiguous memory.
          std::vector<double> bt(n * k);
          for (std::size_t p = 0; p < k; ++p) {
            for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = B[p * n + j];
          }
          double* da = gr.mutable_grad(ai).values().data();
          for (std::size_t i = 0; i < m; ++i) {
            double* row = da + i * k;
            for (std::size_t j = 0; j < n; ++j) {
              const double d = dc[i * n + j];
              if (d == 0.0) continue;
              const double* col = bt.data() + j * k;
              for (std::size_t p = 0; p < k; ++p) row[p] += d * col[p];
            }
          }
        }
        if (gr.needs_grad(bi)) {
          double* db = gr.mutable_grad(bi).values().data();
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t p = 0; p < k; ++p) {
              const double aip = A[i * k + p];
              if (aip == 0.0) continue;
              double* row = db + p * n;
              const double* d = dc + i * n;
              for (std::size_t j = 0; j < n; ++j) row[j] += aip * d[j];
            }
          }
        }
      });
}

Var AddBias(Var x, Var bias) {
  Graph& g = GraphOf(x, bias);
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  const std::size_t m = xv.rows(), n = xv.cols();
  if (bv.size() != n || bv.rows() != 1) {
    g.FailShape("add_bias", "input " + ShapeToString(xv.shape()) + " bias " +
                                ShapeToString(bv.shape()));
  }
  Tensor out = xv;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bv[j];
  }
  const int xi = x.id, bi = bias.id;
  return g.AddNode("add_bias", std::move(out), {xi, bi},
                   [xi, bi, m, n](Graph& gr, int self) {
                     const Tensor& dy = gr.node(self).grad;
                     if (gr.needs_grad(xi)) {
                       Tensor& dx = gr.mutable_grad(xi);
                       for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i];
                     }
                     if (gr.needs_grad(bi)) {
                       Tensor& db = gr.mutable_grad(bi);
                       for (std::size_t i = 0; i < m; ++i) {
                         for (std::size_t j = 0; j < n; ++j) {
                           db[j] += dy[i * n + j];
                         }
                       }
                     }
                   });
}

Var Dense(Var x, Var weight, Var bias) { return AddBias(MatMul(x, weight), bias); }

Var Add(Var a, Var b) {
  Graph& g = GraphOf(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.shape() != bv.shape()) {
    g.FailShape("add", ShapeToString(av.shape()) + " vs " +
                           ShapeToString(bv.shape()));
  }
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const int ai = a.id, bi = b.id;
  return g.AddNode("add", std::move(out), {ai, bi},
                   [ai, bi](Graph& gr, int self) {
                     const Tensor& dy = gr.node(self).grad;
                     for (int in : {ai, bi}) {
                       if (!gr.needs_grad(in)) continue;
                       Tensor& dx = gr.mutable_grad(in);
                       for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i];
                     }
                   });
}

Var Mul(Var a, Var b) {
  Graph& g = GraphOf(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const bool same = av.shape() == bv.shape();
  const bool row_broadcast =
      !same && bv.rows() == 1 && bv.size() == av.cols();
  if (!same && !row_broadcast) {
    g.FailShape("mul", ShapeToString(av.shape()) + " vs " +
                           ShapeToString(bv.shape()));
  }
  const std::size_t n = av.cols();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) {
    out[i] = av[i] * (same ? bv[i] : bv[i % n]);
  }
  const int ai = a.id, bi = b.id;
  return g.AddNode("mul", std::move(out), {ai, bi},
                   [ai, bi, same, n](Graph& gr, int self) {
                     const Tensor& dy = gr.node(self).grad;
                     const Tensor& A = gr.value(ai);
                     const Tensor& B = gr.value(bi);
                     if (gr.needs_grad(ai)) {
                       Tensor& da = gr.mutable_grad(ai);
                       for (std::size_t i = 0; i < da.size(); ++i) {
                         da[i] += dy[i] * (same ? B[i] : B[i % n]);
                       }
                     }
                     if (gr.needs_grad(bi)) {
                       Tensor& db = gr.mutable_grad(bi);
                       for (std::size_t i = 0; i < A.size(); ++i) {
                         db[same ? i : i % n] += dy[i] * A[i];
                       }
                     }
                   });
}

Var Scale(Var x, double factor) {
  return Elementwise(
      "scale", x, [factor](double v) { return factor * v; },
      [factor](double, double) { return factor; });
}

Var Relu(Var x) {
  return Elementwise(
      "relu", x, [](double v) { return v < 0.0 ? 0.0 : v; },
      [](double in, double) { return in > 0.0 ? 1.0 : 0.0; });
}

Var Sigmoid(Var x) {
  return Elementwise(
      "sigmoid", x, [](double v) { return StableSigmoid(v); },
      [](double, double out) { return out * (1.0 - out); });
}

Var Softmax(Var x) {
  Graph& g = GraphOf(x);
  const Tensor& xv = x.value();
  if (xv.rank() > 2) g.FailShape("softmax", "rank > 2: " + ShapeToString(xv.shape()));
  const std::size_t m = xv.rows(), n = xv.cols();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < m; ++i) {
    double mx = xv[i * n];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, xv[i * n + j]);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      out[i * n + j] = std::exp(xv[i * n + j] - mx);
      total += out[i * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= total;
  }
  const int xi = x.id;
  return g.AddNode("softmax", std::move(out), {xi},
                   [xi, m, n](Graph& gr, int self) {
                     const Tensor& y = gr.value(self);
                     const Tensor& dy = gr.node(self).grad;
                     Tensor& dx = gr.mutable_grad(xi);
                     for (std::size_t i = 0; i < m; ++i) {
                       double dot = 0.0;
                       for (std::size_t j = 0; j < n; ++j) {
                         dot += dy[i * n + j] * y[i * n + j];
                       }
                       for (std::size_t j = 0; j < n; ++j) {
                         dx[i * n + j] += y[i * n + j] * (dy[i * n + j] - dot);
                       }
                     }
                   });
}

Var Transpose(Var x) {
  Graph& g = GraphOf(x);
  const Tensor& xv = x.value();
  if (xv.rank() > 2) g.FailShape("transpose", "rank > 2: " + ShapeToString(xv.shape()));
  const std::size_t m = xv.rows(), n = xv.cols();
  Tensor out(Matrix(n, m));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = xv[i * n + j];
  }
  const int xi = x.id;
  return g.AddNode("transpose", std::move(out), {xi},
                   [xi, m, n](Graph& gr, int self) {
                     const Tensor& dy = gr.node(self).grad;
                     Tensor& dx = gr.mutable_grad(xi);
                     for (std::size_t i = 0; i < m; ++i) {
                       for (std::size_t j = 0; j < n; ++j) {
                         dx[i * n + j] += dy[j * m + i];
                       }
                     }
                   });
}

Var Sum(Var x) {
  Graph& g = GraphOf(x);
  double total = 0.0;
  for (double v : x.value().values()) total += v;
  const int xi = x.id;
  return g.AddNode("sum", Tensor::Scalar(total), {xi}, [xi](Graph& gr, int self) {
    const double dy = gr.node(self).grad[0];
    Tensor& dx = gr.mutable_grad(xi);
    for (double& v : dx.values()) v += dy;
  });
}

Var Mean(Var x) {
  Graph& g = GraphOf(x);
  const double count = static_cast<double>(x.value().size());
  double total = 0.0;
  for (double v : x.value().values()) total += v;
  const int xi = x.id;
  return g.AddNode("mean", Tensor::Scalar(total / count), {xi},
                   [xi, count](Graph& gr, int self) {
                     const double dy = gr.node(self).grad[0] / count;
                     Tensor& dx = gr.mutable_grad(xi);
                     for (double& v : dx.values()) v += dy;
                   });
}

Var MeanRows(Var x) {
  Graph& g = GraphOf(x);
  const Tensor& xv = x.value();
  const std::size_t m = xv.rows(), n = xv.cols();
  Tensor out(Matrix(1, n));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[j] += xv[i * n + j];
  }
  for (std::size_t j = 0; j < n; ++j) out[j] /= static_cast<double>(m);
  const int xi = x.id;
  return g.AddNode("mean_rows", std::move(out), {xi},
                   [xi, m, n](Graph& gr, int self) {
                     const Tensor& dy = gr.node(self).grad;
                     Tensor& dx = gr.mutable_grad(xi);
                     const double inv = 1.0 / static_cast<double>(m);
                     for (std::size_t i = 0; i < m; ++i) {
                       for (std::size_t j = 0; j < n; ++j) {
                         dx[i * n + j] += dy[j] * inv;
                       }
                     }
                   });
}

Var Concat(const std::vector<Var>& parts, int axis) {
  if (parts.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "Concat of zero tensors");
  }
  Graph& g = GraphOf(parts.front());
  if (axis != 0 && axis != 1) g.FailShape("concat", "axis must be 0 or 1");
  std::vector<int> ids;
  std::size_t rows = 0, cols = 0;
  for (const Var& p : parts) {
    GraphOf(parts.front(), p);
    const Tensor& v = p.value();
    if (v.rank() > 2) g.FailShape("concat", "rank > 2: " + ShapeToString(v.shape()));
    if (axis == 0) {
      if (cols != 0 && v.cols() != cols) {
        g.FailShape("concat", "column mismatch " + ShapeToString(v.shape()));
      }
      cols = v.cols();
      rows += v.rows();
    } else {
      if (rows != 0 && v.rows() != rows) {
        g.FailShape("concat", "row mismatch " + ShapeToString(v.shape()));
      }
      rows = v.rows();
      cols += v.cols();
    }
    ids.push_back(p.id);
  }
  Tensor out(Matrix(rows, cols));
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t i = 0; i < v.rows(); ++i) {
      for (std::size_t j = 0; j < v.cols(); ++j) {
        const double x = v[i * v.cols() + j];
        if (axis == 0) {
          out[(offset + i) * cols + j] = x;
        } else {
          out[i * cols + offset + j] = x;
        }
      }
    }
    offset += axis == 0 ? v.rows() : v.cols();
  }
  return g.AddNode("concat", std::move(out), ids,
                   [ids, axis, cols](Graph& gr, int self) {
                     const Tensor& dy = gr.node(self).grad;
                     std::size_t off = 0;
                     for (int in : ids) {
                       const Tensor& v = gr.value(in);
                       const std::size_t r = v.rows(), c = v.cols();
                       if (gr.needs_grad(in)) {
                         Tensor& dx = gr.mutable_grad(in);
                         for (std::size_t i = 0; i < r; ++i) {
                           for (std::size_t j = 0; j < c; ++j) {
                             dx[i * c + j] += axis == 0
                                                  ? dy[(off + i) * cols + j]
                                                  : dy[i * cols + off + j];
                           }
                         }
                       }
                       off += axis == 0 ? r : c;
                     }
                   });
}

Var L1Norm(Var x) {
  Graph& g = GraphOf(x);
  double total = 0.0;
  for (double v : x.value().values()) total += std::abs(v);
  const int xi = x.id;
  return g.AddNode("l1_norm", Tensor::Scalar(total), {xi},
                   [xi](Graph& gr, int self) {
                     const double dy = gr.node(self).grad[0];
                     const Tensor& in = gr.value(xi);
                     Tensor& dx = gr.mutable_grad(xi);
                     for (std::size_t i = 0; i < dx.size(); ++i) {
                       dx[i] += in[i] > 0.0 ? dy : (in[i] < 0.0 ? -dy : 0.0);
                     }
                   });
}

Var CrossEntropyWithLogits(Var logits, const std::vector<int>& labels) {
  Graph& g = GraphOf(logits);
  const Tensor& z = logits.value();
  const std::size_t m = z.rows(), n = z.cols();
  if (labels.size() != m) {
    g.FailShape("cross_entropy",
                "logits " + ShapeToString(z.shape()) + " with " +
                    std::to_string(labels.size()) + " labels");
  }
  Tensor probs(Matrix(m, n));
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= n) {
      g.FailShape("cross_entropy", "label " + std::to_string(labels[i]) +
                                       " outside [0, " + std::to_string(n) + ")");
    }
    double mx = z[i * n];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, z[i * n + j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      probs[i * n + j] = std::exp(z[i * n + j] - mx);
      sum += probs[i * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) probs[i * n + j] /= sum;
    total += mx + std::log(sum) - z[i * n + labels[i]];
  }
  const int zi = logits.id;
  return g.AddNode(
      "cross_entropy", Tensor::Scalar(total / static_cast<double>(m)), {zi},
      [zi, labels, probs = std::move(probs), m, n](Graph& gr, int self) {
        const double dy = gr.node(self).grad[0] / static_cast<double>(m);
        Tensor& dz = gr.mutable_grad(zi);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            const double onehot = static_cast<int>(j) == labels[i] ? 1.0 : 0.0;
            dz[i * n + j] += dy * (probs[i * n + j] - onehot);
          }
        }
      });
}

Var BinaryCrossEntropyWithLogits(Var logits,
                                 const std::vector<double>& targets) {
  Graph& g = GraphOf(logits);
  const Tensor& z = logits.value();
  if (targets.size() != z.size()) {
    g.FailShape("binary_cross_entropy",
                "logits " + ShapeToString(z.shape()) + " with " +
                    std::to_string(targets.size()) + " targets");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double x = z[i];
    total += std::max(x, 0.0) - x * targets[i] + std::log1p(std::exp(-std::abs(x)));
  }
  const double count = static_cast<double>(z.size());
  const int zi = logits.id;
  return g.AddNode("binary_cross_entropy", Tensor::Scalar(total / count), {zi},
                   [zi, targets, count](Graph& gr, int self) {
                     const double dy = gr.node(self).grad[0] / count;
                     const Tensor& x = gr.value(zi);
                     Tensor& dz = gr.mutable_grad(zi);
                     for (std::size_t i = 0; i < dz.size(); ++i) {
                       dz[i] += dy * (StableSigmoid(x[i]) - targets[i]);
                     }
                   });
}

Var ScaledDotProductAttention(Var q, Var k, Var v) {
  Graph& g = GraphOf(q, k);
  GraphOf(q, v);
  const Tensor& qv = q.value();
  const Tensor& kv = k.value();
  const Tensor& vv = v.value();
  if (qv.cols() != kv.cols() || kv.rows() != vv.rows()) {
    g.FailShape("attention", "q " + ShapeToString(qv.shape()) + " k " +
                                 ShapeToString(kv.shape()) + " v " +
                                 ShapeToString(vv.shape()));
  }
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(qv.cols()));
  Var weights = Softmax(Scale(MatMul(q, Transpose(k)), inv_sqrt_d));
  return MatMul(weights, v);
}

}  // namespace gatecade
