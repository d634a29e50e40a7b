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

#include "gatecade/tensor.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "gatecade/error.h"

namespace gatecade {

std::string ShapeToString(const Shape& shape) {
  std::ostringstream out;
  out << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out << ",";
    out << shape[i];
  }
  out << "]";
  return out.str();
}

std::size_t NumElements(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

namespace {

void CheckShape(const Shape& shape) {
  if (shape.empty()) {
    throw Error(ErrorCode::kShapeMismatch, "tensor shape must have rank >= 1");
  }
  for (std::size_t d : shape) {
    if (d == 0) {
      throw Error(ErrorCode::kShapeMismatch,
                  "tensor dimensions must be positive, got " +
                      ShapeToString(shape));
    }
  }
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  CheckShape(shape_);
  data_.assign(NumElements(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  CheckShape(shape_);
  if (NumElements(shape_) != data_.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "shape " + ShapeToString(shape_) + " holds " +
                    std::to_string(NumElements(shape_)) + " values, got " +
                    std::to_string(data_.size()));
  }
}

Tensor Tensor::Vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::Matrix(std::size_t rows, std::size_t cols,
                      std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

std::size_t Tensor::rows() const {
  if (shape_.size() == 1) return 1;
  return NumElements(shape_) / shape_.back();
}

std::size_t Tensor::cols() const { return shape_.back(); }

double Tensor::item() const {
  if (data_.size() != 1) {
    throw Error(ErrorCode::kShapeMismatch,
                "item() on non-scalar tensor " + ShapeToString(shape_));
  }
  return data_[0];
}

void Tensor::Fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

bool Tensor::BitEquals(const Tensor& other) const {
  return shape_ == other.shape_ &&
         std::memcmp(data_.data(), other.data_.data(),
                     data_.size() * sizeof(double)) == 0;
}

Tensor StackRows(std::span<const Tensor> parts) {
  if (parts.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "StackRows on empty input");
  }
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  std::vector<double> data;
  for (const Tensor& part : parts) {
    if (part.cols() != cols) {
      throw Error(ErrorCode::kShapeMismatch,
                  "StackRows width mismatch: " + ShapeToString(part.shape()));
    }
    rows += part.rows();
    data.insert(data.end(), part.values().begin(), part.values().end());
  }
  return Tensor({rows, cols}, std::move(data));
}

double MaxAbsDiff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw Error(ErrorCode::kShapeMismatch,
                "MaxAbsDiff shape mismatch " + ShapeToString(a.shape()) +
                    " vs " + ShapeToString(b.shape()));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  return worst;
}

}  // namespace gatecade
