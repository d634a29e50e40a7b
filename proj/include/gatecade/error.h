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

#ifndef GATECADE_ERROR_H_
#define GATECADE_ERROR_H_

#include <stdexcept>
#include <string>

namespace gatecade {

// Failure categories. The CLI maps each one to a distinct exit code.
enum class ErrorCode {
  kInvalidArgument = 2,
  kShapeMismatch = 3,
  kOutOfRange = 4,
  kNumeric = 5,
  kIo = 6,
  kConfig = 7,
};

const char* ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Raised by graph operations. Carries the node that rejected its inputs.
class ShapeError : public Error {
 public:
  ShapeError(int node_index, std::string op, std::string scope,
             const std::string& detail);

  int node_index() const { return node_index_; }
  const std::string& op() const { return op_; }
  const std::string& scope() const { return scope_; }

 private:
  int node_index_;
  std::string op_;
  std::string scope_;
};

}  // namespace gatecade

#endif  // GATECADE_ERROR_H_
