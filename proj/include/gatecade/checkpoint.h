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

// Plain-text checkpoint of named tensors plus string metadata.
//
//   gatecade-checkpoint 1
//   meta <key> <value...>
//   tensor <name> <rank> <dim_0> ... <dim_{rank-1}>
//   <value> <value> ...            (C99 hexadecimal floats, %a)
//   end
//
// Values are written as hexadecimal floating point, so a save/load cycle
// reproduces every double bit for bit. Metadata values must not contain
// newlines. Numeric metadata written with SetMetaDouble is also hex.

#ifndef GATECADE_CHECKPOINT_H_
#define GATECADE_CHECKPOINT_H_

#include <iosfwd>
#include <map>
#include <string>

#include "gatecade/graph.h"

namespace gatecade {

struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::map<std::string, Tensor> tensors;

  void SetMetaDouble(const std::string& key, double value);
  double MetaDouble(const std::string& key) const;
  long MetaInt(const std::string& key) const;
  const std::string& MetaString(const std::string& key) const;

  void AddStore(const ParameterStore& store, const std::string& prefix = "");
  // Copies every tensor under `prefix` into the store (names stripped of the
  // prefix); creates missing parameters.
  void LoadStore(ParameterStore& store, const std::string& prefix = "") const;
};

std::string FormatHexDouble(double value);
double ParseHexDouble(const std::string& text);

void WriteCheckpoint(std::ostream& out, const Checkpoint& checkpoint);
Checkpoint ReadCheckpoint(std::istream& in);
void SaveCheckpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint LoadCheckpoint(const std::string& path);

}  // namespace gatecade

#endif  // GATECADE_CHECKPOINT_H_
