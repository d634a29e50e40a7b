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

#include "gatecade/checkpoint.h"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "gatecade/error.h"

namespace gatecade {
namespace {

constexpr char kMagic[] = "gatecade-checkpoint";
constexpr int kVersion = 1;

[[noreturn]] void Malformed(const std::string& what) {
  throw Error(ErrorCode::kIo, "malformed checkpoint: " + what);
}

}  // namespace

std::string FormatHexDouble(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", value);
  return buf;
}

double ParseHexDouble(const std::string& text) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0') {
    throw Error(ErrorCode::kIo, "cannot parse number '" + text + "'");
  }
  return v;
}

void Checkpoint::SetMetaDouble(const std::string& key, double value) {
  meta[key] = FormatHexDouble(value);
}

double Checkpoint::MetaDouble(const std::string& key) const {
  return ParseHexDouble(MetaString(key));
}

long Checkpoint::MetaInt(const std::string& key) const {
  const std::string& text = MetaString(key);
  char* end = nullptr;
  const long v = std::strtol(text.c_str(), &end, 10);
  if (end == text.c_str() || *end != '\0') {
    throw Error(ErrorCode::kIo, "meta '" + key + "' is not an integer");
  }
  return v;
}

const std::string& Checkpoint::MetaString(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) {
    throw Error(ErrorCode::kIo, "checkpoint has no meta key '" + key + "'");
  }
  return it->second;
}

void Checkpoint::AddStore(const ParameterStore& store,
                          const std::string& prefix) {
  for (const Parameter* p : store.All()) tensors[prefix + p->name] = p->value;
}

void Checkpoint::LoadStore(ParameterStore& store,
                           const std::string& prefix) const {
  for (const auto& [name, value] : tensors) {
    if (name.compare(0, prefix.size(), prefix) != 0) continue;
    const std::string local = name.substr(prefix.size());
    if (store.Contains(local)) {
      Parameter& p = store.Get(local);
      if (p.value.shape() != value.shape()) {
        throw Error(ErrorCode::kShapeMismatch,
                    "checkpoint tensor '" + name + "' has shape " +
                        ShapeToString(value.shape()) + ", parameter has " +
                        ShapeToString(p.value.shape()));
      }
      p.value = value;
    } else {
      store.Add(local, value);
    }
  }
}

void WriteCheckpoint(std::ostream& out, const Checkpoint& checkpoint) {
  out << kMagic << ' ' << kVersion << '\n';
  for (const auto& [key, value] : checkpoint.meta) {
    if (key.find_first_of(" \n") != std::string::npos ||
        value.find('\n') != std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument,
                  "checkpoint meta key/value contains a separator: " + key);
    }
    out << "meta " << key << ' ' << value << '\n';
  }
  for (const auto& [name, tensor] : checkpoint.tensors) {
    out << "tensor " << name << ' ' << tensor.rank();
    for (std::size_t d : tensor.shape()) out << ' ' << d;
    out << '\n';
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      out << (i == 0 ? "" : " ") << FormatHexDouble(tensor[i]);
    }
    out << '\n';
  }
  out << "end\n";
}

Checkpoint ReadCheckpoint(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kMagic) Malformed("bad header");
  if (version != kVersion) {
    Malformed("unsupported version " + std::to_string(version));
  }
  Checkpoint checkpoint;
  std::string kind;
  while (in >> kind) {
    if (kind == "end") return checkpoint;
    if (kind == "meta") {
      std::string key, value;
      in >> key;
      std::getline(in, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      checkpoint.meta[key] = value;
    } else if (kind == "tensor") {
      std::string name;
      std::size_t rank = 0;
      if (!(in >> name >> rank) || rank == 0) Malformed("tensor header");
      Shape shape(rank);
      for (std::size_t& d : shape) {
        if (!(in >> d)) Malformed("shape of '" + name + "'");
      }
      std::vector<double> values(NumElements(shape));
      std::string token;
      for (double& v : values) {
        if (!(in >> token)) Malformed("values of '" + name + "'");
        v = ParseHexDouble(token);
      }
      checkpoint.tensors.emplace(name, Tensor(std::move(shape), std::move(values)));
    } else {
      Malformed("unknown record '" + kind + "'");
    }
  }
  Malformed("missing end marker");
}

void SaveCheckpoint(const std::string& path, const Checkpoint& checkpoint) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  WriteCheckpoint(out, checkpoint);
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  return ReadCheckpoint(in);
}

}  // namespace gatecade
