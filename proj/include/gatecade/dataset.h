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

// Synthetic always-on datasets. Every generator draws from a set of
// "original" classes: some are positives (signals of interest) and the rest
// are background sub-classes that are remapped to a single background label,
// the way a detection task folds every non-target class into one bucket.

#ifndef GATECADE_DATASET_H_
#define GATECADE_DATASET_H_

#include <cstdint>
#include <string>
#include <vector>

#include "gatecade/tensor.h"

namespace gatecade {

enum class GeneratorKind { kGaussianClusters, kRingVsNoise, kTokenSequences };

GeneratorKind ParseGeneratorKind(const std::string& name);
std::string GeneratorKindName(GeneratorKind kind);

// Original label -> model class. Positive originals keep their index
// 0..num_positive-1; every background original maps to `background()`.
class ClassMap {
 public:
  ClassMap() = default;
  ClassMap(int num_positive, int num_background_originals);

  int num_positive() const { return num_positive_; }
  int num_classes() const { return num_positive_ + 1; }
  int background() const { return num_positive_; }
  int num_originals() const { return num_positive_ + num_background_; }
  int Map(int original) const;
  bool IsBackground(int mapped) const { return mapped == num_positive_; }

 private:
  int num_positive_ = 1;
  int num_background_ = 1;
};

struct DatasetSpec {
  GeneratorKind generator = GeneratorKind::kGaussianClusters;
  int num_positive_classes = 3;
  int num_background_classes = 5;
  double rho = 0.2;
  std::size_t n_train = 24000;
  std::size_t n_val = 5000;
  std::size_t n_test = 5000;
  std::uint64_t seed = 7;
  bool stratified = true;
  std::size_t input_dim = 8;
  // Token count for token-sequences.
  std::size_t tokens = 6;
  // Minimum distance from a positive cluster center to any background
  // center, in units of the per-class noise standard deviation.
  double separation = 3.0;
  // Minimum distance between two positive centers, as a multiple of
  // `separation`.
  double positive_spacing = 2.0;
  double noise_std = 1.0;

  void Validate() const;
};

struct Dataset {
  // Per sample: [1, input_dim] for vector generators, [tokens, input_dim]
  // for token sequences.
  std::vector<Tensor> inputs;
  std::vector<int> labels;           // mapped
  std::vector<int> original_labels;  // before remapping
  ClassMap class_map;

  std::size_t size() const { return inputs.size(); }
  bool IsBackground(std::size_t i) const {
    return class_map.IsBackground(labels[i]);
  }
  std::size_t CountPositives() const;
};

struct DatasetSplits {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Ground-truth parameters of the generator for a spec (seeded, so identical
// to what GenerateDataset uses).
struct GeneratorParameters {
  // Gaussian clusters: one center per original class. Token sequences: one
  // motif per original class.
  std::vector<std::vector<double>> centers;
  double noise_std = 1.0;
  double ring_radius = 0.0;
};

GeneratorParameters DescribeGenerator(const DatasetSpec& spec);
DatasetSplits GenerateDataset(const DatasetSpec& spec);

// Stratified positive count for a split of size n: round(rho * n).
std::size_t StratifiedPositiveCount(double rho, std::size_t n);

}  // namespace gatecade

#endif  // GATECADE_DATASET_H_
