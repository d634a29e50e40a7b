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

#include "gatecade/dataset.h"

#include <algorithm>
#include <cmath>

#include "gatecade/error.h"
#include "gatecade/random.h"

namespace gatecade {

GeneratorKind ParseGeneratorKind(const std::string& name) {
  if (name == "gaussian-clusters") return GeneratorKind::kGaussianClusters;
  if (name == "ring-vs-noise") return GeneratorKind::kRingVsNoise;
  if (name == "token-sequences") return GeneratorKind::kTokenSequences;
  throw Error(ErrorCode::kConfig, "unknown dataset generator '" + name + "'");
}

std::string GeneratorKindName(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::kGaussianClusters:
      return "gaussian-clusters";
    case GeneratorKind::kRingVsNoise:
      return "ring-vs-noise";
    case GeneratorKind::kTokenSequences:
      return "token-sequences";
  }
  return "unknown";
}

ClassMap::ClassMap(int num_positive, int num_background_originals)
    : num_positive_(num_positive), num_background_(num_background_originals) {
  if (num_positive < 1 || num_background_originals < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "class map needs at least one positive and one background "
                "class");
  }
}

int ClassMap::Map(int original) const {
  if (original < 0 || original >= num_originals()) {
    throw Error(ErrorCode::kOutOfRange,
                "original label " + std::to_string(original) + " out of range");
  }
  return original < num_positive_ ? original : num_positive_;
}

std::size_t Dataset::CountPositives() const {
  std::size_t n = 0;
  for (int label : labels) n += class_map.IsBackground(label) ? 0 : 1;
  return n;
}

std::size_t StratifiedPositiveCount(double rho, std::size_t n) {
  return static_cast<std::size_t>(std::llround(rho * static_cast<double>(n)));
}

void DatasetSpec::Validate() const {
  if (num_positive_classes < 1 || num_background_classes < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "need >= 1 positive and >= 1 background class");
  }
  if (!(rho > 0.0 && rho < 1.0)) {
    throw Error(ErrorCode::kOutOfRange, "rho must lie in (0, 1)");
  }
  if (input_dim < 2) {
    throw Error(ErrorCode::kInvalidArgument, "input_dim must be >= 2");
  }
  if (generator == GeneratorKind::kTokenSequences && tokens < 1) {
    throw Error(ErrorCode::kInvalidArgument, "tokens must be >= 1");
  }
  if (!(separation > 0.0) || !(noise_std > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "separation and noise_std must be positive");
  }
  if (!(positive_spacing > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "positive_spacing must be positive");
  }
  for (std::size_t n : {n_train, n_val, n_test}) {
    if (n == 0) {
      throw Error(ErrorCode::kInvalidArgument, "split sizes must be positive");
    }
    if (!stratified) continue;
    const std::size_t pos = StratifiedPositiveCount(rho, n);
    if (pos < static_cast<std::size_t>(num_positive_classes) || pos == n) {
      throw Error(ErrorCode::kInvalidArgument,
                  "infeasible class counts: split of " + std::to_string(n) +
                      " gives " + std::to_string(pos) + " positives for " +
                      std::to_string(num_positive_classes) +
                      " positive classes");
    }
  }
}

namespace {

double Distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

std::vector<double> RandomUnit(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double norm = 0.0;
  while (norm < 1e-6) {
    norm = 0.0;
    for (double& x : v) {
      x = rng.Normal();
      norm += x * x;
    }
    norm = std::sqrt(norm);
  }
  for (double& x : v) x /= norm;
  return v;
}

// Gaussian clusters: centers are drawn at scale separation/2 and positives
// are re-drawn until every positive center is at least `separation` noise
// standard deviations from every background center and `positive_spacing`
// times that from every other positive center.
std::vector<std::vector<double>> ClusterCenters(const DatasetSpec& spec,
                                                Rng& rng) {
  const int total = spec.num_positive_classes + spec.num_background_classes;
  const double scale = 0.5 * spec.separation * spec.noise_std;
  const double min_dist = spec.separation * spec.noise_std;
  std::vector<std::vector<double>> centers(total,
                                           std::vector<double>(spec.input_dim));
  // Background centers first so positives are placed relative to them.
  for (int c = spec.num_positive_classes; c < total; ++c) {
    for (double& x : centers[c]) x = scale * rng.Normal();
  }
  for (int c = 0; c < spec.num_positive_classes; ++c) {
    for (int attempt = 0;; ++attempt) {
      if (attempt > 100000) {
        throw Error(ErrorCode::kInvalidArgument,
                    "cannot place positive clusters at the requested "
                    "separation; reduce separation or raise input_dim");
      }
      for (double& x : centers[c]) x = scale * rng.Normal();
      bool ok = true;
      for (int o = 0; o < total && ok; ++o) {
        if (o == c || (o < spec.num_positive_classes && o > c)) continue;
        const double needed =
            o < spec.num_positive_classes ? spec.positive_spacing * min_dist
                                          : min_dist;
        ok = Distance(centers[c], centers[o]) >= needed;
      }
      if (ok) break;
    }
  }
  return centers;
}

std::vector<std::vector<double>> TokenMotifs(const DatasetSpec& spec,
                                             Rng& rng) {
  const int total = spec.num_positive_classes + spec.num_background_classes;
  std::vector<std::vector<double>> motifs;
  for (int c = 0; c < total; ++c) {
    std::vector<double> m = RandomUnit(rng, spec.input_dim);
    for (double& x : m) x *= spec.separation * spec.noise_std;
    motifs.push_back(std::move(m));
  }
  return motifs;
}

Tensor DrawSample(const DatasetSpec& spec, const GeneratorParameters& params,
                  int original, Rng& rng) {
  const std::size_t d = spec.input_dim;
  const double sd = spec.noise_std;
  const int positives = spec.num_positive_classes;
  switch (spec.generator) {
    case GeneratorKind::kGaussianClusters: {
      Tensor x({1, d});
      for (std::size_t i = 0; i < d; ++i) {
        x[i] = params.centers[original][i] + sd * rng.Normal();
      }
      return x;
    }
    case GeneratorKind::kRingVsNoise: {
      Tensor x({1, d});
      for (std::size_t i = 0; i < d; ++i) x[i] = sd * rng.Normal();
      if (original < positives) {
        // Positive class k owns the k-th arc of the ring in dims (0, 1).
        const double width = 2.0 * M_PI / positives;
        const double angle = width * (original + rng.Uniform());
        x[0] += params.ring_radius * std::cos(angle);
        x[1] += params.ring_radius * std::sin(angle);
      } else {
        // Background sub-classes differ only in spread.
        const double spread = 1.0 + 0.25 * (original - positives);
        x[0] *= spread;
        x[1] *= spread;
      }
      return x;
    }
    case GeneratorKind::kTokenSequences: {
      Tensor x({spec.tokens, d});
      for (double& v : x.values()) v = sd * rng.Normal();
      const std::size_t at = rng.Index(spec.tokens);
      for (std::size_t i = 0; i < d; ++i) {
        x[at * d + i] += params.centers[original][i];
      }
      return x;
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown generator");
}

Dataset DrawSplit(const DatasetSpec& spec, const GeneratorParameters& params,
                  std::size_t n, Rng& rng) {
  Dataset split;
  split.class_map = ClassMap(spec.num_positive_classes,
                             spec.num_background_classes);
  std::vector<int> originals;
  originals.reserve(n);
  if (spec.stratified) {
    const std::size_t pos = StratifiedPositiveCount(spec.rho, n);
    for (std::size_t i = 0; i < pos; ++i) {
      originals.push_back(static_cast<int>(i % spec.num_positive_classes));
    }
    for (std::size_t i = 0; i < n - pos; ++i) {
      originals.push_back(spec.num_positive_classes +
                          static_cast<int>(i % spec.num_background_classes));
    }
    rng.Shuffle(originals);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      if (rng.Bernoulli(spec.rho)) {
        originals.push_back(static_cast<int>(rng.Index(spec.num_positive_classes)));
      } else {
        originals.push_back(spec.num_positive_classes +
                            static_cast<int>(rng.Index(spec.num_background_classes)));
      }
    }
  }
  for (int original : originals) {
    split.inputs.push_back(DrawSample(spec, params, original, rng));
    split.original_labels.push_back(original);
    split.labels.push_back(split.class_map.Map(original));
  }
  return split;
}

}  // namespace

GeneratorParameters DescribeGenerator(const DatasetSpec& spec) {
  spec.Validate();
  Rng rng(DeriveSeed(spec.seed, 0));
  GeneratorParameters params;
  params.noise_std = spec.noise_std;
  switch (spec.generator) {
    case GeneratorKind::kGaussianClusters:
      params.centers = ClusterCenters(spec, rng);
      break;
    case GeneratorKind::kRingVsNoise:
      params.ring_radius = spec.separation * spec.noise_std;
      break;
    case GeneratorKind::kTokenSequences:
      params.centers = TokenMotifs(spec, rng);
      break;
  }
  return params;
}

DatasetSplits GenerateDataset(const DatasetSpec& spec) {
  const GeneratorParameters params = DescribeGenerator(spec);
  DatasetSplits splits;
  Rng train_rng(DeriveSeed(spec.seed, 1));
  Rng val_rng(DeriveSeed(spec.seed, 2));
  Rng test_rng(DeriveSeed(spec.seed, 3));
  splits.train = DrawSplit(spec, params, spec.n_train, train_rng);
  splits.val = DrawSplit(spec, params, spec.n_val, val_rng);
  splits.test = DrawSplit(spec, params, spec.n_test, test_rng);
  return splits;
}

}  // namespace gatecade
