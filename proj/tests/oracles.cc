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


#include <algorithm>
#include <set>

#include "test_util.h"

namespace gatecade::testing {

std::vector<RocPoint> BruteForceRoc(const std::vector<double>& positives,
                                    const std::vector<double>& negatives) {
  std::set<double, std::greater<>> candidates(positives.begin(),
                                              positives.end());
  candidates.insert(negatives.begin(), negatives.end());
  candidates.insert(kNeverStopThreshold);
  std::vector<RocPoint> curve;
  for (double tau : candidates) {
    std::size_t fp = 0, tn = 0;
    for (double s : positives) fp += s >= tau;
    for (double s : negatives) tn += s >= tau;
    curve.push_back({tau,
                     static_cast<double>(fp) / static_cast<double>(positives.size()),
                     static_cast<double>(tn) / static_cast<double>(negatives.size())});
  }
  return curve;
}

ConfusionMetrics MetricsFromLog(const std::vector<DecisionRecord>& log,
                                int num_classes) {
  const int background = num_classes - 1;
  std::vector<std::vector<long>> matrix(num_classes,
                                        std::vector<long>(num_classes, 0));
  long negatives = 0, negatives_stopped = 0, positives = 0,
       positives_stopped = 0;
  for (const DecisionRecord& r : log) {
    ++matrix[r.label][r.predicted_class];
    if (r.label == background) {
      ++negatives;
      negatives_stopped += r.stopped;
    } else {
      ++positives;
      positives_stopped += r.stopped;
    }
  }
  long tp = 0, predicted_positive = 0;
  for (int c = 0; c < background; ++c) {
    tp += matrix[c][c];
    for (int r = 0; r < num_classes; ++r) predicted_positive += matrix[r][c];
  }
  auto ratio = [](long num, long den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  return {ratio(negatives_stopped, negatives),
          ratio(positives_stopped, positives), ratio(tp, predicted_positive),
          ratio(tp, positives)};
}

double MaxSparsePathDifference(const PartitionedModel& model,
                               const Dataset& data, long* skipped) {
  double worst = 0.0;
  long total_skipped = 0;
  for (const Tensor& sample : data.inputs) {
    const PrefixResult prefix = RunPrefix(model, sample);
    CompressedStats stats;
    const Tensor dense = RunSuffix(model, prefix.gated);
    const Tensor sparse = RunSuffixCompressed(model, prefix.gated, &stats);
    worst = std::max(worst, MaxAbsDiff(dense, sparse));
    total_skipped += stats.skipped;
  }
  if (skipped != nullptr) *skipped = total_skipped;
  return worst;
}

}  // namespace gatecade::testing
