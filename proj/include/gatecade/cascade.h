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

// Early-stopping cascade: threshold calibration, gated inference and the
// gating/detection metrics computed over a decision log.
//
// A sample is early-stopped when its gate score g >= tau. Stopped samples are
// predicted as background and never reach the suffix.

#ifndef GATECADE_CASCADE_H_
#define GATECADE_CASCADE_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gatecade/dataset.h"
#include "gatecade/model.h"

namespace gatecade {

// The threshold that never stops anything: the successor of 1.0, strictly
// above every representable gate score.
inline constexpr double kNeverStopThreshold = 0x1.0000000000001p+0;

struct GatingThreshold {
  double tau = kNeverStopThreshold;
  double target_incorrect_rate = 0.01;
  // Incorrect-gating rate achieved on the calibration positives.
  double calibration_incorrect_rate = 0.0;
  std::size_t calibration_positives = 0;
  // Fewer than 1 / target positives were available.
  bool undersampled = false;
};

// Smallest tau among the unique positive scores (plus kNeverStopThreshold)
// such that the fraction of positives with score >= tau is <= target.
GatingThreshold Calibrate(std::span<const double> positive_scores,
                          double target_incorrect_rate);

enum class Outcome { kEarlyStopped, kFullInference };

struct InferenceDecision {
  Outcome outcome = Outcome::kFullInference;
  double gate_score = 0.0;
  int predicted_class = 0;
  double depth_fraction = 1.0;
  // Sparsity of the tensor handed to the suffix (unset when stopped).
  std::optional<double> transmitted_sparsity;
};

// Work counters. Only the caller's counters change; the model is read-only.
struct CascadeCounters {
  std::uint64_t prefix_evaluations = 0;
  std::uint64_t suffix_evaluations = 0;
};

InferenceDecision Infer(const PartitionedModel& model,
                        const GatingThreshold& threshold, const Tensor& sample,
                        CascadeCounters* counters = nullptr);

struct DecisionRecord {
  std::size_t sample_id = 0;
  int label = 0;
  double gate_score = 0.0;
  bool stopped = false;
  int predicted_class = 0;
  double depth_fraction = 1.0;
  double transmitted_sparsity = 0.0;  // meaningless when stopped
};

// Additive counts. Merging is associative and order independent, so shards
// of a test set can be evaluated separately.
struct GatingCounts {
  std::uint64_t negatives = 0;
  std::uint64_t negatives_stopped = 0;
  std::uint64_t positives = 0;
  std::uint64_t positives_stopped = 0;
  std::uint64_t passed = 0;
  double passed_sparsity_sum = 0.0;
  std::uint64_t true_positive = 0;       // positive predicted as its class
  std::uint64_t predicted_positive = 0;  // predicted as any positive class

  void Add(const DecisionRecord& record, const ClassMap& class_map);
  GatingCounts& operator+=(const GatingCounts& other);
};

// Rates of one run. Unset optionals mark an undefined ratio (empty class).
struct GatingStats {
  std::optional<double> correct_gating_rate;
  std::optional<double> incorrect_gating_rate;
  std::optional<double> sparsity;  // mean over samples that reached the suffix
  std::optional<double> precision;
  std::optional<double> recall;

  static GatingStats FromCounts(const GatingCounts& counts);
};

struct MetricSummary {
  double mean = 0.0;
  double variance = 0.0;  // unbiased (n - 1); 0 for a single run
  std::size_t runs = 0;   // runs where the metric was defined
};

MetricSummary Summarize(std::span<const double> values);

struct GatingReport {
  std::vector<GatingStats> runs;
  MetricSummary correct_gating_rate;
  MetricSummary incorrect_gating_rate;
  MetricSummary sparsity;
  MetricSummary precision;
  MetricSummary recall;
};

GatingReport SummarizeRuns(std::vector<GatingStats> runs);

struct EvaluateOptions {
  // Repeat 0 evaluates the test set as given; further repeats evaluate
  // bootstrap resamples drawn from independent seed-derived streams.
  int repeats = 1;
  std::uint64_t seed = 0;
  // Shards the test set across this many threads.
  int workers = 1;
};

struct Evaluation {
  std::vector<DecisionRecord> decisions;  // for the test set as given
  GatingCounts counts;
  GatingReport report;
  CascadeCounters counters;
};

Evaluation Evaluate(const PartitionedModel& model,
                    const GatingThreshold& threshold, const Dataset& test,
                    const EvaluateOptions& options = {});

// Stats recomputed from a decision log alone.
GatingCounts CountDecisions(std::span<const DecisionRecord> decisions,
                            const ClassMap& class_map);

struct RocPoint {
  double threshold = 0.0;
  double false_stop_rate = 0.0;    // positives with score >= threshold
  double correct_stop_rate = 0.0;  // negatives with score >= threshold
};

// Sweeps tau from above every score down through each unique score. The
// first point is (0, 0); coordinates are non-decreasing along the list.
std::vector<RocPoint> RocCurve(std::span<const double> positive_scores,
                               std::span<const double> negative_scores);

// CSV: sample_id,label,gate_score,stopped,predicted_class,depth_fraction
void WriteDecisionLog(std::ostream& out,
                      std::span<const DecisionRecord> decisions);
std::vector<DecisionRecord> ReadDecisionLog(std::istream& in);

// CSV: metric,mean,variance,runs. Undefined metrics print "NA".
void WriteStatsReport(std::ostream& out, const GatingReport& report);

std::string FormatOptional(const std::optional<double>& value);

}  // namespace gatecade

#endif  // GATECADE_CASCADE_H_
