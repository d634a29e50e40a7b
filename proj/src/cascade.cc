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

#include "gatecade/cascade.h"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include "gatecade/error.h"
#include "gatecade/gc_layer.h"
#include "gatecade/random.h"

namespace gatecade {

GatingThreshold Calibrate(std::span<const double> positive_scores,
                          double target_incorrect_rate) {
  if (positive_scores.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "calibration needs at least one positive score");
  }
  if (!(target_incorrect_rate >= 0.0 && target_incorrect_rate <= 1.0)) {
    throw Error(ErrorCode::kOutOfRange,
                "target incorrect-gating rate must lie in [0, 1]");
  }
  std::vector<double> sorted(positive_scores.begin(), positive_scores.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());

  GatingThreshold threshold;
  threshold.target_incorrect_rate = target_incorrect_rate;
  threshold.calibration_positives = sorted.size();
  threshold.undersampled = n * target_incorrect_rate < 1.0;
  threshold.tau = kNeverStopThreshold;
  threshold.calibration_incorrect_rate = 0.0;
  // The stopped fraction only shrinks as tau grows, so the first feasible
  // unique score in ascending order is the smallest feasible threshold.
  for (std::size_t i = 0; i < sorted.size();) {
    const double rate = (n - static_cast<double>(i)) / n;  // scores >= sorted[i]
    if (rate <= target_incorrect_rate) {
      threshold.tau = sorted[i];
      threshold.calibration_incorrect_rate = rate;
      break;
    }
    const double value = sorted[i];
    while (i < sorted.size() && sorted[i] == value) ++i;
  }
  return threshold;
}

InferenceDecision Infer(const PartitionedModel& model,
                        const GatingThreshold& threshold, const Tensor& sample,
                        CascadeCounters* counters) {
  PrefixResult prefix = RunPrefix(model, sample);
  if (counters) ++counters->prefix_evaluations;
  InferenceDecision decision;
  decision.gate_score = prefix.gate_score;
  if (model.has_gc() && prefix.gate_score >= threshold.tau) {
    decision.outcome = Outcome::kEarlyStopped;
    decision.predicted_class = model.class_map().background();
    decision.depth_fraction = model.mu();
    return decision;
  }
  const Tensor logits = RunSuffix(model, prefix.gated);
  if (counters) ++counters->suffix_evaluations;
  decision.outcome = Outcome::kFullInference;
  decision.predicted_class = Argmax(logits.values());
  decision.depth_fraction = 1.0;
  decision.transmitted_sparsity = MeasureSparsity(prefix.gated);
  return decision;
}

void GatingCounts::Add(const DecisionRecord& r, const ClassMap& class_map) {
  const bool background = class_map.IsBackground(r.label);
  if (background) {
    ++negatives;
    negatives_stopped += r.stopped ? 1 : 0;
  } else {
    ++positives;
    positives_stopped += r.stopped ? 1 : 0;
  }
  if (!r.stopped) {
    ++passed;
    passed_sparsity_sum += r.transmitted_sparsity;
  }
  if (!class_map.IsBackground(r.predicted_class)) {
    ++predicted_positive;
    if (r.predicted_class == r.label) ++true_positive;
  }
}

GatingCounts& GatingCounts::operator+=(const GatingCounts& o) {
  negatives += o.negatives;
  negatives_stopped += o.negatives_stopped;
  positives += o.positives;
  positives_stopped += o.positives_stopped;
  passed += o.passed;
  passed_sparsity_sum += o.passed_sparsity_sum;
  true_positive += o.true_positive;
  predicted_positive += o.predicted_positive;
  return *this;
}

namespace {

std::optional<double> Ratio(double num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return num / static_cast<double>(den);
}

}  // namespace

GatingStats GatingStats::FromCounts(const GatingCounts& c) {
  GatingStats s;
  s.correct_gating_rate = Ratio(static_cast<double>(c.negatives_stopped), c.negatives);
  s.incorrect_gating_rate = Ratio(static_cast<double>(c.positives_stopped), c.positives);
  s.sparsity = Ratio(c.passed_sparsity_sum, c.passed);
  s.precision = Ratio(static_cast<double>(c.true_positive), c.predicted_positive);
  s.recall = Ratio(static_cast<double>(c.true_positive), c.positives);
  return s;
}

MetricSummary Summarize(std::span<const double> values) {
  MetricSummary s;
  s.runs = values.size();
  if (values.empty()) return s;
  double total = 0.0;
  for (double v : values) total += v;
  s.mean = total / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.variance = sq / static_cast<double>(values.size() - 1);
  }
  return s;
}

GatingReport SummarizeRuns(std::vector<GatingStats> runs) {
  GatingReport report;
  auto summarize = [&runs](std::optional<double> GatingStats::*field) {
    std::vector<double> defined;
    for (const GatingStats& s : runs) {
      if ((s.*field).has_value()) defined.push_back(*(s.*field));
    }
    return Summarize(defined);
  };
  report.correct_gating_rate = summarize(&GatingStats::correct_gating_rate);
  report.incorrect_gating_rate = summarize(&GatingStats::incorrect_gating_rate);
  report.sparsity = summarize(&GatingStats::sparsity);
  report.precision = summarize(&GatingStats::precision);
  report.recall = summarize(&GatingStats::recall);
  report.runs = std::move(runs);
  return report;
}

GatingCounts CountDecisions(std::span<const DecisionRecord> decisions,
                            const ClassMap& class_map) {
  GatingCounts counts;
  for (const DecisionRecord& r : decisions) counts.Add(r, class_map);
  return counts;
}

Evaluation Evaluate(const PartitionedModel& model,
                    const GatingThreshold& threshold, const Dataset& test,
                    const EvaluateOptions& options) {
  if (test.size() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "empty test set");
  }
  if (options.repeats < 1) {
    throw Error(ErrorCode::kInvalidArgument, "repeats must be >= 1");
  }
  Evaluation eval;
  eval.decisions.resize(test.size());
  const std::size_t workers = static_cast<std::size_t>(
      std::clamp<int>(options.workers, 1, static_cast<int>(test.size())));
  std::vector<CascadeCounters> shard_counters(workers);
  std::vector<std::exception_ptr> failures(workers);
  auto run_shard = [&](std::size_t shard) {
    try {
      const std::size_t begin = test.size() * shard / workers;
      const std::size_t end = test.size() * (shard + 1) / workers;
      for (std::size_t i = begin; i < end; ++i) {
        const InferenceDecision d =
            Infer(model, threshold, test.inputs[i], &shard_counters[shard]);
        DecisionRecord& r = eval.decisions[i];
        r.sample_id = i;
        r.label = test.labels[i];
        r.gate_score = d.gate_score;
        r.stopped = d.outcome == Outcome::kEarlyStopped;
        r.predicted_class = d.predicted_class;
        r.depth_fraction = d.depth_fraction;
        r.transmitted_sparsity = d.transmitted_sparsity.value_or(0.0);
      }
    } catch (...) {
      failures[shard] = std::current_exception();
    }
  };
  if (workers == 1) {
    run_shard(0);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t s = 0; s < workers; ++s) threads.emplace_back(run_shard, s);
    for (std::thread& t : threads) t.join();
  }
  for (const std::exception_ptr& e : failures) {
    if (e) std::rethrow_exception(e);
  }
  for (const CascadeCounters& c : shard_counters) {
    eval.counters.prefix_evaluations += c.prefix_evaluations;
    eval.counters.suffix_evaluations += c.suffix_evaluations;
  }

  eval.counts = CountDecisions(eval.decisions, test.class_map);
  std::vector<GatingStats> runs{GatingStats::FromCounts(eval.counts)};
  for (int rep = 1; rep < options.repeats; ++rep) {
    Rng rng(DeriveSeed(options.seed, static_cast<std::uint64_t>(rep)));
    GatingCounts counts;
    for (std::size_t i = 0; i < test.size(); ++i) {
      counts.Add(eval.decisions[rng.Index(test.size())], test.class_map);
    }
    runs.push_back(GatingStats::FromCounts(counts));
  }
  eval.report = SummarizeRuns(std::move(runs));
  return eval;
}

std::vector<RocPoint> RocCurve(std::span<const double> positive_scores,
                               std::span<const double> negative_scores) {
  if (positive_scores.empty() || negative_scores.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "ROC needs positive and negative scores");
  }
  std::vector<double> pos(positive_scores.begin(), positive_scores.end());
  std::vector<double> neg(negative_scores.begin(), negative_scores.end());
  std::sort(pos.begin(), pos.end(), std::greater<>());
  std::sort(neg.begin(), neg.end(), std::greater<>());
  const double np = static_cast<double>(pos.size());
  const double nn = static_cast<double>(neg.size());

  std::vector<RocPoint> curve;
  curve.push_back({kNeverStopThreshold, 0.0, 0.0});
  std::size_t ip = 0, in = 0;
  while (ip < pos.size() || in < neg.size()) {
    double tau = -INFINITY;
    if (ip < pos.size()) tau = std::max(tau, pos[ip]);
    if (in < neg.size()) tau = std::max(tau, neg[in]);
    while (ip < pos.size() && pos[ip] >= tau) ++ip;
    while (in < neg.size() && neg[in] >= tau) ++in;
    curve.push_back({tau, static_cast<double>(ip) / np,
                     static_cast<double>(in) / nn});
  }
  return curve;
}

std::string FormatOptional(const std::optional<double>& value) {
  if (!value.has_value()) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", *value);
  return buf;
}

void WriteDecisionLog(std::ostream& out,
                      std::span<const DecisionRecord> decisions) {
  out << "sample_id,label,gate_score,stopped,predicted_class,depth_fraction\n";
  char buf[128];
  for (const DecisionRecord& r : decisions) {
    std::snprintf(buf, sizeof(buf), "%zu,%d,%.17g,%d,%d,%.17g\n", r.sample_id,
                  r.label, r.gate_score, r.stopped ? 1 : 0, r.predicted_class,
                  r.depth_fraction);
    out << buf;
  }
}

std::vector<DecisionRecord> ReadDecisionLog(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) ||
      line != "sample_id,label,gate_score,stopped,predicted_class,depth_fraction") {
    throw Error(ErrorCode::kIo, "decision log: unexpected header");
  }
  std::vector<DecisionRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    DecisionRecord r;
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() != 6) {
      throw Error(ErrorCode::kIo, "decision log: bad row '" + line + "'");
    }
    try {
      r.sample_id = std::stoull(fields[0]);
      r.label = std::stoi(fields[1]);
      r.gate_score = std::stod(fields[2]);
      r.stopped = fields[3] == "1";
      r.predicted_class = std::stoi(fields[4]);
      r.depth_fraction = std::stod(fields[5]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kIo, "decision log: bad row '" + line + "'");
    }
    out.push_back(r);
  }
  return out;
}

void WriteStatsReport(std::ostream& out, const GatingReport& report) {
  out << "metric,mean,variance,runs\n";
  auto row = [&out](const char* name, const MetricSummary& s) {
    out << name << ',';
    if (s.runs == 0) {
      out << "NA,NA,0\n";
      return;
    }
    out << FormatOptional(s.mean) << ',' << FormatOptional(s.variance) << ','
        << s.runs << '\n';
  };
  row("correct_gating_rate", report.correct_gating_rate);
  row("incorrect_gating_rate", report.incorrect_gating_rate);
  row("sparsity", report.sparsity);
  row("precision", report.precision);
  row("recall", report.recall);
}

}  // namespace gatecade
