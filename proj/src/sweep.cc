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


#include "gatecade/sweep.h"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <ostream>
#include <thread>

#include "gatecade/cascade.h"
#include "gatecade/error.h"
#include "gatecade/island_sim.h"
#include "gatecade/power_model.h"
#include "gatecade/random.h"

namespace gatecade {

void SweepConfig::Validate() const {
  backbone.Validate();
  if (mu_grid.empty() || alpha_grid.empty() || targets.empty()) {
    throw Error(ErrorCode::kConfig, "sweep grids must be non-empty");
  }
  for (double mu : mu_grid) {
    if (!(mu > 0.0 && mu < 1.0)) {
      throw Error(ErrorCode::kConfig, "every mu must lie in (0, 1)");
    }
  }
  for (double alpha : alpha_grid) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
      throw Error(ErrorCode::kConfig, "every alpha must lie in [0, 1]");
    }
  }
  for (double t : targets) {
    if (!(t >= 0.0 && t <= 1.0)) {
      throw Error(ErrorCode::kConfig, "every target must lie in [0, 1]");
    }
  }
  for (double a : regimes) SystemConfig::FromCompute(a).Validate();
  if (repeats < 1) throw Error(ErrorCode::kConfig, "repeats must be >= 1");
  if (workers < 1) throw Error(ErrorCode::kConfig, "workers must be >= 1");
}

std::string RowKindName(RowKind kind) {
  switch (kind) {
    case RowKind::kGc:
      return "gc";
    case RowKind::kBaseline:
      return "baseline";
    case RowKind::kAggregate:
      return "gc_aggregate";
    case RowKind::kBaselineAggregate:
      return "baseline_aggregate";
  }
  return "unknown";
}

namespace {

std::string FormatRegime(double a) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", a);
  return buf;
}

enum Metric {
  kTau,
  kCalibrationRate,
  kCorrectGating,
  kIncorrectGating,
  kSparsity,
  kPrecision,
  kRecall,
  kRho,
  kNumFixedMetrics,
};

}  // namespace

std::vector<std::string> SweepMetricNames(const std::vector<double>& regimes) {
  std::vector<std::string> names = {
      "tau",      "calibration_incorrect_rate", "correct_gating",
      "incorrect_gating", "sparsity", "precision", "recall", "rho"};
  for (double a : regimes) {
    const std::string suffix = "@a=" + FormatRegime(a);
    names.push_back("gc_cost" + suffix);
    names.push_back("reduction" + suffix);
    names.push_back("sim_energy" + suffix);
  }
  return names;
}

std::size_t SweepResult::MetricIndex(const std::string& name) const {
  for (std::size_t i = 0; i < metric_names.size(); ++i) {
    if (metric_names[i] == name) return i;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown sweep metric '" + name + "'");
}

std::optional<double> SweepResult::Get(const SweepRow& row,
                                       const std::string& name) const {
  return row.values.at(MetricIndex(name));
}

std::vector<const SweepRow*> SweepResult::Select(RowKind kind, double mu,
                                                 double alpha,
                                                 double target) const {
  std::vector<const SweepRow*> out;
  const bool gc = kind == RowKind::kGc || kind == RowKind::kAggregate;
  for (const SweepRow& row : rows) {
    if (row.kind != kind) continue;
    if (gc && (row.mu != mu || row.alpha != alpha || row.target != target)) {
      continue;
    }
    out.push_back(&row);
  }
  return out;
}

SweepRow AggregateRows(const std::vector<const SweepRow*>& rows,
                       std::size_t num_metrics) {
  SweepRow agg;
  agg.values.assign(num_metrics, std::nullopt);
  agg.variances.assign(num_metrics, std::nullopt);
  agg.counts.assign(num_metrics, 0);
  for (std::size_t m = 0; m < num_metrics; ++m) {
    std::vector<double> defined;
    for (const SweepRow* row : rows) {
      if (row->status == "ok" && row->values[m].has_value()) {
        defined.push_back(*row->values[m]);
      }
    }
    if (defined.empty()) continue;
    const MetricSummary s = Summarize(defined);
    agg.values[m] = s.mean;
    agg.variances[m] = s.variance;
    agg.counts[m] = s.runs;
  }
  return agg;
}

namespace {

struct Task {
  bool baseline = false;
  double mu = 0.0;
  double alpha = 0.0;
  int repeat = 0;
};

double PositiveFraction(const Dataset& d) {
  return static_cast<double>(d.CountPositives()) / static_cast<double>(d.size());
}

std::vector<SweepRow> RunTask(const SweepConfig& config, const Task& task,
                              const DatasetSplits& data,
                              const std::vector<std::string>& names) {
  const std::uint64_t seed =
      DeriveSeed(config.seed, static_cast<std::uint64_t>(task.repeat));
  TrainConfig train = config.train;
  train.seed = seed;
  if (task.baseline) {
    train.gc.reset();
    // The split point of an ungated model does not affect its function.
    train.mu = 0.5;
  } else {
    if (!train.gc) train.gc = GcLayerOptions{};
    train.mu = task.mu;
    train.gc->alpha = task.alpha;
  }

  auto blank_row = [&](double target) {
    SweepRow row;
    row.kind = task.baseline ? RowKind::kBaseline : RowKind::kGc;
    row.mu = task.baseline ? 1.0 : task.mu;
    row.mu_realized = task.baseline ? 1.0 : 0.0;
    row.alpha = task.baseline ? 0.0 : task.alpha;
    row.target = task.baseline ? 0.0 : target;
    row.repeat = task.repeat;
    row.seed = seed;
    row.values.assign(names.size(), std::nullopt);
    return row;
  };
  const std::vector<double> targets =
      task.baseline ? std::vector<double>{0.0} : config.targets;

  std::vector<SweepRow> rows;
  try {
    const TrainResult trained = Train(config.backbone, train, data.train);
    const PartitionedModel& model = trained.model;
    std::vector<double> positive_scores;
    if (!task.baseline) {
      const std::vector<double> scores = GateScores(model, data.val.inputs);
      for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!data.val.class_map.IsBackground(data.val.labels[i])) {
          positive_scores.push_back(scores[i]);
        }
      }
    }
    for (double target : targets) {
      SweepRow row = blank_row(target);
      GatingThreshold threshold;
      if (!task.baseline) {
        row.mu_realized = model.mu();
        threshold = Calibrate(positive_scores, target);
        row.values[kTau] = threshold.tau;
        row.values[kCalibrationRate] = threshold.calibration_incorrect_rate;
      }
      const Evaluation eval = Evaluate(model, threshold, data.test);
      const GatingStats& stats = eval.report.runs.front();
      row.values[kCorrectGating] = stats.correct_gating_rate;
      row.values[kIncorrectGating] = stats.incorrect_gating_rate;
      row.values[kSparsity] = stats.sparsity;
      row.values[kPrecision] = stats.precision;
      row.values[kRecall] = stats.recall;
      row.values[kRho] = PositiveFraction(data.test);
      if (!task.baseline) {
        GcPowerParams params;
        params.rho = *row.values[kRho];
        params.mu = model.mu();
        params.nu = stats.sparsity.value_or(0.0);
        params.gamma = stats.correct_gating_rate.value_or(0.0);
        for (std::size_t k = 0; k < config.regimes.size(); ++k) {
          const SystemConfig system = SystemConfig::FromCompute(config.regimes[k]);
          const PowerReport power = Report(params, system);
          const std::size_t base = kNumFixedMetrics + 3 * k;
          row.values[base] = power.gc_cost;
          row.values[base + 1] = power.reduction_factor;
          row.values[base + 2] =
              AccountDecisions(Deployment::FromSystemConfig(system), model.mu(),
                               eval.decisions, data.test.class_map, nullptr)
                  .mean_energy;
        }
      }
      rows.push_back(std::move(row));
    }
  } catch (const std::exception& e) {
    rows.clear();
    for (double target : targets) {
      SweepRow row = blank_row(target);
      row.status = std::string("error: ") + e.what();
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace

SweepResult RunSweep(const SweepConfig& config, const DatasetSplits& data) {
  config.Validate();
  SweepResult result;
  result.metric_names = SweepMetricNames(config.regimes);

  std::vector<Task> tasks;
  if (config.baseline) {
    for (int r = 0; r < config.repeats; ++r) tasks.push_back({true, 0.0, 0.0, r});
  }
  for (double mu : config.mu_grid) {
    for (double alpha : config.alpha_grid) {
      for (int r = 0; r < config.repeats; ++r) {
        tasks.push_back({false, mu, alpha, r});
      }
    }
  }

  std::vector<std::vector<SweepRow>> outputs(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      outputs[i] = RunTask(config, tasks[i], data, result.metric_names);
    }
  };
  const int workers =
      std::min<int>(config.workers, static_cast<int>(tasks.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
  }

  // Assemble in grid order: baseline runs, then per (mu, alpha, target) the
  // runs of every repeat followed by their aggregate.
  const std::size_t num_metrics = result.metric_names.size();
  std::size_t index = 0;
  if (config.baseline) {
    std::vector<const SweepRow*> runs;
    for (int r = 0; r < config.repeats; ++r, ++index) {
      result.rows.push_back(outputs[index].front());
    }
    for (const SweepRow& row : result.rows) runs.push_back(&row);
    SweepRow agg = AggregateRows(runs, num_metrics);
    agg.kind = RowKind::kBaselineAggregate;
    agg.mu = agg.mu_realized = 1.0;
    agg.seed = config.seed;
    result.rows.push_back(std::move(agg));
  }
  for (double mu : config.mu_grid) {
    for (double alpha : config.alpha_grid) {
      const std::size_t first = index;
      index += static_cast<std::size_t>(config.repeats);
      for (std::size_t t = 0; t < config.targets.size(); ++t) {
        std::vector<SweepRow> runs;
        for (std::size_t i = first; i < index; ++i) runs.push_back(outputs[i][t]);
        std::vector<const SweepRow*> pointers;
        for (const SweepRow& row : runs) pointers.push_back(&row);
        SweepRow agg = AggregateRows(pointers, num_metrics);
        agg.kind = RowKind::kAggregate;
        agg.mu = mu;
        agg.alpha = alpha;
        agg.target = config.targets[t];
        agg.mu_realized = runs.front().mu_realized;
        agg.seed = config.seed;
        for (SweepRow& row : runs) result.rows.push_back(std::move(row));
        result.rows.push_back(std::move(agg));
      }
    }
  }
  return result;
}

void WriteSweepCsv(std::ostream& out, const SweepResult& result) {
  out << "kind,mu,mu_realized,alpha,target,repeat,seed,status";
  for (const std::string& name : result.metric_names) {
    out << ',' << name << ',' << name << "_var";
  }
  out << '\n';
  char buf[64];
  auto number = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (const SweepRow& row : result.rows) {
    std::string status = row.status;
    for (char& c : status) {
      if (c == ',' || c == '\n') c = ';';
    }
    out << RowKindName(row.kind) << ',' << number(row.mu) << ','
        << number(row.mu_realized) << ',' << number(row.alpha) << ','
        << number(row.target) << ',' << row.repeat << ',' << row.seed << ','
        << status;
    for (std::size_t m = 0; m < result.metric_names.size(); ++m) {
      out << ',' << FormatOptional(row.values[m]);
      out << ',' << (row.variances.empty() ? "NA" : FormatOptional(row.variances[m]));
    }
    out << '\n';
  }
}

}  // namespace gatecade
