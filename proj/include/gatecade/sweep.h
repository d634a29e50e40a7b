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


// Experiment sweeps over GC depth, loss weight and calibration target.
//
// For every repeat r the run seed is DeriveSeed(seed, r). It drives model
// initialization and batch order for every grid point of that repeat, so
// grid points within a repeat differ only in their settings. Each (mu, alpha)
// model is trained once and then calibrated on the validation split and
// evaluated on the test split for every target incorrect-gating rate.

#ifndef GATECADE_SWEEP_H_
#define GATECADE_SWEEP_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gatecade/dataset.h"
#include "gatecade/model.h"
#include "gatecade/trainer.h"

namespace gatecade {

struct SweepConfig {
  BackboneConfig backbone;
  // Template; mu, gc.alpha and seed are set per grid point.
  TrainConfig train;
  std::vector<double> mu_grid = {0.05, 0.1, 0.2, 0.3, 0.5};
  std::vector<double> alpha_grid = {0.1, 0.3, 0.5, 0.7, 0.9};
  std::vector<double> targets = {0.01};
  // Compute-cost coefficients a of the reported power regimes (b = 1 - a).
  std::vector<double> regimes = {0.9, 0.5, 0.1};
  int repeats = 10;
  std::uint64_t seed = 2026;
  bool baseline = true;
  int workers = 1;

  void Validate() const;
};

enum class RowKind { kGc, kBaseline, kAggregate, kBaselineAggregate };
std::string RowKindName(RowKind kind);

struct SweepRow {
  RowKind kind = RowKind::kGc;
  double mu = 0.0;           // requested (baseline rows: 1)
  double mu_realized = 0.0;  // prefix_depth / depth
  double alpha = 0.0;
  double target = 0.0;
  int repeat = -1;  // -1 on aggregate rows
  std::uint64_t seed = 0;
  std::string status = "ok";
  // Parallel to SweepResult::metric_names. Aggregate rows hold the mean in
  // `values` and the unbiased variance in `variances`.
  std::vector<std::optional<double>> values;
  std::vector<std::optional<double>> variances;
  // Aggregates: number of runs contributing to each metric.
  std::vector<std::size_t> counts;
};

struct SweepResult {
  std::vector<std::string> metric_names;
  std::vector<SweepRow> rows;

  std::size_t MetricIndex(const std::string& name) const;
  std::optional<double> Get(const SweepRow& row, const std::string& name) const;
  // Rows matching kind and, for GC kinds, the (mu, alpha, target) point.
  std::vector<const SweepRow*> Select(RowKind kind, double mu = 0.0,
                                      double alpha = 0.0,
                                      double target = 0.0) const;
};

// Metric columns: tau, calibration_incorrect_rate, correct_gating,
// incorrect_gating, sparsity, precision, recall, rho, then per regime a:
// gc_cost@a, reduction@a and sim_energy@a (empirical simulation over the
// test decisions).
std::vector<std::string> SweepMetricNames(const std::vector<double>& regimes);

SweepResult RunSweep(const SweepConfig& config, const DatasetSplits& data);

// Mean/variance per metric over the given rows (undefined values skipped).
SweepRow AggregateRows(const std::vector<const SweepRow*>& rows,
                       std::size_t num_metrics);

// CSV: kind,mu,mu_realized,alpha,target,repeat,seed,status, then every
// metric followed by its `_var` column (NA on per-run rows).
void WriteSweepCsv(std::ostream& out, const SweepResult& result);

}  // namespace gatecade

#endif  // GATECADE_SWEEP_H_
