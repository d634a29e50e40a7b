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


#include "gatecade/island_sim.h"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <thread>
#include <vector>

#include "gatecade/error.h"
#include "gatecade/random.h"

namespace gatecade {

Deployment Deployment::FromSystemConfig(const SystemConfig& config) {
  config.Validate();
  Deployment d;
  d.prefix_island.compute_cost_per_depth_unit = config.a;
  d.suffix_island.compute_cost_per_depth_unit = config.a;
  d.link.transmission_cost_per_unit_data = config.b;
  return d;
}

void Deployment::Validate() const {
  if (!(prefix_island.compute_cost_per_depth_unit >= 0.0) ||
      !(suffix_island.compute_cost_per_depth_unit >= 0.0) ||
      !(link.transmission_cost_per_unit_data >= 0.0)) {
    throw Error(ErrorCode::kOutOfRange, "deployment costs must be >= 0");
  }
}

GcPowerParams EnergyReport::MeasuredParams() const {
  GcPowerParams p;
  p.mu = mu;
  if (samples == 0) return p;
  const double n = static_cast<double>(samples);
  p.rho = static_cast<double>(positives_passed) / n;
  const std::uint64_t rest = samples - positives_passed;
  p.gamma = rest > 0 ? 1.0 - static_cast<double>(negatives_passed) /
                                 static_cast<double>(rest)
                     : 0.0;
  p.nu = wakeups > 0 ? passed_sparsity_sum / static_cast<double>(wakeups) : 0.0;
  return p;
}

namespace {

struct TraceRow {
  std::uint64_t sample_id;
  bool positive;
  bool stopped;
  double sparsity;
};

void WriteTraceRow(std::ostream* trace, const TraceRow& row, double prefix,
                   double link, double suffix) {
  if (!trace) return;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%llu,%d,%d,%.17g,%.17g,%.17g,%.17g\n",
                static_cast<unsigned long long>(row.sample_id),
                row.positive ? 1 : 0, row.stopped ? 1 : 0, row.sparsity, prefix,
                link, suffix);
  *trace << buf;
}

class Accountant {
 public:
  Accountant(const Deployment& deployment, double mu)
      : prefix_cost_(mu * deployment.prefix_island.compute_cost_per_depth_unit),
        suffix_cost_((1.0 - mu) *
                     deployment.suffix_island.compute_cost_per_depth_unit),
        link_cost_(deployment.link.transmission_cost_per_unit_data) {
    deployment.Validate();
    if (!(mu >= 0.0 && mu <= 1.0)) {
      throw Error(ErrorCode::kOutOfRange, "mu must lie in [0, 1]");
    }
    report_.mu = mu;
  }

  void Record(const TraceRow& row, std::ostream* trace) {
    ++report_.samples;
    double prefix = prefix_cost_, link = 0.0, suffix = 0.0;
    if (row.positive) {
      ++report_.positives;
    } else {
      ++report_.negatives;
    }
    if (!row.stopped) {
      ++report_.wakeups;
      if (row.positive) {
        ++report_.positives_passed;
      } else {
        ++report_.negatives_passed;
      }
      report_.passed_sparsity_sum += row.sparsity;
      link = (1.0 - row.sparsity) * link_cost_;
      suffix = suffix_cost_;
    }
    report_.prefix_energy += prefix;
    report_.link_energy += link;
    report_.suffix_energy += suffix;
    WriteTraceRow(trace, row, prefix, link, suffix);
  }

  EnergyReport Finish(std::uint64_t seed) {
    report_.seed = seed;
    report_.total_energy =
        report_.prefix_energy + report_.link_energy + report_.suffix_energy;
    report_.mean_energy =
        report_.samples ? report_.total_energy / static_cast<double>(report_.samples)
                        : 0.0;
    return report_;
  }

 private:
  double prefix_cost_;
  double suffix_cost_;
  double link_cost_;
  EnergyReport report_;
};

void WriteTraceHeader(std::ostream* trace) {
  if (trace) {
    *trace << "sample_id,positive,stopped,sparsity,prefix_energy,link_energy,"
              "suffix_energy\n";
  }
}

struct BlockCounts {
  std::uint64_t positives = 0;
  std::uint64_t positives_passed = 0;
  std::uint64_t negatives = 0;
  std::uint64_t negatives_passed = 0;
};

BlockCounts SimulateBlock(const GcPowerParams& params, std::uint64_t seed,
                          std::uint64_t block, std::uint64_t begin,
                          std::uint64_t end, std::vector<TraceRow>* rows) {
  Rng rng(DeriveSeed(seed, block));
  BlockCounts c;
  for (std::uint64_t i = begin; i < end; ++i) {
    const bool positive = rng.Bernoulli(params.rho);
    bool stopped = false;
    if (positive) {
      ++c.positives;
      ++c.positives_passed;
    } else {
      ++c.negatives;
      stopped = rng.Bernoulli(params.gamma);
      if (!stopped) ++c.negatives_passed;
    }
    if (rows) rows->push_back({i, positive, stopped, params.nu});
  }
  return c;
}

}  // namespace

EnergyReport SimulateAnalytic(const Deployment& deployment,
                              const GcPowerParams& params,
                              const SimulationOptions& options) {
  params.Validate();
  deployment.Validate();
  if (options.samples < 1) {
    throw Error(ErrorCode::kInvalidArgument, "simulation needs n >= 1");
  }
  const std::uint64_t n = options.samples;
  const std::uint64_t blocks = (n + kSimulationBlock - 1) / kSimulationBlock;

  std::vector<BlockCounts> counts(blocks);
  // A trace is written in sample order, so tracing runs single-threaded.
  const std::uint64_t workers =
      options.trace ? 1
                    : std::clamp<std::uint64_t>(
                          static_cast<std::uint64_t>(std::max(options.workers, 1)),
                          1, blocks);
  const double prefix_cost =
      params.mu * deployment.prefix_island.compute_cost_per_depth_unit;
  const double suffix_cost =
      (1.0 - params.mu) * deployment.suffix_island.compute_cost_per_depth_unit;
  const double link_cost =
      (1.0 - params.nu) * deployment.link.transmission_cost_per_unit_data;
  WriteTraceHeader(options.trace);
  auto run = [&](std::uint64_t worker) {
    std::vector<TraceRow> rows;
    for (std::uint64_t blk = worker; blk < blocks; blk += workers) {
      const std::uint64_t begin = blk * kSimulationBlock;
      rows.clear();
      counts[blk] = SimulateBlock(params, options.seed, blk, begin,
                                  std::min(n, begin + kSimulationBlock),
                                  options.trace ? &rows : nullptr);
      for (const TraceRow& row : rows) {
        WriteTraceRow(options.trace, row, prefix_cost,
                      row.stopped ? 0.0 : link_cost,
                      row.stopped ? 0.0 : suffix_cost);
      }
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> threads;
    for (std::uint64_t w = 0; w < workers; ++w) threads.emplace_back(run, w);
    for (std::thread& t : threads) t.join();
  }

  EnergyReport r;
  r.mu = params.mu;
  r.seed = options.seed;
  r.samples = n;
  for (const BlockCounts& c : counts) {
    r.positives += c.positives;
    r.positives_passed += c.positives_passed;
    r.negatives += c.negatives;
    r.negatives_passed += c.negatives_passed;
  }
  r.wakeups = r.positives_passed + r.negatives_passed;
  r.passed_sparsity_sum = static_cast<double>(r.wakeups) * params.nu;
  const double wake = static_cast<double>(r.wakeups);
  r.prefix_energy = static_cast<double>(n) * prefix_cost;
  r.suffix_energy = wake * suffix_cost;
  r.link_energy = wake * link_cost;
  r.total_energy = r.prefix_energy + r.link_energy + r.suffix_energy;
  r.mean_energy = r.total_energy / static_cast<double>(n);
  return r;
}

EnergyReport AccountDecisions(const Deployment& deployment, double mu,
                              std::span<const DecisionRecord> decisions,
                              const ClassMap& class_map, std::ostream* trace) {
  Accountant accountant(deployment, mu);
  WriteTraceHeader(trace);
  for (const DecisionRecord& d : decisions) {
    accountant.Record({d.sample_id, !class_map.IsBackground(d.label), d.stopped,
                       d.stopped ? 0.0 : d.transmitted_sparsity},
                      trace);
  }
  return accountant.Finish(0);
}

EnergyReport SimulateEmpirical(const Deployment& deployment,
                               const PartitionedModel& model,
                               const GatingThreshold& threshold,
                               const Dataset& stream,
                               const SimulationOptions& options) {
  if (stream.size() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "empty sample stream");
  }
  EvaluateOptions eval_options;
  eval_options.workers = options.workers;
  const Evaluation eval = Evaluate(model, threshold, stream, eval_options);
  EnergyReport report = AccountDecisions(deployment, model.mu(), eval.decisions,
                                         stream.class_map, options.trace);
  report.seed = options.seed;
  return report;
}

void WriteEnergyReport(std::ostream& out, const EnergyReport& r) {
  out << "samples,seed,total_energy,mean_energy,prefix_energy,link_energy,"
         "suffix_energy,wakeups,positives,negatives,mu,measured_rho,"
         "measured_gamma,measured_nu\n";
  const GcPowerParams m = r.MeasuredParams();
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%llu,%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%llu,%llu,%llu,%.17g,"
                "%.17g,%.17g,%.17g\n",
                static_cast<unsigned long long>(r.samples),
                static_cast<unsigned long long>(r.seed), r.total_energy,
                r.mean_energy, r.prefix_energy, r.link_energy, r.suffix_energy,
                static_cast<unsigned long long>(r.wakeups),
                static_cast<unsigned long long>(r.positives),
                static_cast<unsigned long long>(r.negatives), r.mu, m.rho,
                m.gamma, m.nu);
  out << buf;
}

}  // namespace gatecade
