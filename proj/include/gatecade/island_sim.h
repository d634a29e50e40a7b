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


// Sample-by-sample energy simulation of a two-island deployment: an
// always-on island runs the prefix, an on-demand island runs the suffix and
// a link carries the (sparse) boundary tensor between them.
//
// Per sample the prefix island pays mu * compute; a sample that is not
// early-stopped wakes the suffix island, paying (1 - mu) * compute there and
// (1 - sparsity) * transmission on the link.

#ifndef GATECADE_ISLAND_SIM_H_
#define GATECADE_ISLAND_SIM_H_

#include <cstdint>
#include <iosfwd>
#include <string>

#include "gatecade/cascade.h"
#include "gatecade/dataset.h"
#include "gatecade/model.h"
#include "gatecade/power_model.h"

namespace gatecade {

struct ComputeIsland {
  std::string name;
  double compute_cost_per_depth_unit = 0.0;
};

struct Link {
  double transmission_cost_per_unit_data = 0.0;
};

struct Deployment {
  ComputeIsland prefix_island{"always-on", 0.0};
  ComputeIsland suffix_island{"on-demand", 0.0};
  Link link;

  // Both islands cost a per unit depth and the link costs b per unit data.
  static Deployment FromSystemConfig(const SystemConfig& config);
  void Validate() const;
};

struct EnergyReport {
  double total_energy = 0.0;  // == prefix + link + suffix
  double mean_energy = 0.0;
  double prefix_energy = 0.0;
  double link_energy = 0.0;
  double suffix_energy = 0.0;
  std::uint64_t wakeups = 0;  // samples that reached the suffix
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;

  std::uint64_t positives = 0;
  std::uint64_t positives_passed = 0;
  std::uint64_t negatives = 0;
  std::uint64_t negatives_passed = 0;
  double passed_sparsity_sum = 0.0;
  double mu = 0.0;

  // Rates such that the closed-form cost evaluated at them reproduces
  // mean_energy: rho is the share of samples that are passed positives and
  // gamma the stop rate of everything else, nu the mean passed sparsity.
  GcPowerParams MeasuredParams() const;
};

struct SimulationOptions {
  std::uint64_t samples = 1000000;
  std::uint64_t seed = 0;
  int workers = 1;
  // Optional per-sample trace (CSV); only written when non-null.
  std::ostream* trace = nullptr;
};

// Samples are processed in fixed-size blocks, each with its own derived seed,
// and merged in block order, so the report does not depend on `workers`.
inline constexpr std::uint64_t kSimulationBlock = 65536;

EnergyReport SimulateAnalytic(const Deployment& deployment,
                              const GcPowerParams& params,
                              const SimulationOptions& options);

// Drives the deployment with real gate decisions and per-sample sparsity.
EnergyReport SimulateEmpirical(const Deployment& deployment,
                               const PartitionedModel& model,
                               const GatingThreshold& threshold,
                               const Dataset& stream,
                               const SimulationOptions& options);

// Same accounting from an existing decision log plus per-sample sparsity.
EnergyReport AccountDecisions(const Deployment& deployment, double mu,
                              std::span<const DecisionRecord> decisions,
                              const ClassMap& class_map, std::ostream* trace);

// CSV: one header line and one row of EnergyReport fields.
void WriteEnergyReport(std::ostream& out, const EnergyReport& report);

}  // namespace gatecade

#endif  // GATECADE_ISLAND_SIM_H_
