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


// Analytic expected energy of one inference, normalized so the ungated
// model costs exactly 1.
//
//   baseline  E0 = a + b
//   gated     E  = mu a + S [(1 - mu) a + (1 - nu) b],
//             S  = rho + (1 - rho)(1 - gamma)   (fraction reaching the suffix)
//
// The GC layer's own compute is treated as free.

#ifndef GATECADE_POWER_MODEL_H_
#define GATECADE_POWER_MODEL_H_

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace gatecade {

inline constexpr double kSystemConfigTolerance = 1e-9;

struct SystemConfig {
  double a = 0.5;  // compute cost
  double b = 0.5;  // transmission cost

  // Requires a, b >= 0 and |a + b - 1| <= kSystemConfigTolerance.
  void Validate() const;
  static SystemConfig FromCompute(double a) { return {a, 1.0 - a}; }
};

struct GcPowerParams {
  double rho = 0.0;    // probability of a positive sample
  double mu = 1.0;     // prefix depth fraction
  double nu = 0.0;     // sparsity of the transmitted tensor
  double gamma = 0.0;  // fraction of negatives stopped

  // Each must lie in [0, 1]; the error names the offending parameter.
  void Validate() const;
  double Survival() const { return rho + (1.0 - rho) * (1.0 - gamma); }
};

struct CostPartials {
  double d_a = 0.0;
  double d_b = 0.0;
};

double BaselineCost(const SystemConfig& config);
double GcCost(const GcPowerParams& params, const SystemConfig& config);
// The same expression with a, b >= 0 free of the a + b = 1 constraint.
double GcCostUnconstrained(const GcPowerParams& params, double a, double b);
// Derivatives of GcCostUnconstrained with respect to a and b.
CostPartials GcCostPartials(const GcPowerParams& params,
                            const SystemConfig& config);

struct PowerReport {
  SystemConfig config;
  double baseline_cost = 1.0;
  double gc_cost = 0.0;
  double reduction_factor = 1.0;  // +inf when gc_cost is 0
  CostPartials partials;
};

PowerReport Report(const GcPowerParams& params, const SystemConfig& config);

// One row per a in the grid, with b = 1 - a.
std::vector<PowerReport> Sweep(const GcPowerParams& params,
                               std::span<const double> a_grid);

// Reduction factors observed on published always-on deployments.
inline constexpr double kReportedReductionLow = 158.0;
inline constexpr double kReportedReductionHigh = 30000.0;
bool InReportedBand(double reduction_factor);

// The gamma that yields `target_factor` for fixed (rho, mu, nu) and config,
// or nullopt when no gamma in [0, 1] reaches it.
std::optional<double> GammaForReduction(const GcPowerParams& params,
                                        const SystemConfig& config,
                                        double target_factor);

// CSV: a,b,baseline,gc_cost,reduction_factor,dE_da,dE_db
void WritePowerCsv(std::ostream& out, std::span<const PowerReport> rows);

}  // namespace gatecade

#endif  // GATECADE_POWER_MODEL_H_
