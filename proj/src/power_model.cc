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


#include "gatecade/power_model.h"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include "gatecade/error.h"

namespace gatecade {

namespace {

void CheckUnit(const char* name, double value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw Error(ErrorCode::kOutOfRange, std::string(name) + " = " +
                                            std::to_string(value) +
                                            " must lie in [0, 1]");
  }
}

}  // namespace

void SystemConfig::Validate() const {
  CheckUnit("a", a);
  CheckUnit("b", b);
  if (std::abs(a + b - 1.0) > kSystemConfigTolerance) {
    throw Error(ErrorCode::kOutOfRange,
                "system config requires a + b = 1, got " +
                    std::to_string(a + b));
  }
}

void GcPowerParams::Validate() const {
  CheckUnit("rho", rho);
  CheckUnit("mu", mu);
  CheckUnit("nu", nu);
  CheckUnit("gamma", gamma);
}

double BaselineCost(const SystemConfig& config) {
  config.Validate();
  return config.a + config.b;
}

double GcCost(const GcPowerParams& params, const SystemConfig& config) {
  config.Validate();
  return GcCostUnconstrained(params, config.a, config.b);
}

double GcCostUnconstrained(const GcPowerParams& params, double a, double b) {
  params.Validate();
  if (!(a >= 0.0) || !(b >= 0.0)) {
    throw Error(ErrorCode::kOutOfRange, "cost coefficients must be >= 0");
  }
  return params.mu * a + params.Survival() * ((1.0 - params.mu) * a +
                                              (1.0 - params.nu) * b);
}

CostPartials GcCostPartials(const GcPowerParams& params,
                            const SystemConfig& config) {
  params.Validate();
  config.Validate();
  const double s = params.Survival();
  return {params.mu + s * (1.0 - params.mu), s * (1.0 - params.nu)};
}

PowerReport Report(const GcPowerParams& params, const SystemConfig& config) {
  PowerReport report;
  report.config = config;
  report.baseline_cost = BaselineCost(config);
  report.gc_cost = GcCost(params, config);
  report.reduction_factor =
      report.gc_cost > 0.0 ? report.baseline_cost / report.gc_cost
                           : std::numeric_limits<double>::infinity();
  report.partials = GcCostPartials(params, config);
  return report;
}

std::vector<PowerReport> Sweep(const GcPowerParams& params,
                               std::span<const double> a_grid) {
  if (a_grid.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "power sweep grid is empty");
  }
  std::vector<PowerReport> rows;
  rows.reserve(a_grid.size());
  for (double a : a_grid) rows.push_back(Report(params, SystemConfig::FromCompute(a)));
  return rows;
}

bool InReportedBand(double reduction_factor) {
  return reduction_factor >= kReportedReductionLow &&
         reduction_factor <= kReportedReductionHigh;
}

std::optional<double> GammaForReduction(const GcPowerParams& params,
                                        const SystemConfig& config,
                                        double target_factor) {
  params.Validate();
  config.Validate();
  if (!(target_factor > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "target factor must be positive");
  }
  const double suffix = (1.0 - params.mu) * config.a + (1.0 - params.nu) * config.b;
  const double target_cost = BaselineCost(config) / target_factor;
  const double negatives = 1.0 - params.rho;
  if (suffix <= 0.0 || negatives <= 0.0) {
    // gamma has no effect on the cost.
    if (std::abs(GcCost(params, config) - target_cost) <= 1e-12) {
      return params.gamma;
    }
    return std::nullopt;
  }
  const double pass_negatives =
      (target_cost - params.mu * config.a - params.rho * suffix) /
      (negatives * suffix);
  const double gamma = 1.0 - pass_negatives;
  if (!(gamma >= 0.0 && gamma <= 1.0)) return std::nullopt;
  return gamma;
}

void WritePowerCsv(std::ostream& out, std::span<const PowerReport> rows) {
  out << "a,b,baseline,gc_cost,reduction_factor,dE_da,dE_db\n";
  char buf[256];
  for (const PowerReport& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  r.config.a, r.config.b, r.baseline_cost, r.gc_cost,
                  r.reduction_factor, r.partials.d_a, r.partials.d_b);
    out << buf;
  }
}

}  // namespace gatecade
