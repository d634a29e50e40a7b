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


// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails. Pass criterion numbers as arguments to
// run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <boost/math/distributions/binomial.hpp>

#include "gatecade/cascade.h"
#include "gatecade/config.h"
#include "gatecade/island_sim.h"
#include "gatecade/power_model.h"
#include "gatecade/random.h"
#include "gatecade/sweep.h"
#include "gatecade/trainer.h"
#include "test_util.h"

namespace gatecade {
namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void Require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string Format(const char* fmt, double a = 0, double b = 0, double c = 0,
                   double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), fmt, a, b, c, d);
  return buf;
}

// Shared state: the default task, one trained model and the sweep.
class Context {
 public:
  const ExperimentConfig& config() {
    if (!config_) {
      config_ = std::make_unique<ExperimentConfig>(
          LoadConfig(GATECADE_DEFAULT_CONFIG));
    }
    return *config_;
  }

  const DatasetSplits& data() {
    if (!data_) {
      data_ = std::make_unique<DatasetSplits>(GenerateDataset(config().dataset));
    }
    return *data_;
  }

  const PartitionedModel& model() {
    if (!model_) {
      model_ = std::make_unique<PartitionedModel>(
          Train(config().backbone, config().train, data().train).model);
    }
    return *model_;
  }

  const SweepResult& sweep() {
    if (!sweep_) {
      SweepConfig s = config().sweep;
      s.alpha_grid = {0.1, 0.3, 0.5};
      s.targets = {0.01};
      s.repeats = 10;
      s.baseline = true;
      const auto start = std::chrono::steady_clock::now();
      sweep_ = std::make_unique<SweepResult>(RunSweep(s, data()));
      const double seconds = std::chrono::duration<double>(
                                 std::chrono::steady_clock::now() - start)
                                 .count();
      std::ofstream csv("acceptance_sweep.csv");
      WriteSweepCsv(csv, *sweep_);
      std::printf("  (sweep: %zu rows in %.0f s, written to "
                  "acceptance_sweep.csv)\n",
                  sweep_->rows.size(), seconds);
      std::fflush(stdout);
    }
    return *sweep_;
  }

 private:
  std::unique_ptr<ExperimentConfig> config_;
  std::unique_ptr<DatasetSplits> data_;
  std::unique_ptr<PartitionedModel> model_;
  std::unique_ptr<SweepResult> sweep_;
};

void SplitScores(const std::vector<double>& scores, const Dataset& data,
                 std::vector<double>* positives, std::vector<double>* negatives) {
  for (std::size_t i = 0; i < scores.size(); ++i) {
    (data.IsBackground(i) ? negatives : positives)->push_back(scores[i]);
  }
}

double FractionAtLeast(const std::vector<double>& scores, double tau) {
  const auto n = std::count_if(scores.begin(), scores.end(),
                               [tau](double s) { return s >= tau; });
  return static_cast<double>(n) / static_cast<double>(scores.size());
}

// Central 95% band of the count of incorrect stops among n positives when
// the true rate is `target`, as a rate.
std::pair<double, double> BinomialBand(double target, std::size_t n) {
  const boost::math::binomial_distribution<double> dist(
      static_cast<double>(n), target);
  const double nd = static_cast<double>(n);
  return {boost::math::quantile(dist, 0.025) / nd,
          boost::math::quantile(dist, 0.975) / nd};
}

Verdict PowerExactness(Context&) {
  Verdict out;
  const double tagged[][6] = {
      // rho, mu, nu, gamma, a, expected
      {0.2, 0.5, 0.0, 0.0, 1.0, 1.0},
      {0.0, 0.1, 0.0, 1.0, 1.0, 0.1},
      {0.1, 0.1, 0.0, 1.0, 1.0, 0.19},
  };
  for (const auto& t : tagged) {
    const double cost =
        GcCost({t[0], t[1], t[2], t[3]}, SystemConfig::FromCompute(t[4]));
    out.Require(cost == t[5], Format("tagged example %.17g gave %.17g", t[5], cost));
  }
  Rng rng(101);
  double worst = 0.0;
  const int sets = 1000;
  for (int i = 0; i < sets; ++i) {
    const GcPowerParams p = testing::RandomPowerParams(rng);
    const double a = rng.Uniform();
    const double got = GcCost(p, SystemConfig::FromCompute(a));
    const double want =
        testing::StraightLineCost(p.rho, p.mu, p.nu, p.gamma, a, 1.0 - a);
    worst = std::max(worst, std::fabs(got - want));
  }
  out.Require(worst < 1e-12, Format("max deviation %.3g", worst));
  if (out.pass) {
    out.detail = Format("3 tagged examples exact, %g random sets max |diff| %.3g",
                        sets, worst);
  }
  return out;
}

Verdict PowerPartials(Context&) {
  Verdict out;
  Rng rng(202);
  double worst = 0.0;
  int nonpositive = 0;
  for (int i = 0; i < 1000; ++i) {
    const GcPowerParams p = testing::RandomPowerParams(rng);
    const double a = rng.Uniform(1e-3, 1.0);
    const SystemConfig config = SystemConfig::FromCompute(a);
    const CostPartials d = GcCostPartials(p, config);
    const CostPartials fd = testing::FiniteDifferencePartials(p, a, 1.0 - a);
    worst = std::max({worst, testing::RelativeError(d.d_a, fd.d_a, 1e-300),
                      testing::RelativeError(d.d_b, fd.d_b, 1e-300)});
    if (p.mu > 0.0 && p.Survival() > 0.0 && !(d.d_a > 0.0 && d.d_b > 0.0)) {
      ++nonpositive;
    }
  }
  out.Require(worst < 1e-9, Format("max relative error %.3g", worst));
  out.Require(nonpositive == 0,
              Format("%g sets with a non-positive partial", nonpositive));
  if (out.pass) {
    out.detail = Format("1000 sets, max relative error %.3g, all partials > 0",
                        worst);
  }
  return out;
}

Verdict PowerBound(Context&) {
  Verdict out;
  Rng rng(303);
  int above = 0, gamma_breaks = 0, nu_breaks = 0;
  double worst = -1.0;
  const int sets = 100000;
  for (int i = 0; i < sets; ++i) {
    GcPowerParams p = testing::RandomPowerParams(rng);
    const SystemConfig config = SystemConfig::FromCompute(rng.Uniform());
    const double cost = GcCost(p, config);
    const double baseline = BaselineCost(config);
    worst = std::max(worst, cost - 1.0);
    if (cost > baseline) ++above;
    GcPowerParams q = p;
    q.gamma = rng.Uniform();
    if ((q.gamma > p.gamma ? GcCost(q, config) > cost
                           : GcCost(q, config) < cost)) {
      ++gamma_breaks;
    }
    q = p;
    q.nu = rng.Uniform();
    if ((q.nu > p.nu ? GcCost(q, config) > cost : GcCost(q, config) < cost)) {
      ++nu_breaks;
    }
  }
  out.Require(above == 0, Format("%g sets above baseline", above));
  out.Require(gamma_breaks == 0, Format("%g gamma pairs not monotone", gamma_breaks));
  out.Require(nu_breaks == 0, Format("%g nu pairs not monotone", nu_breaks));
  if (out.pass) {
    out.detail = Format("%g sets, max(gc - 1) = %.3g, %g gamma and nu pairs "
                        "monotone",
                        sets, worst, sets);
  }
  return out;
}

Verdict SimulatorConvergence(Context&) {
  Verdict out;
  const GcPowerParams sets[] = {
      {0.2, 0.3, 0.8, 0.9}, {0.05, 0.1, 0.95, 0.99}, {0.5, 0.5, 0.5, 0.5},
      {0.9, 0.2, 0.3, 0.1}, {0.01, 0.05, 0.0, 0.7}};
  const double compute[] = {0.5, 0.9, 0.1, 0.3, 0.7};
  double worst_rel = 0.0, worst_identity = 0.0;
  for (int s = 0; s < 5; ++s) {
    const SystemConfig config = SystemConfig::FromCompute(compute[s]);
    const Deployment deployment = Deployment::FromSystemConfig(config);
    const double expected = GcCost(sets[s], config);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      SimulationOptions options;
      options.samples = 1000000;
      options.seed = seed;
      const EnergyReport r = SimulateAnalytic(deployment, sets[s], options);
      worst_rel = std::max(worst_rel,
                           std::fabs(r.mean_energy - expected) / expected);
      const double at_measured = GcCost(r.MeasuredParams(), config);
      worst_identity =
          std::max(worst_identity, std::fabs(r.mean_energy - at_measured));
    }
  }
  out.Require(worst_rel < 0.01, Format("max relative error %.3g", worst_rel));
  out.Require(worst_identity < 1e-9,
              Format("accounting identity off by %.3g", worst_identity));
  if (out.pass) {
    out.detail = Format("50 runs at n=1e6, max relative error %.3g, identity "
                        "%.3g",
                        worst_rel, worst_identity);
  }
  return out;
}

Verdict GradientCorrectness(Context&) {
  Verdict out;
  double worst = 0.0;
  std::string worst_name;
  std::size_t cases = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    for (const testing::NamedCheck& c : testing::RunAllGradChecks(seed)) {
      ++cases;
      if (c.result.max_relative_error >= worst) {
        worst = c.result.max_relative_error;
        worst_name = c.name + " " + c.result.worst;
      }
    }
  }
  out.Require(worst < 1e-4, Format("max relative error %.3g", worst) + " at " +
                                worst_name);
  if (out.pass) {
    out.detail = Format("%g cases, max relative error %.3g", cases, worst) +
                 " (" + worst_name + ")";
  }
  return out;
}

Verdict CalibrationContract(Context& ctx) {
  Verdict out;
  const PartitionedModel& model = ctx.model();
  std::vector<double> val_pos, val_neg, test_pos, test_neg;
  SplitScores(GateScores(model, ctx.data().val.inputs), ctx.data().val,
              &val_pos, &val_neg);
  SplitScores(GateScores(model, ctx.data().test.inputs), ctx.data().test,
              &test_pos, &test_neg);
  out.Require(test_pos.size() >= 1000, "fewer than 1000 held-out positives");
  std::string summary;
  for (double target : {0.001, 0.01, 0.05}) {
    const GatingThreshold t = Calibrate(val_pos, target);
    const double held_out = FractionAtLeast(test_pos, t.tau);
    const auto [lo, hi] = BinomialBand(target, test_pos.size());
    out.Require(t.calibration_incorrect_rate <= target,
                Format("target %g: calibration rate %.4f", target,
                       t.calibration_incorrect_rate));
    out.Require(held_out >= lo && held_out <= hi,
                Format("target %g: held-out %.4f outside [%.4f, %.4f]", target,
                       held_out, lo, hi));
    summary += Format("target %g: cal %.4f, held-out %.4f ", target,
                      t.calibration_incorrect_rate, held_out) +
               Format("in [%.4f, %.4f]; ", lo, hi);
  }
  if (out.pass) {
    out.detail = summary + Format(" (n_pos %g)", test_pos.size());
  }
  return out;
}

Verdict TradeOffMonotonicity(Context& ctx) {
  Verdict out;
  std::vector<double> val_pos, val_neg, test_pos, test_neg;
  SplitScores(GateScores(ctx.model(), ctx.data().val.inputs), ctx.data().val,
              &val_pos, &val_neg);
  SplitScores(GateScores(ctx.model(), ctx.data().test.inputs), ctx.data().test,
              &test_pos, &test_neg);
  double previous = -1.0, first = 0.0;
  int breaks = 0;
  for (int step = 0; step <= 40; ++step) {
    const double target = 0.01 + 0.001 * step;
    const double gating =
        FractionAtLeast(test_neg, Calibrate(val_pos, target).tau);
    if (step == 0) first = gating;
    if (gating < previous) ++breaks;
    previous = gating;
  }
  // Synthetic scores with heavy ties.
  Rng rng(707);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> pos(500), neg(2000);
    for (double& s : pos) s = std::round(rng.Uniform() * 20) / 20;
    for (double& s : neg) s = std::round(std::sqrt(rng.Uniform()) * 20) / 20;
    const double low = FractionAtLeast(neg, Calibrate(pos, 0.01).tau);
    const double high = FractionAtLeast(neg, Calibrate(pos, 0.05).tau);
    if (high < low) ++breaks;
  }
  out.Require(breaks == 0, Format("%g decreases", breaks));
  if (out.pass) {
    out.detail = Format("correct gating %.4f at 0.01 -> %.4f at 0.05, "
                        "41 targets and 200 tied score sets monotone",
                        first, previous);
  }
  return out;
}

double Mean(const SweepResult& r, RowKind kind, double mu, double alpha,
            const std::string& metric) {
  const auto rows = r.Select(kind, mu, alpha, 0.01);
  if (rows.empty() || !r.Get(*rows[0], metric)) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return *r.Get(*rows[0], metric);
}

Verdict CascadeQuality(Context& ctx) {
  Verdict out;
  const SweepResult& r = ctx.sweep();
  for (const SweepRow& row : r.rows) {
    out.Require(row.status == "ok", "row failed: " + row.status);
  }
  const auto baseline = r.Select(RowKind::kBaselineAggregate);
  if (baseline.empty()) {
    out.Require(false, "no baseline rows");
    return out;
  }
  const double base_p = *r.Get(*baseline[0], "precision");
  const double base_r = *r.Get(*baseline[0], "recall");
  std::string summary = Format("baseline P %.4f R %.4f", base_p, base_r);
  const auto& config = ctx.config().sweep;
  for (double mu : config.mu_grid) {
    const double p = Mean(r, RowKind::kAggregate, mu, 0.5, "precision");
    const double rc = Mean(r, RowKind::kAggregate, mu, 0.5, "recall");
    const double cg = Mean(r, RowKind::kAggregate, mu, 0.5, "correct_gating");
    out.Require(p >= base_p - 0.005,
                Format("mu %g: precision %.4f < baseline - 0.5pp", mu, p));
    out.Require(rc >= base_r - 0.005,
                Format("mu %g: recall %.4f < baseline - 0.5pp", mu, rc));
    if (mu >= 0.3 - 1e-12) {
      out.Require(cg >= 0.9, Format("mu %g: correct gating %.4f", mu, cg));
      for (const SweepRow* row : r.Select(RowKind::kGc, mu, 0.5, 0.01)) {
        const double cal = *r.Get(*row, "calibration_incorrect_rate");
        const double held = *r.Get(*row, "incorrect_gating");
        const std::size_t n_pos = ctx.data().test.CountPositives();
        const double hi = BinomialBand(0.01, n_pos).second;
        out.Require(cal <= 0.01, Format("mu %g: calibration rate %.4f", mu, cal));
        out.Require(held <= hi, Format("mu %g: held-out incorrect %.4f > %.4f",
                                       mu, held, hi));
      }
    }
    summary += Format("; mu %g: P %.4f R %.4f gating %.4f", mu, p, rc, cg);
    for (double alpha : {0.1, 0.3, 0.5}) {
      const double nu = Mean(r, RowKind::kAggregate, mu, alpha, "sparsity");
      out.Require(nu >= 0.7,
                  Format("mu %g alpha %g: sparsity %.4f", mu, alpha, nu));
    }
  }
  double min_nu = 1.0;
  for (const SweepRow& row : r.rows) {
    if (row.kind == RowKind::kAggregate && row.alpha <= 0.5 + 1e-12) {
      min_nu = std::min(min_nu, *r.Get(row, "sparsity"));
    }
  }
  summary += Format("; min sparsity %.4f", min_nu);
  if (out.pass) out.detail = summary;
  return out;
}

Verdict DepthTrend(Context& ctx) {
  Verdict out;
  const SweepResult& r = ctx.sweep();
  const std::vector<double> mus = {0.05, 0.3, 0.5};
  std::vector<double> means, ses;
  for (double mu : mus) {
    const auto rows = r.Select(RowKind::kAggregate, mu, 0.5, 0.01);
    if (rows.empty()) {
      out.Require(false, Format("no rows at mu %g", mu));
      return out;
    }
    const std::size_t k = r.MetricIndex("correct_gating");
    means.push_back(*rows[0]->values[k]);
    ses.push_back(*rows[0]->variances[k] /
                  static_cast<double>(rows[0]->counts[k]));
  }
  int inversions = 0, large = 0;
  for (std::size_t i = 0; i + 1 < mus.size(); ++i) {
    if (means[i + 1] < means[i]) {
      ++inversions;
      if (means[i] - means[i + 1] > std::sqrt(ses[i] + ses[i + 1])) ++large;
    }
  }
  out.Require(inversions <= 1 && large == 0,
              Format("%g inversions, %g beyond one standard error", inversions,
                     large));
  out.detail = (out.pass ? std::string() : out.detail + "; ") +
               Format("mean correct gating %.4f, %.4f, %.4f at mu 0.05, 0.3, "
                      "0.5",
                      means[0], means[1], means[2]) +
               Format(" (%g inversions)", inversions);
  return out;
}

Verdict OracleEquivalences(Context& ctx) {
  Verdict out;
  const PartitionedModel& model = ctx.model();
  const Dataset& test = ctx.data().test;
  std::vector<double> pos, neg;
  SplitScores(GateScores(model, test.inputs), test, &pos, &neg);
  const auto roc = RocCurve(pos, neg);
  const auto brute = testing::BruteForceRoc(pos, neg);
  bool roc_equal = roc.size() == brute.size();
  for (std::size_t i = 0; roc_equal && i < roc.size(); ++i) {
    roc_equal = roc[i].threshold == brute[i].threshold &&
                roc[i].false_stop_rate == brute[i].false_stop_rate &&
                roc[i].correct_stop_rate == brute[i].correct_stop_rate;
  }
  out.Require(roc_equal, "ROC differs from brute force");

  std::vector<double> val_pos, val_neg;
  SplitScores(GateScores(model, ctx.data().val.inputs), ctx.data().val,
              &val_pos, &val_neg);
  int metric_mismatches = 0;
  for (double target : {0.001, 0.01, 0.05, 0.2}) {
    const Evaluation eval = Evaluate(model, Calibrate(val_pos, target), test);
    const testing::ConfusionMetrics oracle = testing::MetricsFromLog(
        eval.decisions, test.class_map.num_classes());
    const GatingStats& s = eval.report.runs[0];
    auto same = [](const std::optional<double>& a,
                   const std::optional<double>& b) {
      return a.has_value() == b.has_value() &&
             (!a || std::fabs(*a - *b) < 1e-12);
    };
    metric_mismatches += !same(s.correct_gating_rate, oracle.correct_gating);
    metric_mismatches += !same(s.incorrect_gating_rate, oracle.incorrect_gating);
    metric_mismatches += !same(s.precision, oracle.precision);
    metric_mismatches += !same(s.recall, oracle.recall);
  }
  out.Require(metric_mismatches == 0,
              Format("%g metric mismatches", metric_mismatches));

  long skipped = 0;
  const double diff = testing::MaxSparsePathDifference(model, test, &skipped);
  out.Require(diff < 1e-12, Format("sparse path differs by %.3g", diff));
  out.Require(skipped > 0, "sparse path skipped no work");
  if (out.pass) {
    out.detail = Format("ROC %g points equal, 16 metrics equal, sparse path "
                        "max |diff| %.3g with %g multiplies skipped",
                        roc.size(), diff, static_cast<double>(skipped));
  }
  return out;
}

Verdict ReductionReporting(Context& ctx) {
  Verdict out;
  const SweepResult& r = ctx.sweep();
  const std::vector<double>& regimes = ctx.config().sweep.regimes;
  bool reached = false;
  std::string summary;
  for (double a : regimes) {
    char name[32];
    std::snprintf(name, sizeof(name), "reduction@a=%g", a);
    double best = 0.0;
    for (const SweepRow& row : r.rows) {
      if (row.kind != RowKind::kGc || row.status != "ok") continue;
      const auto v = r.Get(row, name);
      out.Require(v.has_value() && *v >= 1.0,
                  Format("missing or invalid reduction at a=%g", a));
      if (v) {
        best = std::max(best, *v);
        reached = reached || InReportedBand(*v);
      }
    }
    summary += Format("a=%g: best reduction %.2fx; ", a, best);
  }
  // The analytic regime grid at the configured power parameters.
  for (const PowerReport& p : Sweep(ctx.config().power, ctx.config().a_grid)) {
    out.Require(std::isfinite(p.reduction_factor) || p.gc_cost == 0.0,
                "non-finite reduction");
  }
  summary += std::string("reported band reached: ") + (reached ? "yes" : "no");
  if (out.pass) out.detail = summary;
  return out;
}

}  // namespace
}  // namespace gatecade

int main(int argc, char** argv) {
  using gatecade::Context;
  using gatecade::Verdict;
  const std::vector<std::pair<std::string, std::function<Verdict(Context&)>>>
      criteria = {
          {"power model exactness", gatecade::PowerExactness},
          {"cost partials", gatecade::PowerPartials},
          {"cost bound and monotonicity", gatecade::PowerBound},
          {"simulator convergence", gatecade::SimulatorConvergence},
          {"gradient correctness", gatecade::GradientCorrectness},
          {"calibration contract", gatecade::CalibrationContract},
          {"trade-off monotonicity", gatecade::TradeOffMonotonicity},
          {"cascade quality", gatecade::CascadeQuality},
          {"depth trend", gatecade::DepthTrend},
          {"oracle equivalences", gatecade::OracleEquivalences},
          {"reduction-factor reporting", gatecade::ReductionReporting},
      };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));
  Context context;
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(number)) continue;
    Verdict verdict;
    try {
      verdict = criteria[i].second(context);
    } catch (const std::exception& e) {
      verdict.pass = false;
      verdict.detail = std::string("exception: ") + e.what();
    }
    failures += verdict.pass ? 0 : 1;
    std::printf("%s criterion %d (%s): %s\n", verdict.pass ? "PASS" : "FAIL",
                number, criteria[i].first.c_str(), verdict.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
