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


#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "gatecade/checkpoint.h"
#include "gatecade/config.h"
#include "gatecade/error.h"
#include "gatecade/random.h"
#include "gatecade/sweep.h"
#include "gatecade/trainer.h"
#include "test_util.h"

namespace gatecade {
namespace {

using testing::SmallBackbone;
using testing::SmallTaskSpec;
using testing::SmallTrainConfig;

std::string CheckpointText(const PartitionedModel& model) {
  std::stringstream out;
  WriteCheckpoint(out, model.ToCheckpoint());
  return out.str();
}

TEST(DatasetTest, StratifiedSplitsHaveExactPositiveCounts) {
  DatasetSpec spec;
  spec.n_train = 1000;
  spec.n_val = 777;
  spec.n_test = 333;
  const DatasetSplits d = GenerateDataset(spec);
  EXPECT_EQ(d.train.CountPositives(), 200u);
  EXPECT_EQ(d.val.CountPositives(), StratifiedPositiveCount(0.2, 777));
  EXPECT_EQ(d.test.CountPositives(), 67u);
  EXPECT_EQ(StratifiedPositiveCount(0.2, 777), 155u);
}

TEST(DatasetTest, SameSeedSameBytes) {
  for (GeneratorKind kind : {GeneratorKind::kGaussianClusters,
                             GeneratorKind::kRingVsNoise,
                             GeneratorKind::kTokenSequences}) {
    DatasetSpec spec = SmallTaskSpec();
    spec.generator = kind;
    const DatasetSplits a = GenerateDataset(spec);
    const DatasetSplits b = GenerateDataset(spec);
    ASSERT_EQ(a.test.size(), b.test.size());
    for (std::size_t i = 0; i < a.test.size(); ++i) {
      ASSERT_TRUE(a.test.inputs[i].BitEquals(b.test.inputs[i]));
      ASSERT_EQ(a.test.original_labels[i], b.test.original_labels[i]);
    }
    spec.seed += 1;
    EXPECT_FALSE(GenerateDataset(spec).test.inputs[0].BitEquals(a.test.inputs[0]));
  }
}

TEST(DatasetTest, BackgroundOriginalsFoldIntoOneLabel) {
  const DatasetSplits d = GenerateDataset(SmallTaskSpec());
  const ClassMap& map = d.train.class_map;
  EXPECT_EQ(map.num_classes(), 4);
  for (std::size_t i = 0; i < d.train.size(); ++i) {
    const int original = d.train.original_labels[i];
    const int expected = original < 3 ? original : 3;
    EXPECT_EQ(d.train.labels[i], expected);
  }
}

TEST(DatasetTest, SampleMomentsMatchGenerator) {
  DatasetSpec spec;
  spec.n_train = 10000;
  spec.n_val = 100;
  spec.n_test = 100;
  const GeneratorParameters truth = DescribeGenerator(spec);
  const DatasetSplits d = GenerateDataset(spec);
  const int classes = spec.num_positive_classes + spec.num_background_classes;
  for (int c = 0; c < classes; ++c) {
    std::vector<double> sum(spec.input_dim, 0.0), sq(spec.input_dim, 0.0);
    std::size_t n = 0;
    for (std::size_t i = 0; i < d.train.size(); ++i) {
      if (d.train.original_labels[i] != c) continue;
      ++n;
      for (std::size_t k = 0; k < spec.input_dim; ++k) {
        sum[k] += d.train.inputs[i][k];
        sq[k] += d.train.inputs[i][k] * d.train.inputs[i][k];
      }
    }
    ASSERT_GT(n, 100u);
    const double nd = static_cast<double>(n);
    for (std::size_t k = 0; k < spec.input_dim; ++k) {
      const double mean = sum[k] / nd;
      const double var = sq[k] / nd - mean * mean;
      // Standard errors of the mean and of the variance of a normal sample.
      EXPECT_LT(std::fabs(mean - truth.centers[c][k]),
                3.0 * truth.noise_std / std::sqrt(nd));
      EXPECT_LT(std::fabs(var - 1.0), 3.0 * std::sqrt(2.0 / nd));
    }
  }
}

TEST(DatasetTest, PositiveCentersAreSeparated) {
  const DatasetSpec spec;
  const GeneratorParameters g = DescribeGenerator(spec);
  auto dist = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
  };
  const int p = spec.num_positive_classes;
  for (int i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < g.centers.size(); ++j) {
      if (static_cast<int>(j) == i) continue;
      const double need = static_cast<int>(j) < p
                              ? spec.separation * spec.positive_spacing
                              : spec.separation;
      EXPECT_GE(dist(g.centers[i], g.centers[j]), need * spec.noise_std - 1e-12);
    }
  }
}

TEST(DatasetTest, InfeasibleSpecsAreRejected) {
  DatasetSpec spec;
  spec.num_positive_classes = 0;
  EXPECT_THROW(GenerateDataset(spec), Error);
  spec = DatasetSpec{};
  spec.n_test = 4;  // round(0.2 * 4) = 1 positive for 3 positive classes
  EXPECT_THROW(GenerateDataset(spec), Error);
  spec = DatasetSpec{};
  spec.rho = 1.0;
  EXPECT_THROW(GenerateDataset(spec), Error);
  EXPECT_THROW(ParseGeneratorKind("images"), Error);
}

TEST(TrainerTest, ZeroEpochsLeavesTheInitialization) {
  const DatasetSpec spec = SmallTaskSpec();
  const DatasetSplits data = GenerateDataset(spec);
  TrainConfig config = SmallTrainConfig();
  config.epochs = 0;
  config.hardening_epochs = 0;
  config.seed = 12;
  const TrainResult trained = Train(SmallBackbone(spec), config, data.train);
  EXPECT_TRUE(trained.log.empty());
  Rng rng(DeriveSeed(12, 0));
  const PartitionedModel init(SmallBackbone(spec),
                              PrefixDepthFor(config.mu, 10),
                              data.train.class_map, config.gc, rng);
  EXPECT_EQ(CheckpointText(trained.model), CheckpointText(init));
}

TEST(TrainerTest, SameSeedSameCheckpoint) {
  const DatasetSpec spec = SmallTaskSpec();
  const DatasetSplits data = GenerateDataset(spec);
  TrainConfig config = SmallTrainConfig();
  config.epochs = 2;
  config.hardening_epochs = 1;
  config.seed = 4;
  const std::string a =
      CheckpointText(Train(SmallBackbone(spec), config, data.train).model);
  const std::string b =
      CheckpointText(Train(SmallBackbone(spec), config, data.train).model);
  EXPECT_EQ(a, b);
  config.seed = 5;
  EXPECT_NE(a, CheckpointText(Train(SmallBackbone(spec), config, data.train).model));
}

TEST(TrainerTest, GateLearnsBetterThanChance) {
  const DatasetSpec spec = SmallTaskSpec();
  const DatasetSplits data = GenerateDataset(spec);
  TrainConfig config = SmallTrainConfig();
  config.gc->alpha = 1.0;
  const TrainResult trained = Train(SmallBackbone(spec), config, data.train);
  ASSERT_FALSE(trained.log.empty());
  const int last_epoch = trained.log.back().epoch;
  double sum = 0.0;
  int n = 0;
  for (const TrainLogEntry& e : trained.log) {
    if (e.epoch != last_epoch) continue;
    sum += e.gate_loss;
    ++n;
    EXPECT_NEAR(e.total_loss,
                e.task_loss + config.gc->lambda_gc * e.gate_loss, 1e-12);
  }
  EXPECT_LT(sum / n, std::log(2.0));
}

TEST(TrainerTest, HardeningSaturatesTheMaskWithoutFlippingIt) {
  const testing::SmallTask task = testing::TrainSmallTask();
  for (double v : task.model.gc().params().Get("mask_logits").value.values()) {
    EXPECT_EQ(std::fabs(v), kHardenedMaskLogit);
  }
  GcLayerOptions options;
  Rng rng(1);
  GcLayer layer(4, options, rng);
  layer.params().Get("mask_logits").value = Tensor::Vector({-0.2, 0.0, 3.0, -7.0});
  const Tensor before = layer.BinaryMask();
  HardenMask(layer);
  EXPECT_TRUE(layer.BinaryMask().BitEquals(before));
}

TEST(TrainerTest, StrongerSparsityPressureClosesMoreOfTheMask) {
  const DatasetSpec spec = SmallTaskSpec();
  const DatasetSplits data = GenerateDataset(spec);
  double previous = 2.0;
  for (double lambda : {0.25, 1.0, 4.0}) {
    TrainConfig config = SmallTrainConfig();
    config.hardening_epochs = 0;
    config.gc->lambda_gc = lambda;
    config.gc->mask_init_logit = 1.0;
    const TrainResult trained = Train(SmallBackbone(spec), config, data.train);
    double mean = 0.0;
    const Tensor soft = trained.model.gc().SoftMask();
    for (double v : soft.values()) mean += v;
    mean /= static_cast<double>(soft.size());
    EXPECT_LE(mean, previous) << "lambda " << lambda;
    previous = mean;
  }
}

TEST(TrainerTest, NonFiniteLossAborts) {
  const DatasetSpec spec = SmallTaskSpec();
  DatasetSplits data = GenerateDataset(spec);
  data.train.inputs[5][0] = std::numeric_limits<double>::quiet_NaN();
  try {
    Train(SmallBackbone(spec), SmallTrainConfig(), data.train);
    FAIL() << "expected a numeric error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumeric);
  }
  TrainConfig bad = SmallTrainConfig();
  bad.hardening_epochs = bad.epochs + 1;
  EXPECT_THROW(Train(SmallBackbone(spec), bad, data.val), Error);
}

TEST(TrainerTest, LogAndCheckpointRoundTrip) {
  const testing::SmallTask task = testing::TrainSmallTask();
  const PartitionedModel back =
      PartitionedModel::FromCheckpoint(task.model.ToCheckpoint());
  EXPECT_EQ(CheckpointText(back), CheckpointText(task.model));
  EXPECT_EQ(back.gc().alpha(), task.model.gc().alpha());
  EXPECT_EQ(back.gc().lambda_gc(), task.model.gc().lambda_gc());
  EXPECT_EQ(back.gc().mu(), task.model.gc().mu());
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_EQ(RunPrefix(back, task.data.test.inputs[i]).gate_score,
              RunPrefix(task.model, task.data.test.inputs[i]).gate_score);
  }
  std::stringstream log;
  WriteTrainLog(log, {TrainLogEntry{1, 0, 0.01, 1.0, 0.5, 0.25, 1.75}});
  std::string header;
  std::getline(log, header);
  EXPECT_EQ(header,
            "step,epoch,learning_rate,task_loss,gate_loss,sparsity_loss,"
            "total_loss");
}

TEST(TrainerTest, AttentionBackboneTrains) {
  DatasetSpec spec;
  spec.generator = GeneratorKind::kTokenSequences;
  spec.n_train = 300;
  spec.n_val = 200;
  spec.n_test = 200;
  BackboneConfig backbone;
  backbone.kind = BackboneKind::kAttention;
  backbone.width = 8;
  backbone.key_dim = 4;
  backbone.mlp_hidden = 8;
  backbone.depth = 4;
  TrainConfig config = SmallTrainConfig(0.5);
  config.epochs = 2;
  config.hardening_epochs = 1;
  const DatasetSplits data = GenerateDataset(spec);
  const TrainResult trained = Train(backbone, config, data.train);
  EXPECT_EQ(trained.model.prefix_depth(), 2u);
  EXPECT_LT(trained.log.back().task_loss, trained.log.front().task_loss);
}

SweepConfig SmallSweep() {
  const DatasetSpec spec = SmallTaskSpec();
  SweepConfig config;
  config.backbone = SmallBackbone(spec);
  config.train = SmallTrainConfig();
  config.mu_grid = {0.3};
  config.alpha_grid = {0.5};
  config.targets = {0.01, 0.05};
  config.repeats = 3;
  config.baseline = false;
  config.seed = 77;
  return config;
}

class SweepTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    data_ = new DatasetSplits(GenerateDataset(SmallTaskSpec()));
    result_ = new SweepResult(RunSweep(SmallSweep(), *data_));
  }
  static void TearDownTestSuite() {
    delete result_;
    delete data_;
  }
  static DatasetSplits* data_;
  static SweepResult* result_;
};

DatasetSplits* SweepTest::data_ = nullptr;
SweepResult* SweepTest::result_ = nullptr;

TEST_F(SweepTest, OneGridPointGivesRepeatsPlusAggregate) {
  for (double target : {0.01, 0.05}) {
    EXPECT_EQ(result_->Select(RowKind::kGc, 0.3, 0.5, target).size(), 3u);
    EXPECT_EQ(result_->Select(RowKind::kAggregate, 0.3, 0.5, target).size(), 1u);
  }
  EXPECT_EQ(result_->rows.size(), 8u);
  for (const SweepRow& row : result_->rows) EXPECT_EQ(row.status, "ok");
}

TEST_F(SweepTest, AggregatesMatchBruteForce) {
  const SweepRow& agg = *result_->Select(RowKind::kAggregate, 0.3, 0.5, 0.01)[0];
  const auto runs = result_->Select(RowKind::kGc, 0.3, 0.5, 0.01);
  for (std::size_t m = 0; m < result_->metric_names.size(); ++m) {
    std::vector<double> v;
    for (const SweepRow* r : runs) {
      if (r->values[m]) v.push_back(*r->values[m]);
    }
    if (v.empty()) {
      EXPECT_FALSE(agg.values[m].has_value());
      continue;
    }
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size() - 1);
    EXPECT_NEAR(*agg.values[m], mean, 1e-12 * std::max(1.0, std::fabs(mean)))
        << result_->metric_names[m];
    EXPECT_NEAR(*agg.variances[m], var, 1e-12 * std::max(1.0, var))
        << result_->metric_names[m];
    EXPECT_EQ(agg.counts[m], v.size());
  }
}

TEST_F(SweepTest, CorrectGatingNeverDropsAsTargetRises) {
  const auto low = result_->Select(RowKind::kGc, 0.3, 0.5, 0.01);
  const auto high = result_->Select(RowKind::kGc, 0.3, 0.5, 0.05);
  for (std::size_t r = 0; r < low.size(); ++r) {
    EXPECT_EQ(low[r]->seed, high[r]->seed);
    EXPECT_GE(*result_->Get(*high[r], "correct_gating"),
              *result_->Get(*low[r], "correct_gating"));
  }
}

TEST_F(SweepTest, PowerColumnsRecomputeFromMeasuredRates) {
  for (const SweepRow* row : result_->Select(RowKind::kGc, 0.3, 0.5, 0.01)) {
    const GcPowerParams p{*result_->Get(*row, "rho"), row->mu_realized,
                          *result_->Get(*row, "sparsity"),
                          *result_->Get(*row, "correct_gating")};
    for (double a : {0.9, 0.5, 0.1}) {
      char name[32];
      std::snprintf(name, sizeof(name), "gc_cost@a=%g", a);
      EXPECT_NEAR(*result_->Get(*row, name),
                  testing::StraightLineCost(p.rho, p.mu, p.nu, p.gamma, a,
                                            1.0 - a),
                  1e-12);
      std::snprintf(name, sizeof(name), "sim_energy@a=%g", a);
      // The simulator also charges positives that the gate wrongly stops.
      const double woken =
          p.rho * (1.0 - *result_->Get(*row, "incorrect_gating")) +
          (1.0 - p.rho) * (1.0 - p.gamma);
      const double expected =
          p.mu * a + woken * ((1.0 - p.mu) * a + (1.0 - p.nu) * (1.0 - a));
      EXPECT_NEAR(*result_->Get(*row, name), expected, 1e-9);
    }
  }
}

TEST_F(SweepTest, RowsReproduceFromTheirSeed) {
  const SweepRow& row = *result_->Select(RowKind::kGc, 0.3, 0.5, 0.01)[1];
  TrainConfig train = SmallTrainConfig();
  train.seed = row.seed;
  train.gc->alpha = row.alpha;
  train.mu = row.mu;
  const TrainResult trained =
      Train(SmallBackbone(SmallTaskSpec()), train, data_->train);
  std::vector<double> positives;
  const std::vector<double> scores = GateScores(trained.model, data_->val.inputs);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!data_->val.IsBackground(i)) positives.push_back(scores[i]);
  }
  const GatingThreshold threshold = Calibrate(positives, row.target);
  EXPECT_EQ(threshold.tau, *result_->Get(row, "tau"));
  const Evaluation eval = Evaluate(trained.model, threshold, data_->test);
  EXPECT_EQ(eval.report.runs[0].recall, result_->Get(row, "recall"));
  EXPECT_EQ(eval.report.runs[0].correct_gating_rate,
            result_->Get(row, "correct_gating"));
}

TEST_F(SweepTest, CsvHasOneLinePerRow) {
  std::stringstream out;
  WriteSweepCsv(out, *result_);
  std::string line;
  std::getline(out, line);
  EXPECT_EQ(line.rfind("kind,mu,mu_realized,alpha,target,repeat,seed,status,tau,tau_var", 0), 0u);
  std::size_t lines = 0;
  while (std::getline(out, line)) ++lines;
  EXPECT_EQ(lines, result_->rows.size());
}

TEST(SweepFailureTest, FailedGridPointIsRecorded) {
  SweepConfig config = SmallSweep();
  config.repeats = 2;
  config.baseline = true;
  config.train.hardening_epochs = config.train.epochs + 1;
  const SweepResult result = RunSweep(config, GenerateDataset(SmallTaskSpec()));
  ASSERT_FALSE(result.rows.empty());
  for (const SweepRow& row : result.rows) {
    if (row.repeat < 0) continue;
    EXPECT_EQ(row.status.rfind("error: ", 0), 0u);
    for (const auto& v : row.values) EXPECT_FALSE(v.has_value());
  }
}

TEST(SweepConfigTest, Validation) {
  SweepConfig config = SmallSweep();
  config.mu_grid = {1.0};
  EXPECT_THROW(config.Validate(), Error);
  config = SmallSweep();
  config.repeats = 0;
  EXPECT_THROW(config.Validate(), Error);
  EXPECT_EQ(SweepConfig{}.repeats, 10);
}

TEST(ConfigTest, DefaultsAndDerivedFields) {
  const ExperimentConfig c = ParseConfig("{}");
  EXPECT_EQ(c.seed, 2026u);
  EXPECT_EQ(c.backbone.input_dim, c.dataset.input_dim);
  EXPECT_EQ(c.backbone.num_classes, 4u);
  EXPECT_EQ(c.sweep.repeats, 10);
  EXPECT_EQ(c.sweep.mu_grid, (std::vector<double>{0.05, 0.1, 0.2, 0.3, 0.5}));
  EXPECT_EQ(c.train.seed, c.seed);
  EXPECT_EQ(c.target_incorrect_rate, 0.01);
}

TEST(ConfigTest, ParsesSectionsAndRejectsUnknownKeys) {
  const ExperimentConfig c = ParseConfig(R"({
    "seed": 9,
    "dataset": {"rho": 0.1, "n_test": 2000},
    "train": {"epochs": 3, "hardening_epochs": 1, "with_gc": true,
              "gc": {"alpha": 0.2, "lambda": 2.0},
              "schedule": {"kind": "piecewise", "boundaries": [10],
                           "values": [0.01, 0.001]}},
    "power": {"gamma": 0.5, "a_grid": [0.2]}
  })");
  EXPECT_EQ(c.dataset.rho, 0.1);
  EXPECT_EQ(c.train.gc->alpha, 0.2);
  EXPECT_EQ(c.train.gc->lambda_gc, 2.0);
  EXPECT_EQ(c.train.schedule.values.size(), 2u);
  EXPECT_EQ(c.sweep.train.epochs, 3);
  EXPECT_EQ(c.power.gamma, 0.5);
  EXPECT_EQ(c.a_grid, std::vector<double>{0.2});
  try {
    ParseConfig(R"({"dataset": {"rhoo": 0.1}})");
    FAIL() << "expected a config error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
    EXPECT_NE(std::string(e.what()).find("rhoo"), std::string::npos);
  }
  EXPECT_THROW(ParseConfig("{not json"), Error);
  EXPECT_THROW(ParseConfig(R"({"dataset": {"rho": "high"}})"), Error);
  EXPECT_THROW(ParseConfig(R"({"backbone": {"kind": "attention"}})"), Error);
}

TEST(ConfigTest, HashTracksContent) {
  EXPECT_EQ(ParseConfig(R"({"seed": 1})").hash, ParseConfig(R"({ "seed" : 1 })").hash);
  EXPECT_NE(ParseConfig(R"({"seed": 1})").hash, ParseConfig(R"({"seed": 2})").hash);
  EXPECT_EQ(Fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(Fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(ConfigTest, ThresholdRoundTripIsExact) {
  GatingThreshold t;
  t.tau = 0.1 + 0.2;
  t.calibration_incorrect_rate = 0.0099;
  t.calibration_positives = 1000;
  const GatingThreshold back = ThresholdFromJson(ThresholdToJson(t));
  EXPECT_EQ(back.tau, t.tau);
  EXPECT_EQ(back.calibration_positives, 1000u);
  t.tau = kNeverStopThreshold;
  EXPECT_EQ(ThresholdFromJson(ThresholdToJson(t)).tau, kNeverStopThreshold);
}

}  // namespace
}  // namespace gatecade
