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


// Command-line front end:
//   gatecade <train|calibrate|evaluate|power-sweep|simulate|sweep>
//            --config <file> --out <dir>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gatecade/cascade.h"
#include "gatecade/checkpoint.h"
#include "gatecade/config.h"
#include "gatecade/error.h"
#include "gatecade/island_sim.h"
#include "gatecade/power_model.h"
#include "gatecade/random.h"
#include "gatecade/sweep.h"
#include "gatecade/trainer.h"
#include "json.hpp"

namespace gatecade {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

struct Invocation {
  std::string command;
  std::string config_path;
  std::string out_dir;
  std::string model_path;
  std::string threshold_path;
};

std::string HexHash(std::uint64_t value) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(value));
  return buf;
}

class RunDirectory {
 public:
  RunDirectory(const Invocation& inv, const ExperimentConfig& config)
      : dir_(inv.out_dir) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) {
      throw Error(ErrorCode::kIo,
                  "cannot create output directory '" + inv.out_dir + "'");
    }
    manifest_["command"] = inv.command;
    manifest_["config_path"] = inv.config_path;
    manifest_["config_hash"] = HexHash(config.hash);
    manifest_["seeds"] = {{"base", config.seed},
                          {"dataset", config.dataset.seed},
                          {"train", config.train.seed},
                          {"evaluate", config.evaluate.seed},
                          {"sweep", config.sweep.seed},
                          {"simulation", config.simulation.seed}};
    manifest_["outputs"] = Json::array();
  }

  std::string Path(const std::string& name) const {
    return (fs::path(dir_) / name).string();
  }

  std::ofstream Open(const std::string& name) {
    std::ofstream out(Path(name));
    if (!out) throw Error(ErrorCode::kIo, "cannot write '" + Path(name) + "'");
    out.precision(17);
    manifest_["outputs"].push_back(name);
    return out;
  }

  void Record(const std::string& key, Json value) {
    manifest_[key] = std::move(value);
  }

  void Finish() {
    std::ofstream out(Path("manifest.json"));
    if (!out) throw Error(ErrorCode::kIo, "cannot write manifest.json");
    out << manifest_.dump(2) << '\n';
  }

 private:
  std::string dir_;
  Json manifest_;
};

std::string ReadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string Require(const std::string& value, const char* what) {
  if (value.empty()) {
    throw Error(ErrorCode::kConfig,
                std::string("no ") + what + " path given (config or flag)");
  }
  return value;
}

GatingThreshold LoadThreshold(const std::string& path) {
  return ThresholdFromJson(ReadFile(path));
}

void CmdTrain(const ExperimentConfig& config, RunDirectory& run) {
  const DatasetSplits data = GenerateDataset(config.dataset);
  const TrainResult result = Train(config.backbone, config.train, data.train);
  SaveCheckpoint(run.Path("model.ckpt"), result.model.ToCheckpoint());
  run.Record("model", "model.ckpt");
  std::ofstream log = run.Open("train_log.csv");
  WriteTrainLog(log, result.log);
  run.Record("mu_realized", result.model.mu());
  std::cout << "trained model at mu=" << result.model.mu() << " ("
            << result.log.size() << " steps)\n";
}

void CmdCalibrate(const ExperimentConfig& config, const Invocation& inv,
                  RunDirectory& run) {
  const PartitionedModel model = PartitionedModel::FromCheckpoint(
      LoadCheckpoint(Require(inv.model_path, "model")));
  const DatasetSplits data = GenerateDataset(config.dataset);
  const std::vector<double> scores = GateScores(model, data.val.inputs);
  std::vector<double> positives;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!data.val.IsBackground(i)) positives.push_back(scores[i]);
  }
  const GatingThreshold threshold =
      Calibrate(positives, config.target_incorrect_rate);
  std::ofstream out = run.Open("threshold.json");
  out << ThresholdToJson(threshold);
  std::cout << "tau=" << threshold.tau << " calibration incorrect rate="
            << threshold.calibration_incorrect_rate
            << (threshold.undersampled ? " (undersampled)" : "") << '\n';
}

void CmdEvaluate(const ExperimentConfig& config, const Invocation& inv,
                 RunDirectory& run) {
  const PartitionedModel model = PartitionedModel::FromCheckpoint(
      LoadCheckpoint(Require(inv.model_path, "model")));
  const GatingThreshold threshold =
      LoadThreshold(Require(inv.threshold_path, "threshold"));
  const DatasetSplits data = GenerateDataset(config.dataset);
  const Evaluation eval = Evaluate(model, threshold, data.test, config.evaluate);
  std::ofstream decisions = run.Open("decisions.csv");
  WriteDecisionLog(decisions, eval.decisions);
  std::ofstream stats = run.Open("stats.csv");
  WriteStatsReport(stats, eval.report);
  run.Record("suffix_evaluations", eval.counters.suffix_evaluations);
  WriteStatsReport(std::cout, eval.report);
}

void CmdPowerSweep(const ExperimentConfig& config, RunDirectory& run) {
  const std::vector<PowerReport> rows = Sweep(config.power, config.a_grid);
  std::ofstream out = run.Open("power.csv");
  WritePowerCsv(out, rows);
  bool any_in_band = false;
  for (const PowerReport& row : rows) {
    any_in_band = any_in_band || InReportedBand(row.reduction_factor);
  }
  run.Record("reduction_band", {{"low", kReportedReductionLow},
                                {"high", kReportedReductionHigh},
                                {"reached", any_in_band}});
  WritePowerCsv(std::cout, rows);
  std::cout << "reduction band [" << kReportedReductionLow << ", "
            << kReportedReductionHigh << "] reached: "
            << (any_in_band ? "yes" : "no") << '\n';
}

void CmdSimulate(const ExperimentConfig& config, const Invocation& inv,
                 RunDirectory& run) {
  const Deployment deployment =
      Deployment::FromSystemConfig(SystemConfig::FromCompute(config.simulation.a));
  SimulationOptions options;
  options.samples = config.simulation.samples;
  options.seed = config.simulation.seed;
  options.workers = config.simulation.workers;
  std::ofstream trace;
  if (config.simulation.trace) {
    trace = run.Open("trace.csv");
    options.trace = &trace;
  }
  EnergyReport report;
  if (config.simulation.mode == "analytic") {
    report = SimulateAnalytic(deployment, config.power, options);
  } else {
    const PartitionedModel model = PartitionedModel::FromCheckpoint(
        LoadCheckpoint(Require(inv.model_path, "model")));
    const GatingThreshold threshold =
        LoadThreshold(Require(inv.threshold_path, "threshold"));
    const DatasetSplits data = GenerateDataset(config.dataset);
    report = SimulateEmpirical(deployment, model, threshold, data.test, options);
  }
  std::ofstream out = run.Open("energy.csv");
  WriteEnergyReport(out, report);
  WriteEnergyReport(std::cout, report);
}

void CmdSweep(const ExperimentConfig& config, RunDirectory& run) {
  const DatasetSplits data = GenerateDataset(config.dataset);
  const SweepResult result = RunSweep(config.sweep, data);
  std::ofstream out = run.Open("sweep.csv");
  WriteSweepCsv(out, result);
  std::size_t failed = 0;
  for (const SweepRow& row : result.rows) failed += row.status != "ok";
  run.Record("failed_rows", failed);
  std::cout << result.rows.size() << " rows written, " << failed
            << " failed\n";
}

int Run(const Invocation& inv) {
  const ExperimentConfig config = LoadConfig(inv.config_path);
  Invocation resolved = inv;
  if (resolved.model_path.empty()) resolved.model_path = config.model_path;
  if (resolved.threshold_path.empty()) {
    resolved.threshold_path = config.threshold_path;
  }
  RunDirectory run(resolved, config);
  if (inv.command == "train") {
    CmdTrain(config, run);
  } else if (inv.command == "calibrate") {
    CmdCalibrate(config, resolved, run);
  } else if (inv.command == "evaluate") {
    CmdEvaluate(config, resolved, run);
  } else if (inv.command == "power-sweep") {
    CmdPowerSweep(config, run);
  } else if (inv.command == "simulate") {
    CmdSimulate(config, resolved, run);
  } else {
    CmdSweep(config, run);
  }
  run.Finish();
  return 0;
}

}  // namespace
}  // namespace gatecade

int main(int argc, char** argv) {
  CLI::App app{"gatecade: gated-compression cascades for always-on models"};
  app.require_subcommand(1);
  gatecade::Invocation inv;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"train", "train a partitioned model"},
      {"calibrate", "calibrate the early-stopping threshold"},
      {"evaluate", "evaluate a calibrated cascade on the test split"},
      {"power-sweep", "evaluate the power model over a compute-cost grid"},
      {"simulate", "simulate a two-island deployment"},
      {"sweep", "run the mu / alpha / target experiment grid"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", inv.config_path, "JSON config file")
        ->required();
    sub->add_option("--out", inv.out_dir, "output directory")->required();
    sub->add_option("--model", inv.model_path, "model checkpoint");
    sub->add_option("--threshold", inv.threshold_path, "threshold file");
    sub->callback([&inv, name = name]() { inv.command = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(gatecade::ErrorCode::kInvalidArgument);
  }
  try {
    return gatecade::Run(inv);
  } catch (const gatecade::Error& e) {
    std::cerr << "error [" << gatecade::ErrorCodeName(e.code())
              << "]: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
