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

#ifndef GATECADE_OPTIMIZER_H_
#define GATECADE_OPTIMIZER_H_

#include <map>
#include <string>
#include <vector>

#include "gatecade/graph.h"

namespace gatecade {

// Learning-rate schedule. Rate(step) follows the usual "decay after `step`
// completed updates" convention, so Rate(0) is the initial rate and, for
// cosine decay, Rate(decay_steps) is the terminal rate.
class LrSchedule {
 public:
  enum class Kind { kConstant, kCosineDecay, kPiecewiseConstant };

  static LrSchedule Constant(double rate);
  // rate * ((1 - terminal_fraction) * 0.5 * (1 + cos(pi * t / T)) +
  //         terminal_fraction), with t clamped to T = decay_steps.
  static LrSchedule CosineDecay(double initial_rate, long decay_steps,
                                double terminal_fraction = 0.0);
  // values[i] applies while boundaries[i-1] < step <= boundaries[i].
  static LrSchedule PiecewiseConstant(std::vector<long> boundaries,
                                      std::vector<double> values);

  double Rate(long step) const;
  Kind kind() const { return kind_; }
  long decay_steps() const { return decay_steps_; }

 private:
  Kind kind_ = Kind::kConstant;
  double initial_rate_ = 1e-3;
  long decay_steps_ = 1;
  double terminal_fraction_ = 0.0;
  std::vector<long> boundaries_;
  std::vector<double> values_;
};

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction. Moment accumulators are keyed by parameter name
// and shaped like the parameter.
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  // Applies one update to every parameter using its current grad. `step` is
  // the 1-based update index and must exceed the previous one; the rate used
  // is schedule.Rate(step - 1).
  void Step(const std::vector<Parameter*>& params, const LrSchedule& schedule,
            long step);

  long last_step() const { return last_step_; }
  const Tensor& first_moment(const std::string& name) const {
    return moments_.at(name).first;
  }
  const Tensor& second_moment(const std::string& name) const {
    return moments_.at(name).second;
  }

 private:
  AdamOptions options_;
  long last_step_ = 0;
  std::map<std::string, std::pair<Tensor, Tensor>> moments_;
};

}  // namespace gatecade

#endif  // GATECADE_OPTIMIZER_H_
