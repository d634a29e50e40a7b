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

#include "gatecade/optimizer.h"

#include <algorithm>
#include <cmath>

#include "gatecade/error.h"

namespace gatecade {

LrSchedule LrSchedule::Constant(double rate) {
  if (!(rate > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "learning rate must be positive");
  }
  LrSchedule s;
  s.kind_ = Kind::kConstant;
  s.initial_rate_ = rate;
  return s;
}

LrSchedule LrSchedule::CosineDecay(double initial_rate, long decay_steps,
                                   double terminal_fraction) {
  if (!(initial_rate > 0.0) || decay_steps < 1 || terminal_fraction < 0.0 ||
      terminal_fraction > 1.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "cosine decay needs rate > 0, decay_steps >= 1 and "
                "terminal_fraction in [0, 1]");
  }
  LrSchedule s;
  s.kind_ = Kind::kCosineDecay;
  s.initial_rate_ = initial_rate;
  s.decay_steps_ = decay_steps;
  s.terminal_fraction_ = terminal_fraction;
  return s;
}

LrSchedule LrSchedule::PiecewiseConstant(std::vector<long> boundaries,
                                         std::vector<double> values) {
  if (values.size() != boundaries.size() + 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "piecewise schedule needs one more value than boundaries");
  }
  if (!std::is_sorted(boundaries.begin(), boundaries.end())) {
    throw Error(ErrorCode::kInvalidArgument,
                "piecewise schedule boundaries must be increasing");
  }
  for (double v : values) {
    if (!(v > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "piecewise schedule values must be positive");
    }
  }
  LrSchedule s;
  s.kind_ = Kind::kPiecewiseConstant;
  s.initial_rate_ = values.front();
  s.boundaries_ = std::move(boundaries);
  s.values_ = std::move(values);
  return s;
}

double LrSchedule::Rate(long step) const {
  switch (kind_) {
    case Kind::kConstant:
      return initial_rate_;
    case Kind::kCosineDecay: {
      const double t =
          static_cast<double>(std::clamp(step, 0L, decay_steps_)) /
          static_cast<double>(decay_steps_);
      const double cosine = 0.5 * (1.0 + std::cos(M_PI * t));
      return initial_rate_ *
             ((1.0 - terminal_fraction_) * cosine + terminal_fraction_);
    }
    case Kind::kPiecewiseConstant: {
      const auto it =
          std::lower_bound(boundaries_.begin(), boundaries_.end(), step);
      return values_[static_cast<std::size_t>(it - boundaries_.begin())];
    }
  }
  return initial_rate_;
}

void Adam::Step(const std::vector<Parameter*>& params,
                const LrSchedule& schedule, long step) {
  if (step < 1 || step <= last_step_) {
    throw Error(ErrorCode::kInvalidArgument,
                "Adam step must be >= 1 and strictly increasing, got " +
                    std::to_string(step) + " after " +
                    std::to_string(last_step_));
  }
  last_step_ = step;
  const double rate = schedule.Rate(step - 1);
  const double t = static_cast<double>(step);
  const double correction1 = 1.0 - std::pow(options_.beta1, t);
  const double correction2 = 1.0 - std::pow(options_.beta2, t);
  for (Parameter* p : params) {
    if (p->grad.shape() != p->value.shape()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "gradient shape " + ShapeToString(p->grad.shape()) +
                      " does not match parameter '" + p->name + "' " +
                      ShapeToString(p->value.shape()));
    }
    auto it = moments_.find(p->name);
    if (it == moments_.end()) {
      it = moments_
               .emplace(p->name, std::make_pair(Tensor::ZerosLike(p->value),
                                                Tensor::ZerosLike(p->value)))
               .first;
    } else if (it->second.first.shape() != p->value.shape()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "Adam state for '" + p->name + "' has a different shape");
    }
    Tensor& m = it->second.first;
    Tensor& v = it->second.second;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad[i];
      m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * g;
      v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p->value[i] -= rate * m_hat / (std::sqrt(v_hat) + options_.epsilon);
    }
  }
}

}  // namespace gatecade
