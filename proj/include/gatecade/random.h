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

#ifndef GATECADE_RANDOM_H_
#define GATECADE_RANDOM_H_

#include <cstdint>
#include <random>
#include <vector>

namespace gatecade {

// Derives an independent stream seed from a base seed and a stream index
// (splitmix64 finalizer). Used for per-repeat, per-worker and per-block
// streams so results never depend on scheduling.
std::uint64_t DeriveSeed(std::uint64_t base, std::uint64_t stream);

// Seeded random source. Distribution transforms are implemented here rather
// than through <random> distributions so that draws are identical across
// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  bool Bernoulli(double p) { return Uniform() < p; }
  // Standard normal (Box-Muller, one cached spare).
  double Normal();
  // Uniform integer in [0, n).
  std::size_t Index(std::size_t n);

  template <typename T>
  void Shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[Index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gatecade

#endif  // GATECADE_RANDOM_H_
