// Copyright 2026 The Cooper Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef COOPER_CURATION_H_
#define COOPER_CURATION_H_

#include <cstdint>
#include <span>
#include <vector>

#include "cooper/cognition.h"
#include "cooper/rectified_flow.h"

namespace cooper {

struct SamplingConfig {
  int k = 8;
  double temperature = 1.0;
  std::uint64_t seed = 42;
  SolverConfig solver{};

  void validate() const;
};

struct CurationConfig {
  double lambda = 0.375;
  double boundary_keep_ratio = 0.5;
  double sft_fraction = 0.5;
  std::uint64_t split_seed = 42;

  void validate() const;
};

struct CurationRecord {
  std::uint64_t item_id = 0;
  double acc_raw = 0.0;
  double acc_aux = 0.0;
  Gain gain = Gain::kBoundary;
};

// Fraction of k rollouts, with the gate forced open (with_aux) or shut, whose
// answer is correct. Rollout j uses Rng::derive(seed, {item.id, with_aux, j}).
double estimate_accuracy(const PolicyParams& p, const ToyItem& item, const HintConfig& env,
                         const SamplingConfig& cfg, bool with_aux, const VelocityField* flow);

// Positive iff acc_aux - acc_raw > lambda, negative iff acc_raw - acc_aux > lambda.
Gain classify_gain(double acc_raw, double acc_aux, double lambda);

struct CurationResult {
  std::vector<LabeledItem> sft;
  std::vector<LabeledItem> rl;
  // One record per item that survived the trivial filter, in input order.
  std::vector<CurationRecord> records;
  int dropped_trivial = 0;
  int dropped_boundary = 0;
};

// Drops items with acc_raw in {0, 1}, labels the rest, keeps boundary items
// with probability boundary_keep_ratio and splits the survivors into SFT and
// RL halves after a seeded shuffle. The SFT half receives ceil(n * fraction)
// items.
CurationResult curate(const PolicyParams& p, std::span<const ToyItem> items, const HintConfig& env,
                      const SamplingConfig& scfg, const CurationConfig& ccfg,
                      const VelocityField* flow);

}  // namespace cooper

#endif  // COOPER_CURATION_H_
