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

#include "cooper/curation.h"

#include <cmath>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "cooper/cpr_reward.h"

namespace cooper {

void SamplingConfig::validate() const {
  if (k < 1) throw std::invalid_argument("sampling: k must be >= 1");
  if (!(temperature > 0.0)) throw std::invalid_argument("sampling: temperature must be > 0");
  if (solver.steps < 1) throw std::invalid_argument("sampling: solver steps must be >= 1");
}

void CurationConfig::validate() const {
  if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("curation: lambda must lie in (0, 1)");
  if (!(boundary_keep_ratio > 0.0 && boundary_keep_ratio <= 1.0)) {
    throw std::invalid_argument("curation: boundary_keep_ratio must lie in (0, 1]");
  }
  if (!(sft_fraction >= 0.0 && sft_fraction <= 1.0)) {
    throw std::invalid_argument("curation: sft_fraction must lie in [0, 1]");
  }
}

double estimate_accuracy(const PolicyParams& p, const ToyItem& item, const HintConfig& env,
                         const SamplingConfig& cfg, bool with_aux, const VelocityField* flow) {
  cfg.validate();
  SampleOptions options;
  options.temperature = cfg.temperature;
  options.gate = with_aux ? GateMode::kForceOn : GateMode::kForceOff;
  options.solver = cfg.solver;
  int correct = 0;
  for (int j = 0; j < cfg.k; ++j) {
    Rng rng = Rng::derive(cfg.seed, {item.id, with_aux ? 1ULL : 0ULL, static_cast<std::uint64_t>(j)});
    const Response r = policy_sample(p, item, env, rng, flow, options);
    correct += answer_reward(r, item) > 0.5 ? 1 : 0;
  }
  return static_cast<double>(correct) / cfg.k;
}

Gain classify_gain(double acc_raw, double acc_aux, double lambda) {
  if (acc_aux - acc_raw > lambda) return Gain::kPositive;
  if (acc_raw - acc_aux > lambda) return Gain::kNegative;
  return Gain::kBoundary;
}

CurationResult curate(const PolicyParams& p, std::span<const ToyItem> items, const HintConfig& env,
                      const SamplingConfig& scfg, const CurationConfig& ccfg,
                      const VelocityField* flow) {
  scfg.validate();
  ccfg.validate();
  if (items.empty()) throw std::invalid_argument("curate: no items");
  CurationResult result;
  std::vector<LabeledItem> kept;
  for (const ToyItem& item : items) {
    const double acc_raw = estimate_accuracy(p, item, env, scfg, false, flow);
    if (acc_raw == 0.0 || acc_raw == 1.0) {
      ++result.dropped_trivial;
      continue;
    }
    const double acc_aux = estimate_accuracy(p, item, env, scfg, true, flow);
    const Gain gain = classify_gain(acc_raw, acc_aux, ccfg.lambda);
    result.records.push_back(CurationRecord{item.id, acc_raw, acc_aux, gain});
    if (gain == Gain::kBoundary) {
      Rng keep = Rng::derive(ccfg.split_seed, {0x4B454550ULL, item.id});
      if (!(keep.uniform() < ccfg.boundary_keep_ratio)) {
        ++result.dropped_boundary;
        continue;
      }
    }
    kept.push_back(LabeledItem{item, gain});
  }
  if (kept.empty()) {
    spdlog::warn("curation kept no items ({} trivial, {} boundary dropped)", result.dropped_trivial,
                 result.dropped_boundary);
    return result;
  }
  Rng shuffle = Rng::derive(ccfg.split_seed, {0x53504C4954ULL});
  for (std::size_t i = kept.size(); i > 1; --i) std::swap(kept[i - 1], kept[shuffle.below(i)]);
  const auto n_sft = static_cast<std::size_t>(std::ceil(kept.size() * ccfg.sft_fraction));
  result.sft.assign(kept.begin(), kept.begin() + static_cast<std::ptrdiff_t>(n_sft));
  result.rl.assign(kept.begin() + static_cast<std::ptrdiff_t>(n_sft), kept.end());
  return result;
}

}  // namespace cooper
