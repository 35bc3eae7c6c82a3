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

#ifndef COOPER_GRPO_TRAINER_H_
#define COOPER_GRPO_TRAINER_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cooper/cognition.h"
#include "cooper/cpr_reward.h"
#include "cooper/numerics.h"
#include "cooper/rectified_flow.h"

namespace cooper {

struct GrpoConfig {
  double clip_eps = 0.2;
  double kl_beta = 0.0;
  double lr = 1e-3;
  int group_size = 8;
  int batch_items = 32;
  int steps = 100;
  double std_floor = 1e-8;
  int sigma = 4;
  SolverConfig solver{};

  // Throws std::invalid_argument on out-of-range fields (including sigma > N).
  void validate() const;
};

// Population-statistics advantages; all zero when the std is below std_floor.
std::vector<double> compute_advantages(std::span<const double> rewards, double std_floor = 1e-8);

// N responses to one item with their rewards and advantages.
struct RolloutGroup {
  LabeledItem item;
  std::vector<Response> responses;
  std::vector<RewardBreakdown> rewards;
  std::vector<double> advantages;

  // Scores `responses` with the CPR reward and fills rewards and advantages.
  static RolloutGroup score(LabeledItem item, std::vector<Response> responses,
                            const GrpoConfig& cfg);
  void validate() const;
};

// exp(log pi_p(response) - behaviour log-prob). Throws NumericError if the
// result is not finite.
double importance_ratio(const PolicyParams& p, const Response& response, const ToyItem& item,
                        const HintConfig& env);

// min(s A, clip(s, 1 - eps, 1 + eps) A).
double clipped_term(double ratio, double advantage, double eps);

struct GrpoEval {
  double objective = 0.0;
  Vector grad;               // dJ/dtheta in the flat policy layout
  double clip_fraction = 0.0;  // share of responses with |s - 1| > eps
  double mean_kl = 0.0;        // mean exact KL(p || ref) over groups
};

// J = mean over all responses of the clipped term minus beta * mean KL over
// groups.
double grpo_objective(const PolicyParams& p, std::span<const RolloutGroup> groups,
                      const PolicyParams& ref, const GrpoConfig& cfg, const HintConfig& env);
GrpoEval grpo_objective_grad(const PolicyParams& p, std::span<const RolloutGroup> groups,
                             const PolicyParams& ref, const GrpoConfig& cfg,
                             const HintConfig& env);

struct TrainMetrics {
  int step = 0;
  double mean_reward = 0.0;
  double mean_r_a = 0.0;
  double mean_r_f = 0.0;
  double mean_r_e = 0.0;
  double aux_rate_pos = 0.0;  // NaN when the batch has no item with that label
  double aux_rate_neg = 0.0;
  double aux_rate_bnd = 0.0;
  double kl = 0.0;
  double clip_fraction = 0.0;
};

std::vector<std::string> metrics_columns();
std::vector<double> metrics_values(const TrainMetrics& m);

// Samples N rollouts per item, scores them within their group and takes one
// Adam ascent step on J. Rollout (b, i) uses Rng::derive(seed, {b, i}).
// Returns the groups through `groups_out` when it is non-null.
TrainMetrics train_step(PolicyParams& p, OptState& opt, std::span<const LabeledItem> items,
                        const VelocityField& flow, const PolicyParams& ref,
                        const GrpoConfig& cfg, const HintConfig& env, std::uint64_t seed,
                        std::vector<RolloutGroup>* groups_out = nullptr);

struct TrainLoopResult {
  std::vector<TrainMetrics> history;
};

using StepCallback = std::function<void(int step, const std::vector<RolloutGroup>& groups)>;

// Takes the reference snapshot at entry, then runs cfg.steps train_steps on
// batches drawn from reshuffled passes over the dataset.
TrainLoopResult train_loop(PolicyParams& p, std::span<const LabeledItem> dataset,
                           const VelocityField& flow, const GrpoConfig& cfg,
                           const HintConfig& env, std::uint64_t seed,
                           const StepCallback& on_step = {});

// Means of consecutive non-overlapping windows (a trailing partial window is
// dropped) and whether they never decrease.
std::vector<double> window_means(std::span<const double> values, int window);
bool trend_non_decreasing(std::span<const double> values, int window);

}  // namespace cooper

#endif  // COOPER_GRPO_TRAINER_H_
