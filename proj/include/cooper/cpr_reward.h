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

#ifndef COOPER_CPR_REWARD_H_
#define COOPER_CPR_REWARD_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cooper/cognition.h"

namespace cooper {

inline constexpr double kExplorationBonus = 0.2;

struct RewardBreakdown {
  double r_a = 0.0;
  double r_f = 0.0;
  double r_e = 0.0;
  double total = 0.0;
};

// Group context for the exploration term. aux_count is the number of
// responses in the group that used an auxiliary modality.
struct ExplorationContext {
  Gain g = Gain::kBoundary;
  int sigma = 4;
  int n = 8;
  int aux_count = 0;
  bool o_i = false;

  // Throws std::invalid_argument unless 0 <= aux_count <= n, 0 <= sigma <= n
  // and n >= 1.
  void validate() const;
  double usage() const { return static_cast<double>(aux_count) / n; }
};

// Segment-level pattern checks. Both accept any string and never throw.
// `<think>...</think><gen>depth|seg</gen>` with a single, non-nested think
// block; on success the declared modality is returned.
std::optional<AuxTask> match_thinking_generation(const std::string& text);
// `<think>...</think><answer>...</answer>`.
bool match_thinking_answer(const std::string& text);

double answer_reward(const Response& response, const ToyItem& item);
double format_reward(const Response& response);
double exploration_reward(const ExplorationContext& ctx);
RewardBreakdown cpr_total(const Response& response, const ToyItem& item,
                          const ExplorationContext& ctx);

// Scores a whole group: the context of every response is built from the
// group's own aux usage.
std::vector<RewardBreakdown> score_group(std::span<const Response> responses, const ToyItem& item,
                                         Gain label, int sigma);

}  // namespace cooper

#endif  // COOPER_CPR_REWARD_H_
