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

#include "cooper/cpr_reward.h"

#include <stdexcept>

namespace cooper {

void ExplorationContext::validate() const {
  if (n < 1) throw std::invalid_argument("exploration context: group size must be >= 1");
  if (aux_count < 0 || aux_count > n) {
    throw std::invalid_argument("exploration context: aux_count must lie in [0, N]");
  }
  if (sigma < 0 || sigma > n) {
    throw std::invalid_argument("exploration context: sigma must lie in [0, N]");
  }
}

namespace {

// Matches `<tag>body</tag>` starting exactly at `pos`, where body contains no
// further `<tag>` or `</tag>`. Returns the position after the closing tag.
std::optional<std::size_t> match_block(const std::string& text, std::size_t pos,
                                       const std::string& tag, std::string* body = nullptr) {
  const std::string open = "<" + tag + ">";
  const std::string close = "</" + tag + ">";
  if (text.compare(pos, open.size(), open) != 0) return std::nullopt;
  const std::size_t start = pos + open.size();
  const std::size_t end = text.find(close, start);
  if (end == std::string::npos) return std::nullopt;
  const std::string inner = text.substr(start, end - start);
  if (inner.find(open) != std::string::npos) return std::nullopt;
  if (body != nullptr) *body = inner;
  return end + close.size();
}

}  // namespace

std::optional<AuxTask> match_thinking_generation(const std::string& text) {
  const auto after_think = match_block(text, 0, "think");
  if (!after_think) return std::nullopt;
  std::string body;
  const auto after_gen = match_block(text, *after_think, "gen", &body);
  if (!after_gen || *after_gen != text.size()) return std::nullopt;
  if (body == "depth") return AuxTask::kDepth;
  if (body == "seg") return AuxTask::kSegmentation;
  return std::nullopt;
}

bool match_thinking_answer(const std::string& text) {
  const auto after_think = match_block(text, 0, "think");
  if (!after_think) return false;
  const auto after_answer = match_block(text, *after_think, "answer");
  return after_answer && *after_answer == text.size();
}

double answer_reward(const Response& response, const ToyItem& item) {
  if (response.segments.empty() || response.segments.back().kind != SegmentKind::kText) return 0.0;
  const auto answer = extract_answer_text(response.segments.back().text);
  if (!answer || answer->size() != 1) return 0.0;
  return (*answer)[0] == choice_letter(item.correct) ? 1.0 : 0.0;
}

double format_reward(const Response& response) {
  const auto& segs = response.segments;
  if (segs.empty()) return 0.0;
  const std::size_t last = segs.size() - 1;
  if (segs[last].kind != SegmentKind::kText || !match_thinking_answer(segs[last].text)) return 0.0;
  std::size_t i = 0;
  while (i < last) {
    if (segs[i].kind != SegmentKind::kText) return 0.0;
    const auto modality = match_thinking_generation(segs[i].text);
    if (!modality) return 0.0;
    if (i + 1 >= last || segs[i + 1].kind != SegmentKind::kVisualAux ||
        segs[i + 1].modality != *modality) {
      return 0.0;
    }
    i += 2;
  }
  return 1.0;
}

double exploration_reward(const ExplorationContext& ctx) {
  ctx.validate();
  if (!ctx.o_i) return 0.0;
  if (ctx.g == Gain::kPositive && ctx.aux_count <= ctx.sigma) return kExplorationBonus;
  if (ctx.g == Gain::kNegative && ctx.aux_count >= ctx.sigma) return -kExplorationBonus;
  return 0.0;
}

RewardBreakdown cpr_total(const Response& response, const ToyItem& item,
                          const ExplorationContext& ctx) {
  RewardBreakdown b;
  b.r_a = answer_reward(response, item);
  b.r_f = format_reward(response);
  b.r_e = exploration_reward(ctx);
  b.total = b.r_a + b.r_f + b.r_e;
  return b;
}

std::vector<RewardBreakdown> score_group(std::span<const Response> responses, const ToyItem& item,
                                         Gain label, int sigma) {
  int aux_count = 0;
  for (const Response& r : responses) aux_count += r.used_aux ? 1 : 0;
  std::vector<RewardBreakdown> out;
  out.reserve(responses.size());
  for (const Response& r : responses) {
    const ExplorationContext ctx{label, sigma, static_cast<int>(responses.size()), aux_count,
                                 r.used_aux};
    out.push_back(cpr_total(r, item, ctx));
  }
  return out;
}

}  // namespace cooper
