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

#include "cooper/grpo_trainer.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <spdlog/spdlog.h>

namespace cooper {

void GrpoConfig::validate() const {
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw std::invalid_argument("grpo: clip_eps must lie in (0, 1)");
  if (!(kl_beta >= 0.0)) throw std::invalid_argument("grpo: kl_beta must be >= 0");
  if (!(lr > 0.0)) throw std::invalid_argument("grpo: lr must be > 0");
  if (group_size < 2) throw std::invalid_argument("grpo: group_size must be >= 2");
  if (batch_items < 1) throw std::invalid_argument("grpo: batch_items must be >= 1");
  if (steps < 0) throw std::invalid_argument("grpo: steps must be >= 0");
  if (!(std_floor > 0.0)) throw std::invalid_argument("grpo: std_floor must be > 0");
  if (sigma < 0 || sigma > group_size) {
    throw std::invalid_argument("grpo: sigma must lie in [0, group_size]");
  }
  if (solver.steps < 1) throw std::invalid_argument("grpo: solver steps must be >= 1");
}

std::vector<double> compute_advantages(std::span<const double> rewards, double std_floor) {
  const std::size_t n = rewards.size();
  std::vector<double> adv(n, 0.0);
  if (n == 0) return adv;
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double std = std::sqrt(var / n);
  if (!(std >= std_floor)) return adv;
  for (std::size_t i = 0; i < n; ++i) adv[i] = (rewards[i] - mean) / std;
  return adv;
}

RolloutGroup RolloutGroup::score(LabeledItem item, std::vector<Response> responses,
                                 const GrpoConfig& cfg) {
  RolloutGroup g;
  g.rewards = score_group(responses, item.item, item.label, cfg.sigma);
  std::vector<double> totals;
  totals.reserve(g.rewards.size());
  for (const RewardBreakdown& r : g.rewards) totals.push_back(r.total);
  g.advantages = compute_advantages(totals, cfg.std_floor);
  g.item = std::move(item);
  g.responses = std::move(responses);
  return g;
}

void RolloutGroup::validate() const {
  if (responses.size() < 2) throw std::invalid_argument("rollout group needs at least 2 responses");
  if (rewards.size() != responses.size() || advantages.size() != responses.size()) {
    throw std::invalid_argument("rollout group: rewards/advantages do not match responses");
  }
}

double importance_ratio(const PolicyParams& p, const Response& response, const ToyItem& item,
                        const HintConfig& env) {
  const double s = std::exp(policy_logprob(p, item, env, response) - response.log_prob);
  if (!std::isfinite(s)) throw NumericError("importance ratio is not finite");
  return s;
}

double clipped_term(double ratio, double advantage, double eps) {
  const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
  return std::min(ratio * advantage, clipped * advantage);
}

namespace {

std::size_t count_responses(std::span<const RolloutGroup> groups) {
  std::size_t n = 0;
  for (const RolloutGroup& g : groups) {
    g.validate();
    n += g.responses.size();
  }
  if (n == 0) throw std::invalid_argument("grpo objective over no responses");
  return n;
}

}  // namespace

double grpo_objective(const PolicyParams& p, std::span<const RolloutGroup> groups,
                      const PolicyParams& ref, const GrpoConfig& cfg, const HintConfig& env) {
  const std::size_t n = count_responses(groups);
  double surrogate = 0.0;
  double kl = 0.0;
  for (const RolloutGroup& g : groups) {
    for (std::size_t i = 0; i < g.responses.size(); ++i) {
      const double s = importance_ratio(p, g.responses[i], g.item.item, env);
      surrogate += clipped_term(s, g.advantages[i], cfg.clip_eps);
    }
    if (cfg.kl_beta > 0.0) kl += policy_kl(p, ref, g.item.item, env);
  }
  return surrogate / n - cfg.kl_beta * kl / groups.size();
}

GrpoEval grpo_objective_grad(const PolicyParams& p, std::span<const RolloutGroup> groups,
                             const PolicyParams& ref, const GrpoConfig& cfg,
                             const HintConfig& env) {
  const std::size_t n = count_responses(groups);
  GrpoEval out;
  out.grad = Vector::Zero(static_cast<Eigen::Index>(p.param_count()));
  Vector kl_grad = Vector::Zero(out.grad.size());
  double surrogate = 0.0;
  double kl = 0.0;
  std::size_t clipped = 0;
  for (const RolloutGroup& g : groups) {
    for (std::size_t i = 0; i < g.responses.size(); ++i) {
      const Response& r = g.responses[i];
      const double a = g.advantages[i];
      const double s = importance_ratio(p, r, g.item.item, env);
      const double clipped_s = std::clamp(s, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
      surrogate += std::min(s * a, clipped_s * a);
      if (std::abs(s - 1.0) > cfg.clip_eps) ++clipped;
      // The unclipped branch is the active one (ties included); the clipped
      // branch is constant in theta.
      if (s * a <= clipped_s * a && a != 0.0) {
        out.grad += (a * s) * decisions_logprob_grad(p, g.item.item, env, extract_decisions(r));
      }
    }
    const KlGrad k = policy_kl_grad(p, ref, g.item.item, env);
    kl += k.kl;
    if (cfg.kl_beta > 0.0) kl_grad += k.grad;
  }
  const double groups_n = static_cast<double>(groups.size());
  out.grad /= static_cast<double>(n);
  out.grad -= cfg.kl_beta * kl_grad / groups_n;
  out.mean_kl = kl / groups_n;
  out.objective = surrogate / n - cfg.kl_beta * out.mean_kl;
  out.clip_fraction = static_cast<double>(clipped) / n;
  return out;
}

std::vector<std::string> metrics_columns() {
  return {"step",         "mean_reward",  "mean_r_a",     "mean_r_f", "mean_r_e",
          "aux_rate_pos", "aux_rate_neg", "aux_rate_bnd", "kl",       "clip_fraction"};
}

std::vector<double> metrics_values(const TrainMetrics& m) {
  return {static_cast<double>(m.step), m.mean_reward,  m.mean_r_a,     m.mean_r_f, m.mean_r_e,
          m.aux_rate_pos,              m.aux_rate_neg, m.aux_rate_bnd, m.kl,       m.clip_fraction};
}

TrainMetrics train_step(PolicyParams& p, OptState& opt, std::span<const LabeledItem> items,
                        const VelocityField& flow, const PolicyParams& ref,
                        const GrpoConfig& cfg, const HintConfig& env, std::uint64_t seed,
                        std::vector<RolloutGroup>* groups_out) {
  cfg.validate();
  if (items.empty()) throw std::invalid_argument("train_step: empty batch");
  SampleOptions options;
  options.solver = cfg.solver;

  std::vector<RolloutGroup> groups;
  groups.reserve(items.size());
  for (std::size_t b = 0; b < items.size(); ++b) {
    std::vector<Response> responses;
    responses.reserve(static_cast<std::size_t>(cfg.group_size));
    for (int i = 0; i < cfg.group_size; ++i) {
      Rng rng = Rng::derive(seed, {b, static_cast<std::uint64_t>(i)});
      responses.push_back(policy_sample(p, items[b].item, env, rng, &flow, options));
    }
    groups.push_back(RolloutGroup::score(items[b], std::move(responses), cfg));
  }

  TrainMetrics m;
  std::array<double, 3> aux_used{0, 0, 0};
  std::array<double, 3> aux_total{0, 0, 0};
  double count = 0.0;
  for (const RolloutGroup& g : groups) {
    const int label = static_cast<int>(g.item.label) + 1;
    for (std::size_t i = 0; i < g.responses.size(); ++i) {
      m.mean_reward += g.rewards[i].total;
      m.mean_r_a += g.rewards[i].r_a;
      m.mean_r_f += g.rewards[i].r_f;
      m.mean_r_e += g.rewards[i].r_e;
      aux_used[label] += g.responses[i].used_aux ? 1.0 : 0.0;
      aux_total[label] += 1.0;
      count += 1.0;
    }
  }
  m.mean_reward /= count;
  m.mean_r_a /= count;
  m.mean_r_f /= count;
  m.mean_r_e /= count;
  auto rate = [&](int idx) {
    return aux_total[idx] > 0 ? aux_used[idx] / aux_total[idx]
                              : std::numeric_limits<double>::quiet_NaN();
  };
  m.aux_rate_neg = rate(0);
  m.aux_rate_bnd = rate(1);
  m.aux_rate_pos = rate(2);

  const GrpoEval eval = grpo_objective_grad(p, groups, ref, cfg, env);
  if (!eval.grad.allFinite()) {
    throw NumericError("grpo gradient is not finite (objective " + std::to_string(eval.objective) +
                       ", mean reward " + std::to_string(m.mean_reward) + ")");
  }
  m.kl = eval.mean_kl;
  m.clip_fraction = eval.clip_fraction;
  if (!eval.grad.isZero(0.0)) {
    Vector flat = p.flatten();
    const Vector descent = -eval.grad;
    adam_step(flat, descent, opt, cfg.lr);
    p.assign(flat);
  }
  if (groups_out != nullptr) *groups_out = std::move(groups);
  return m;
}

TrainLoopResult train_loop(PolicyParams& p, std::span<const LabeledItem> dataset,
                           const VelocityField& flow, const GrpoConfig& cfg,
                           const HintConfig& env, std::uint64_t seed,
                           const StepCallback& on_step) {
  cfg.validate();
  TrainLoopResult result;
  if (cfg.steps == 0) return result;
  if (dataset.empty()) throw std::invalid_argument("train_loop: empty dataset");
  const PolicyParams ref = p;
  OptState opt = OptState::for_size(p.param_count());

  std::vector<std::size_t> order(dataset.size());
  std::size_t pos = order.size();
  std::uint64_t pass = 0;
  auto next_index = [&]() {
    if (pos == order.size()) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      Rng shuffle = Rng::derive(seed, {0x5348554646ULL, pass++});
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
      pos = 0;
    }
    return order[pos++];
  };

  std::vector<LabeledItem> batch;
  std::vector<RolloutGroup> groups;
  for (int step = 0; step < cfg.steps; ++step) {
    batch.clear();
    for (int b = 0; b < cfg.batch_items; ++b) batch.push_back(dataset[next_index()]);
    const std::uint64_t step_seed = Rng::derive(seed, {0x535445ULL, static_cast<std::uint64_t>(step)}).next_u64();
    TrainMetrics m = train_step(p, opt, batch, flow, ref, cfg, env, step_seed, &groups);
    m.step = step;
    spdlog::debug("grpo step {}: reward {:.4f} aux+ {:.3f} aux- {:.3f}", step, m.mean_reward,
                  m.aux_rate_pos, m.aux_rate_neg);
    result.history.push_back(m);
    if (on_step) on_step(step, groups);
  }
  return result;
}

std::vector<double> window_means(std::span<const double> values, int window) {
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  std::vector<double> means;
  const auto w = static_cast<std::size_t>(window);
  for (std::size_t start = 0; start + w <= values.size(); start += w) {
    means.push_back(std::accumulate(values.begin() + start, values.begin() + start + w, 0.0) / w);
  }
  return means;
}

bool trend_non_decreasing(std::span<const double> values, int window) {
  const std::vector<double> means = window_means(values, window);
  for (std::size_t i = 1; i < means.size(); ++i) {
    if (means[i] < means[i - 1]) return false;
  }
  return true;
}

}  // namespace cooper
