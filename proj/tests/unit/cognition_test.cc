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

#include "cooper/cognition.h"

#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "cooper/cpr_reward.h"

namespace cooper {
namespace {

ToyItem sample_item(Gain gain, int correct = 2, int misleading = 0) {
  ToyItem item;
  item.id = 5;
  item.features = Vector::LinSpaced(kFeatureDim, -0.5, 0.9);
  item.correct = correct;
  item.misleading = misleading;
  item.gain = gain;
  return item;
}

// Policy whose heads ignore their inputs: zero weights, chosen output biases.
PolicyParams bias_only_policy(double gate_bias, const Vector& modality_bias,
                              const Vector& answer_bias) {
  PolicyParams p;
  p.gate = Mlp::zeros({kFeatureDim, 3, 1});
  p.modality = Mlp::zeros({kFeatureDim, 3, kNumTasks});
  p.answer = Mlp::zeros({kFeatureDim + kNumChoices, 3, kNumChoices});
  p.gate.biases[1][0] = gate_bias;
  p.modality.biases[1] = modality_bias;
  p.answer.biases[1] = answer_bias;
  return p;
}

PolicyParams random_policy(std::uint64_t seed) {
  Rng rng(seed);
  PolicyParams p = PolicyParams::create(5, 4, 6, rng);
  Vector flat = p.flatten();
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat[i] += 0.3 * rng.normal();
  p.assign(flat);
  return p;
}

VelocityField tiny_flow() {
  Rng rng(1);
  return VelocityField::create(8, kFeatureDim, {4}, rng);
}

TEST(Observe, HintsFollowGain) {
  const HintConfig env;
  const Vector pos = observe(sample_item(Gain::kPositive), true, env);
  EXPECT_EQ(pos[2], 4.0);
  EXPECT_EQ(pos.sum(), 4.0);
  const Vector neg = observe(sample_item(Gain::kNegative), true, env);
  Eigen::Index argmax = 0;
  neg.maxCoeff(&argmax);
  EXPECT_EQ(argmax, 0);
  const ToyItem bnd = sample_item(Gain::kBoundary);
  EXPECT_EQ(observe(bnd, true, env), observe(bnd, false, env));
  EXPECT_EQ(observe(sample_item(Gain::kPositive), false, env)[2], 0.5);
}

TEST(Observe, BayesOptimalAnswerAccuracies) {
  const HintConfig env;
  const auto items = make_toy_items(300, 3, ToyWorldConfig{});
  int pos_total = 0;
  int pos_right = 0;
  int neg_total = 0;
  int neg_right = 0;
  for (const ToyItem& item : items) {
    Eigen::Index pick = 0;
    observe(item, true, env).maxCoeff(&pick);
    if (item.gain == Gain::kPositive) {
      ++pos_total;
      pos_right += pick == item.correct ? 1 : 0;
    } else if (item.gain == Gain::kNegative) {
      ++neg_total;
      neg_right += pick == item.correct ? 1 : 0;
    }
  }
  EXPECT_GT(pos_right / static_cast<double>(pos_total), 0.9);
  EXPECT_LT(neg_right / static_cast<double>(neg_total), 0.3);
}

TEST(ToyItems, DeterministicAndValid) {
  const auto a = make_toy_items(50, 7, ToyWorldConfig{}, 100);
  const auto b = make_toy_items(50, 7, ToyWorldConfig{}, 100);
  ASSERT_EQ(a.size(), 50u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i].validate();
    EXPECT_EQ(a[i].id, 100 + i);
    EXPECT_EQ(a[i].features, b[i].features);
    EXPECT_EQ(a[i].correct, b[i].correct);
    EXPECT_NE(a[i].misleading, a[i].correct);
  }
  // An item depends only on (seed, id), not on how many items precede it.
  const auto tail = make_toy_items(10, 7, ToyWorldConfig{}, 140);
  EXPECT_EQ(tail[0].features, a[40].features);
}

TEST(ToyItems, MixCoversAllGains) {
  std::map<Gain, int> counts;
  for (const ToyItem& item : make_toy_items(600, 42, ToyWorldConfig{})) ++counts[item.gain];
  for (Gain g : {Gain::kPositive, Gain::kNegative, Gain::kBoundary}) {
    EXPECT_NEAR(counts[g] / 600.0, 1.0 / 3.0, 0.06);
  }
}

TEST(Segments, RenderAndExtractRoundTrip) {
  for (bool aux : {false, true}) {
    for (AuxTask m : {AuxTask::kDepth, AuxTask::kSegmentation}) {
      for (int a = 0; a < kNumChoices; ++a) {
        const Decisions d{aux, m, a};
        Response r;
        r.segments = render_segments(d, aux ? std::optional<Vector>(Vector::Zero(8)) : std::nullopt);
        r.used_aux = aux;
        EXPECT_TRUE(extract_decisions(r) == d);
        EXPECT_EQ(r.has_visual(), aux);
        EXPECT_EQ(r.segments.back().kind, SegmentKind::kText);
      }
    }
  }
}

TEST(Segments, MalformedResponsesRejected) {
  Response empty;
  EXPECT_THROW(extract_decisions(empty), std::invalid_argument);
  Response lying;
  lying.segments = render_segments(Decisions{false, AuxTask::kDepth, 1});
  lying.used_aux = true;
  EXPECT_THROW(extract_decisions(lying), std::invalid_argument);
  Response no_answer;
  no_answer.segments = {Segment::make_text("<think>hm</think>")};
  EXPECT_THROW(extract_decisions(no_answer), std::invalid_argument);
  Response two_visuals;
  two_visuals.segments = render_segments(Decisions{true, AuxTask::kDepth, 1}, Vector::Zero(2));
  two_visuals.segments.insert(two_visuals.segments.begin() + 1,
                              Segment::make_visual(AuxTask::kDepth, Vector::Zero(2)));
  two_visuals.used_aux = true;
  EXPECT_THROW(extract_decisions(two_visuals), std::invalid_argument);
}

TEST(Segments, AnswerTextExtraction) {
  EXPECT_EQ(extract_answer_text("<answer> b </answer>"), std::optional<std::string>("B"));
  EXPECT_EQ(extract_answer_text("<answer>C"), std::nullopt);
  EXPECT_EQ(parse_choice("E"), std::nullopt);
  EXPECT_EQ(parse_choice("d"), std::optional<int>(3));
}

TEST(PolicySample, ZeroGateIsFairCoin) {
  const PolicyParams p = bias_only_policy(0.0, Vector::Zero(2), Vector::Zero(4));
  EXPECT_EQ(sigmoid(gate_logit(p, sample_item(Gain::kBoundary))), 0.5);
  const VelocityField flow = tiny_flow();
  int aux = 0;
  for (std::uint64_t s = 0; s < 4000; ++s) {
    Rng rng(s);
    aux += policy_sample(p, sample_item(Gain::kBoundary), HintConfig{}, rng, &flow).used_aux ? 1 : 0;
  }
  EXPECT_NEAR(aux / 4000.0, 0.5, 0.03);
}

TEST(PolicySample, LogProbMatchesHandComputation) {
  Vector mb(2);
  mb << 0.4, -0.3;
  Vector ab(4);
  ab << 0.0, 1.0, -2.0, -2.0;
  const double gate_bias = 0.7;
  const PolicyParams p = bias_only_policy(gate_bias, mb, ab);
  const ToyItem item = sample_item(Gain::kBoundary);
  const VelocityField flow = tiny_flow();
  const double za = 1.0 + std::exp(1.0) + 2.0 * std::exp(-2.0);
  for (std::uint64_t s = 0; s < 64; ++s) {
    Rng rng(s);
    const Response r = policy_sample(p, item, HintConfig{}, rng, &flow);
    const Decisions d = extract_decisions(r);
    double expect = std::log(d.use_aux ? 1.0 / (1.0 + std::exp(-gate_bias))
                                       : 1.0 / (1.0 + std::exp(gate_bias)));
    if (d.use_aux) {
      const double zm = std::exp(0.4) + std::exp(-0.3);
      expect += std::log(std::exp(mb[static_cast<int>(d.modality)]) / zm);
    }
    expect += std::log(std::exp(ab[d.answer]) / za);
    EXPECT_NEAR(r.log_prob, expect, 1e-12);
    EXPECT_NEAR(policy_logprob(p, item, HintConfig{}, r), r.log_prob, 1e-12);
  }
}

TEST(PolicySample, DeterministicForSeed) {
  const PolicyParams p = random_policy(3);
  const VelocityField flow = tiny_flow();
  const ToyItem item = sample_item(Gain::kPositive);
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng a(s);
    Rng b(s);
    const Response ra = policy_sample(p, item, HintConfig{}, a, &flow);
    const Response rb = policy_sample(p, item, HintConfig{}, b, &flow);
    EXPECT_EQ(ra.log_prob, rb.log_prob);
    ASSERT_EQ(ra.segments.size(), rb.segments.size());
    for (std::size_t k = 0; k < ra.segments.size(); ++k) {
      EXPECT_EQ(ra.segments[k].text, rb.segments[k].text);
      EXPECT_EQ(ra.segments[k].latent, rb.segments[k].latent);
    }
  }
}

TEST(PolicySample, AuxWithoutFlowRejected) {
  const PolicyParams p = bias_only_policy(50.0, Vector::Zero(2), Vector::Zero(4));
  Rng rng(1);
  EXPECT_THROW(policy_sample(p, sample_item(Gain::kPositive), HintConfig{}, rng, nullptr),
               std::invalid_argument);
  SampleOptions off;
  off.gate = GateMode::kForceOff;
  EXPECT_FALSE(policy_sample(p, sample_item(Gain::kPositive), HintConfig{}, rng, nullptr, off).used_aux);
}

TEST(PolicySample, ForcedGateAddsNoLogProb) {
  Vector ab(4);
  ab << 0.5, 0.0, 0.0, 0.0;
  const PolicyParams p = bias_only_policy(3.0, Vector::Zero(2), ab);
  const VelocityField flow = tiny_flow();
  SampleOptions on;
  on.gate = GateMode::kForceOn;
  Rng rng(9);
  const Response r = policy_sample(p, sample_item(Gain::kBoundary), HintConfig{}, rng, &flow, on);
  EXPECT_TRUE(r.used_aux);
  const Decisions d = extract_decisions(r);
  const double expect = std::log(0.5) + log_softmax(ab)[d.answer];
  EXPECT_NEAR(r.log_prob, expect, 1e-12);
}

TEST(PolicySample, VisualSegmentCarriesGeneratedLatent) {
  const PolicyParams p = bias_only_policy(50.0, Vector::Zero(2), Vector::Zero(4));
  const VelocityField flow = tiny_flow();
  Rng rng(4);
  const Response r = policy_sample(p, sample_item(Gain::kPositive), HintConfig{}, rng, &flow);
  ASSERT_TRUE(r.used_aux);
  EXPECT_EQ(r.segments[1].kind, SegmentKind::kVisualAux);
  EXPECT_EQ(r.segments[1].latent.size(), 8);
  EXPECT_TRUE(match_thinking_generation(r.segments[0].text).has_value());
  EXPECT_TRUE(match_thinking_answer(r.segments[2].text));
}

TEST(PolicyLogprob, DeterministicLimitNearZero) {
  Vector ab = Vector::Constant(4, -60.0);
  ab[2] = 60.0;
  Vector mb(2);
  mb << 60.0, -60.0;
  const PolicyParams p = bias_only_policy(60.0, mb, ab);
  EXPECT_NEAR(decisions_logprob(p, sample_item(Gain::kBoundary), HintConfig{},
                                Decisions{true, AuxTask::kDepth, 2}),
              0.0, 1e-20);
}

TEST(Enumeration, SumsToOneAndMatchesLogprob) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const PolicyParams p = random_policy(s);
    const ToyItem item = sample_item(s % 2 == 0 ? Gain::kPositive : Gain::kNegative);
    const auto outcomes = enumerate_outcomes(p, item, HintConfig{});
    EXPECT_EQ(outcomes.size(), static_cast<std::size_t>(kNumChoices * (1 + kNumTasks)));
    double total = 0.0;
    for (const OutcomeProb& o : outcomes) {
      total += o.prob;
      EXPECT_NEAR(o.log_prob, decisions_logprob(p, item, HintConfig{}, o.decisions), 1e-12);
    }
    EXPECT_NEAR(total, 1.0, 1e-10);
  }
}

TEST(Enumeration, SamplingFrequenciesMatch) {
  const PolicyParams p = random_policy(12);
  const ToyItem item = sample_item(Gain::kPositive);
  const VelocityField flow = tiny_flow();
  const auto outcomes = enumerate_outcomes(p, item, HintConfig{});
  std::vector<int> counts(outcomes.size(), 0);
  const int n = 20000;
  for (int s = 0; s < n; ++s) {
    Rng rng = Rng::derive(8, {static_cast<std::uint64_t>(s)});
    const Decisions d =
        extract_decisions(policy_sample(p, item, HintConfig{}, rng, &flow, SampleOptions{1.0, GateMode::kSample, {2, SolverMethod::kEuler}}));
    for (std::size_t k = 0; k < outcomes.size(); ++k) {
      if (outcomes[k].decisions == d) ++counts[k];
    }
  }
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    const double sd = std::sqrt(outcomes[k].prob * (1.0 - outcomes[k].prob) / n);
    EXPECT_NEAR(counts[k] / static_cast<double>(n), outcomes[k].prob, 5.0 * sd + 1e-4) << k;
  }
}

TEST(LogprobGrad, MatchesFiniteDifferences) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const PolicyParams p = random_policy(100 + s);
    const ToyItem item = sample_item(s % 3 == 0 ? Gain::kNegative : Gain::kPositive);
    const Decisions d{s % 2 == 0, s % 4 < 2 ? AuxTask::kDepth : AuxTask::kSegmentation,
                      static_cast<int>(s % 4)};
    const Vector analytic = decisions_logprob_grad(p, item, HintConfig{}, d);
    const Vector fd = finite_diff_gradient(
        [&](const Vector& flat) {
          PolicyParams q = p;
          q.assign(flat);
          return decisions_logprob(q, item, HintConfig{}, d);
        },
        p.flatten(), 1e-5);
    EXPECT_LT(max_relative_error(analytic, fd), 1e-4) << s;
  }
}

TEST(Kl, IdentityNonNegativityAndBernoulliCase) {
  const ToyItem item = sample_item(Gain::kPositive);
  const PolicyParams p = random_policy(1);
  EXPECT_EQ(policy_kl(p, p, item, HintConfig{}), 0.0);
  for (std::uint64_t s = 0; s < 50; ++s) {
    EXPECT_GE(policy_kl(random_policy(s), random_policy(s + 1000), item, HintConfig{}), 0.0);
  }
  const PolicyParams half = bias_only_policy(0.0, Vector::Zero(2), Vector::Zero(4));
  const PolicyParams ninety = bias_only_policy(std::log(9.0), Vector::Zero(2), Vector::Zero(4));
  const double expect = 0.5 * std::log(0.5 / 0.9) + 0.5 * std::log(0.5 / 0.1);
  EXPECT_NEAR(policy_kl(half, ninety, item, HintConfig{}), expect, 1e-12);
  EXPECT_NEAR(expect, 0.5108, 1e-4);
}

// The factorised closed form behind the gradient must agree with the
// outcome enumeration, and its gradient with finite differences.
TEST(Kl, FactorisedFormAndGradient) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const PolicyParams p = random_policy(200 + s);
    const PolicyParams ref = random_policy(300 + s);
    const ToyItem item = sample_item(s % 2 == 0 ? Gain::kPositive : Gain::kNegative);
    const KlGrad kg = policy_kl_grad(p, ref, item, HintConfig{});
    EXPECT_NEAR(kg.kl, policy_kl(p, ref, item, HintConfig{}), 1e-12);
    const Vector fd = finite_diff_gradient(
        [&](const Vector& flat) {
          PolicyParams q = p;
          q.assign(flat);
          return policy_kl_grad(q, ref, item, HintConfig{}).kl;
        },
        p.flatten(), 1e-5);
    EXPECT_LT(max_relative_error(kg.grad, fd), 1e-4) << s;
  }
}

TEST(Demos, FollowLabelsAndScoreCorrect) {
  const auto items = make_toy_items(60, 2, ToyWorldConfig{});
  std::vector<LabeledItem> labeled;
  for (const ToyItem& item : items) labeled.push_back(LabeledItem{item, item.gain});
  const auto demos = build_demos(labeled, 2);
  ASSERT_EQ(demos.size(), 120u);
  for (const Demo& d : demos) {
    EXPECT_EQ(d.decisions.use_aux, d.item.gain == Gain::kPositive);
    EXPECT_EQ(d.response.used_aux, d.decisions.use_aux);
    EXPECT_EQ(answer_reward(d.response, d.item), 1.0);
    EXPECT_EQ(format_reward(d.response), 1.0);
  }
}

TEST(Sft, GradientMatchesFiniteDifferences) {
  const auto items = make_toy_items(12, 5, ToyWorldConfig{});
  std::vector<LabeledItem> labeled;
  for (const ToyItem& item : items) labeled.push_back(LabeledItem{item, item.gain});
  const auto demos = build_demos(labeled, 1);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const PolicyParams p = random_policy(400 + s);
    const SftLossGrad lg = sft_loss_grad(p, demos, HintConfig{});
    const Vector fd = finite_diff_gradient(
        [&](const Vector& flat) {
          PolicyParams q = p;
          q.assign(flat);
          return sft_loss_grad(q, demos, HintConfig{}).loss;
        },
        p.flatten(), 1e-5);
    EXPECT_LT(max_relative_error(lg.grad, fd), 1e-4) << s;
  }
}

TEST(Sft, NoAuxDemosLeaveModalityHeadUntouched) {
  ToyItem item = sample_item(Gain::kNegative);
  const auto demos = build_demos(std::vector<LabeledItem>{{item, Gain::kNegative}}, 1);
  const PolicyParams p = random_policy(7);
  const Vector g = sft_loss_grad(p, demos, HintConfig{}).grad;
  const auto off = static_cast<Eigen::Index>(p.gate.param_count());
  const auto len = static_cast<Eigen::Index>(p.modality.param_count());
  EXPECT_EQ(g.segment(off, len).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Sft, LossDecreasesToBelowPointOne) {
  const auto items = make_toy_items(40, 6, ToyWorldConfig{});
  std::vector<LabeledItem> labeled;
  for (const ToyItem& item : items) labeled.push_back(LabeledItem{item, item.gain});
  const auto demos = build_demos(labeled, 1);
  PolicyParams p = init_base_policy(BasePolicyConfig{}, 42);
  OptState opt = OptState::for_size(p.param_count());
  double prev = sft_loss_grad(p, demos, HintConfig{}).loss;
  int steps = 0;
  int increases = 0;
  while (prev >= 0.1 && steps < 500) {
    sft_step(p, opt, demos, HintConfig{}, 1e-2);
    const double now = sft_loss_grad(p, demos, HintConfig{}).loss;
    increases += now >= prev ? 1 : 0;
    prev = now;
    ++steps;
  }
  EXPECT_LT(prev, 0.1);
  EXPECT_EQ(increases, 0);
}

TEST(BasePolicy, DeterministicWithGateNearHalf) {
  const PolicyParams a = init_base_policy(BasePolicyConfig{}, 42);
  const PolicyParams b = init_base_policy(BasePolicyConfig{}, 42);
  EXPECT_EQ(a.flatten(), b.flatten());
  a.validate();
  for (const ToyItem& item : make_toy_items(50, 1, ToyWorldConfig{})) {
    EXPECT_NEAR(sigmoid(gate_logit(a, item)), 0.5, 0.1);
  }
}

}  // namespace
}  // namespace cooper
