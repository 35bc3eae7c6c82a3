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

#ifndef COOPER_COGNITION_H_
#define COOPER_COGNITION_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cooper/modality_codec.h"
#include "cooper/numerics.h"
#include "cooper/rectified_flow.h"

namespace cooper {

inline constexpr int kNumChoices = 4;
inline constexpr int kFeatureDim = 8;

// Offline visual-gain label.
enum class Gain : int { kNegative = -1, kBoundary = 0, kPositive = 1 };

std::string gain_name(Gain g);  // "negative" / "boundary" / "positive"
Gain parse_gain_name(const std::string& name);
Gain gain_from_int(int g);

char choice_letter(int choice);                          // 0 -> 'A'
std::optional<int> parse_choice(const std::string& text);  // "A".."D" -> 0..3

// One multiple-choice spatial question. `gain` is the environment's ground
// truth: it decides which hint the auxiliary modality reveals.
struct ToyItem {
  std::uint64_t id = 0;
  Vector features = Vector::Zero(kFeatureDim);
  int correct = 0;
  Gain gain = Gain::kBoundary;
  int misleading = 1;

  void validate() const;
};

// An item together with the gain label assigned by curation. Rewards and
// metrics read `label`; the environment keeps reading `item.gain`.
struct LabeledItem {
  ToyItem item;
  Gain label = Gain::kBoundary;
};

// Strengths of the evidence revealed with and without auxiliary modalities.
struct HintConfig {
  double h_plus = 4.0;
  double h_zero = 0.5;
  double h_minus = 4.0;

  void validate() const;
};

// Deterministic hint vector (length 4) seen by the answer head.
Vector observe(const ToyItem& item, bool used_aux, const HintConfig& env);

enum class SegmentKind { kText, kVisualAux };

struct Segment {
  SegmentKind kind = SegmentKind::kText;
  std::string text;                       // text segments
  AuxTask modality = AuxTask::kDepth;     // visual segments
  Vector latent;                          // visual segments: generated latent

  static Segment make_text(std::string text);
  static Segment make_visual(AuxTask modality, Vector latent);
};

// The discrete choices behind a response.
struct Decisions {
  bool use_aux = false;
  AuxTask modality = AuxTask::kDepth;  // meaningful only when use_aux
  int answer = 0;

  bool operator==(const Decisions& other) const;
};

struct Response {
  std::vector<Segment> segments;
  bool used_aux = false;            // o_i
  std::optional<int> answer;
  double log_prob = 0.0;            // behaviour log-probability at sampling time

  bool has_visual() const;
};

// Reads the choices back out of the segments. Throws std::invalid_argument if
// the response is malformed (no final answer, o disagreeing with segments,
// more than one visual segment, gate segment missing).
Decisions extract_decisions(const Response& response);

// Contents of the first <answer>...</answer> span, trimmed and upper-cased.
std::optional<std::string> extract_answer_text(const std::string& segment);

// Canonical interleaved segments for a set of choices.
std::vector<Segment> render_segments(const Decisions& decisions,
                                     const std::optional<Vector>& latent = std::nullopt);

// Three factored heads: gate (features -> 1 logit for "use aux"), modality
// (features -> 2 logits) and answer (features ++ hint -> 4 logits).
struct PolicyParams {
  Mlp gate;
  Mlp modality;
  Mlp answer;

  static PolicyParams create(int gate_hidden, int modality_hidden, int answer_hidden, Rng& rng);
  void validate() const;
  std::size_t param_count() const;
  Vector flatten() const;  // gate | modality | answer
  void assign(const Vector& flat);
  bool same_shape(const PolicyParams& other) const;
};

// Constants of the pre-trained base model that curation evaluates.
struct BasePolicyConfig {
  double weak_hint_weight = 0.2;
  double clue_weight = 3.0;
  double strong_hint_scale = 4.0;
  double init_noise = 0.01;
  int head_hidden = 64;
};

PolicyParams init_base_policy(const BasePolicyConfig& config, std::uint64_t seed);

// Generator for the synthetic spatial-VQA item pool.
struct ToyWorldConfig {
  double type_signal = 1.0;
  double type_noise = 0.3;
  double clue_positive = 0.0;
  double clue_boundary = 0.5;
  double clue_negative = 1.0;
  double clue_noise = 0.1;
  // Fractions of positive / negative / boundary items.
  std::array<double, 3> mix{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
};

std::vector<ToyItem> make_toy_items(int n, std::uint64_t seed, const ToyWorldConfig& config,
                                    std::uint64_t first_id = 0);

// Modality a demonstration uses for an item (scene cue in feature 3).
AuxTask preferred_modality(const ToyItem& item);

double gate_logit(const PolicyParams& p, const ToyItem& item);
Vector modality_logits(const PolicyParams& p, const ToyItem& item);
Vector answer_logits(const PolicyParams& p, const ToyItem& item, const Vector& hint);

// How the gate is decided while sampling.
enum class GateMode { kSample, kForceOff, kForceOn };

struct SampleOptions {
  double temperature = 1.0;
  GateMode gate = GateMode::kSample;
  SolverConfig solver{};
};

// Samples gate, modality (materialised through `flow`) and answer. A forced
// gate contributes nothing to log_prob. Throws std::invalid_argument when the
// gate opens and no flow is available.
Response policy_sample(const PolicyParams& p, const ToyItem& item, const HintConfig& env,
                       Rng& rng, const VelocityField* flow, const SampleOptions& options = {});

// Log-probability of the response's discrete choices at temperature 1.
// Visual content contributes nothing.
double policy_logprob(const PolicyParams& p, const ToyItem& item, const HintConfig& env,
                      const Response& response);
double decisions_logprob(const PolicyParams& p, const ToyItem& item, const HintConfig& env,
                         const Decisions& decisions);

// Gradient of decisions_logprob in the flat gate|modality|answer layout.
Vector decisions_logprob_grad(const PolicyParams& p, const ToyItem& item, const HintConfig& env,
                              const Decisions& decisions);

struct OutcomeProb {
  Decisions decisions;
  double log_prob = 0.0;
  double prob = 0.0;
};

// Every response outcome with its probability at temperature 1.
std::vector<OutcomeProb> enumerate_outcomes(const PolicyParams& p, const ToyItem& item,
                                            const HintConfig& env);

// Exact KL(p || ref) of the factored response distribution.
double policy_kl(const PolicyParams& p, const PolicyParams& ref, const ToyItem& item,
                 const HintConfig& env);

struct KlGrad {
  double kl = 0.0;
  Vector grad;
};

KlGrad policy_kl_grad(const PolicyParams& p, const PolicyParams& ref, const ToyItem& item,
                      const HintConfig& env);

struct Demo {
  ToyItem item;
  Decisions decisions;
  Response response;
};

// Positive items: aux + correct answer. Negative and boundary items: no aux +
// correct answer.
std::vector<Demo> build_demos(std::span<const LabeledItem> items, int n_per_item);

struct SftLossGrad {
  double loss = 0.0;
  Vector grad;
};

// Mean cross-entropy of the demonstrated decisions. The visual segment
// carries no loss, and the modality head is untouched by no-aux demos.
SftLossGrad sft_loss_grad(const PolicyParams& p, std::span<const Demo> demos,
                          const HintConfig& env);

// One Adam step on the SFT loss; returns the loss before the update.
double sft_step(PolicyParams& p, OptState& opt, std::span<const Demo> demos,
                const HintConfig& env, double lr);

}  // namespace cooper

#endif  // COOPER_COGNITION_H_
