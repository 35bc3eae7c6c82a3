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

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace cooper {

std::string gain_name(Gain g) {
  switch (g) {
    case Gain::kNegative: return "negative";
    case Gain::kPositive: return "positive";
    default: return "boundary";
  }
}

Gain parse_gain_name(const std::string& name) {
  if (name == "positive") return Gain::kPositive;
  if (name == "negative") return Gain::kNegative;
  if (name == "boundary") return Gain::kBoundary;
  throw std::invalid_argument("unknown gain label '" + name + "'");
}

Gain gain_from_int(int g) {
  if (g < -1 || g > 1) throw std::invalid_argument("gain must be -1, 0 or +1");
  return static_cast<Gain>(g);
}

char choice_letter(int choice) {
  if (choice < 0 || choice >= kNumChoices) throw std::invalid_argument("choice out of range");
  return static_cast<char>('A' + choice);
}

std::optional<int> parse_choice(const std::string& text) {
  if (text.size() != 1) return std::nullopt;
  const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
  if (c < 'A' || c >= 'A' + kNumChoices) return std::nullopt;
  return c - 'A';
}

void ToyItem::validate() const {
  if (features.size() != kFeatureDim) throw std::invalid_argument("item features must have 8 entries");
  if (!features.allFinite()) throw std::invalid_argument("item features must be finite");
  if (correct < 0 || correct >= kNumChoices || misleading < 0 || misleading >= kNumChoices) {
    throw std::invalid_argument("item answers must be in A..D");
  }
  if (gain == Gain::kNegative && misleading == correct) {
    throw std::invalid_argument("negative-gain item needs a misleading answer distinct from the correct one");
  }
}

void HintConfig::validate() const {
  if (!(h_plus > 0.0) || !(h_zero >= 0.0) || !(h_minus > 0.0) || !(h_plus > h_zero)) {
    throw std::invalid_argument("hint strengths need h_plus > h_zero >= 0 and h_minus > 0");
  }
}

Vector observe(const ToyItem& item, bool used_aux, const HintConfig& env) {
  Vector hint = Vector::Zero(kNumChoices);
  if (!used_aux) {
    hint[item.correct] = env.h_zero;
    return hint;
  }
  switch (item.gain) {
    case Gain::kPositive: hint[item.correct] = env.h_plus; break;
    case Gain::kNegative: hint[item.misleading] = env.h_minus; break;
    case Gain::kBoundary: hint[item.correct] = env.h_zero; break;
  }
  return hint;
}

Segment Segment::make_text(std::string text) {
  Segment s;
  s.kind = SegmentKind::kText;
  s.text = std::move(text);
  return s;
}

Segment Segment::make_visual(AuxTask modality, Vector latent) {
  Segment s;
  s.kind = SegmentKind::kVisualAux;
  s.modality = modality;
  s.latent = std::move(latent);
  return s;
}

bool Decisions::operator==(const Decisions& other) const {
  return use_aux == other.use_aux && answer == other.answer &&
         (!use_aux || modality == other.modality);
}

bool Response::has_visual() const {
  return std::any_of(segments.begin(), segments.end(),
                     [](const Segment& s) { return s.kind == SegmentKind::kVisualAux; });
}

std::optional<std::string> extract_answer_text(const std::string& segment) {
  static const std::string kOpen = "<answer>";
  static const std::string kClose = "</answer>";
  const auto open = segment.find(kOpen);
  if (open == std::string::npos) return std::nullopt;
  const auto start = open + kOpen.size();
  const auto close = segment.find(kClose, start);
  if (close == std::string::npos) return std::nullopt;
  std::string body = segment.substr(start, close - start);
  const auto first = body.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return std::string();
  const auto last = body.find_last_not_of(" \t\r\n");
  body = body.substr(first, last - first + 1);
  for (char& c : body) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return body;
}

Decisions extract_decisions(const Response& response) {
  if (response.segments.empty() || response.segments.back().kind != SegmentKind::kText) {
    throw std::invalid_argument("malformed response: final segment must be text");
  }
  Decisions d;
  int visuals = 0;
  for (const Segment& s : response.segments) {
    if (s.kind == SegmentKind::kVisualAux) {
      ++visuals;
      d.modality = s.modality;
    }
  }
  if (visuals > 1) throw std::invalid_argument("malformed response: more than one visual segment");
  d.use_aux = visuals == 1;
  if (d.use_aux != response.used_aux) {
    throw std::invalid_argument("malformed response: aux indicator disagrees with segments");
  }
  const auto text = extract_answer_text(response.segments.back().text);
  const auto choice = text ? parse_choice(*text) : std::nullopt;
  if (!choice) throw std::invalid_argument("malformed response: no valid final answer");
  d.answer = *choice;
  return d;
}

std::vector<Segment> render_segments(const Decisions& decisions,
                                     const std::optional<Vector>& latent) {
  std::vector<Segment> segments;
  const std::string letter(1, choice_letter(decisions.answer));
  if (decisions.use_aux) {
    const bool depth = decisions.modality == AuxTask::kDepth;
    segments.push_back(Segment::make_text(
        std::string("<think>The spatial layout is ambiguous; ") +
        (depth ? "a depth map will resolve the distances." : "segmenting the objects will help.") +
        "</think><gen>" + task_name(decisions.modality) + "</gen>"));
    segments.push_back(Segment::make_visual(decisions.modality, latent.value_or(Vector())));
    segments.push_back(Segment::make_text("<think>Combining the image with the generated map, option " +
                                          letter + " is best supported.</think><answer>" + letter +
                                          "</answer>"));
  } else {
    segments.push_back(Segment::make_text("<think>The image alone is enough; option " + letter +
                                          " is best supported.</think><answer>" + letter +
                                          "</answer>"));
  }
  return segments;
}

// ----------------------------------------------------------------------------
// Policy parameters

PolicyParams PolicyParams::create(int gate_hidden, int modality_hidden, int answer_hidden,
                                  Rng& rng) {
  PolicyParams p;
  p.gate = Mlp::random({kFeatureDim, gate_hidden, 1}, rng);
  p.modality = Mlp::random({kFeatureDim, modality_hidden, kNumTasks}, rng);
  p.answer = Mlp::random({kFeatureDim + kNumChoices, answer_hidden, kNumChoices}, rng);
  return p;
}

void PolicyParams::validate() const {
  gate.validate();
  modality.validate();
  answer.validate();
  if (gate.input_size() != kFeatureDim || gate.output_size() != 1 ||
      modality.input_size() != kFeatureDim || modality.output_size() != kNumTasks ||
      answer.input_size() != kFeatureDim + kNumChoices || answer.output_size() != kNumChoices) {
    throw ShapeError("policy heads have the wrong input/output sizes");
  }
}

std::size_t PolicyParams::param_count() const {
  return gate.param_count() + modality.param_count() + answer.param_count();
}

Vector PolicyParams::flatten() const {
  Vector flat(static_cast<Eigen::Index>(param_count()));
  flat << gate.flatten(), modality.flatten(), answer.flatten();
  return flat;
}

void PolicyParams::assign(const Vector& flat) {
  if (static_cast<std::size_t>(flat.size()) != param_count()) {
    throw ShapeError("flat policy vector has the wrong length");
  }
  const auto g = static_cast<Eigen::Index>(gate.param_count());
  const auto m = static_cast<Eigen::Index>(modality.param_count());
  const auto a = static_cast<Eigen::Index>(answer.param_count());
  gate.assign(flat.segment(0, g));
  modality.assign(flat.segment(g, m));
  answer.assign(flat.segment(g + m, a));
}

bool PolicyParams::same_shape(const PolicyParams& other) const {
  return gate.same_shape(other.gate) && modality.same_shape(other.modality) &&
         answer.same_shape(other.answer);
}

PolicyParams init_base_policy(const BasePolicyConfig& config, std::uint64_t seed) {
  Rng rng = Rng::derive(seed, {0xBA5EULL});
  PolicyParams p;
  auto small_head = [&](int outputs) {
    Mlp head = Mlp::random({kFeatureDim, config.head_hidden, outputs}, rng);
    for (Eigen::Index i = 0; i < head.weights[1].size(); ++i) {
      head.weights[1].data()[i] = config.init_noise * rng.normal();
    }
    return head;
  };
  p.gate = small_head(1);
  p.modality = small_head(kNumTasks);

  // Hidden units: 0-3 detect strong hints, 4-7 read weak hints, 8-11 read the
  // answer clue carried by features 4-7.
  constexpr int kHidden = 3 * kNumChoices;
  p.answer = Mlp::zeros({kFeatureDim + kNumChoices, kHidden, kNumChoices});
  Matrix& w0 = p.answer.weights[0];
  Vector& b0 = p.answer.biases[0];
  Matrix& w1 = p.answer.weights[1];
  Vector& b1 = p.answer.biases[1];
  for (int j = 0; j < kNumChoices; ++j) {
    const int hint = kFeatureDim + j;
    w0(j, hint) = 2.0;
    b0[j] = -4.0;
    w0(kNumChoices + j, hint) = 1.0;
    w0(2 * kNumChoices + j, 4 + j) = 1.0;
    w1(j, j) = config.strong_hint_scale;
    w1(j, kNumChoices + j) = config.weak_hint_weight;
    w1(j, 2 * kNumChoices + j) = config.clue_weight;
    b1[j] = config.strong_hint_scale;
  }
  for (Matrix* w : {&w0, &w1}) {
    for (Eigen::Index i = 0; i < w->size(); ++i) w->data()[i] += config.init_noise * rng.normal();
  }
  return p;
}

std::vector<ToyItem> make_toy_items(int n, std::uint64_t seed, const ToyWorldConfig& config,
                                    std::uint64_t first_id) {
  const double total = config.mix[0] + config.mix[1] + config.mix[2];
  if (n < 0 || !(total > 0.0)) throw std::invalid_argument("make_toy_items: bad size or mix");
  std::vector<ToyItem> items;
  items.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    ToyItem item;
    item.id = first_id + static_cast<std::uint64_t>(i);
    Rng rng = Rng::derive(seed, {item.id});
    const double u = rng.uniform() * total;
    int type = 2;
    if (u < config.mix[0]) {
      type = 0;
    } else if (u < config.mix[0] + config.mix[1]) {
      type = 1;
    }
    item.gain = type == 0 ? Gain::kPositive : (type == 1 ? Gain::kNegative : Gain::kBoundary);
    item.correct = static_cast<int>(rng.below(kNumChoices));
    item.misleading = (item.correct + 1 + static_cast<int>(rng.below(kNumChoices - 1))) % kNumChoices;
    const double clarity = type == 0 ? config.clue_positive
                                     : (type == 1 ? config.clue_negative : config.clue_boundary);
    item.features = Vector::Zero(kFeatureDim);
    for (int d = 0; d < 3; ++d) {
      item.features[d] = (d == type ? config.type_signal : 0.0) + config.type_noise * rng.normal();
    }
    item.features[3] = rng.normal();
    for (int j = 0; j < kNumChoices; ++j) {
      item.features[4 + j] = (j == item.correct ? clarity : 0.0) + config.clue_noise * rng.normal();
    }
    items.push_back(std::move(item));
  }
  return items;
}

AuxTask preferred_modality(const ToyItem& item) {
  return item.features[3] >= 0.0 ? AuxTask::kDepth : AuxTask::kSegmentation;
}

// ----------------------------------------------------------------------------
// Heads

namespace {

Vector answer_input(const ToyItem& item, const Vector& hint) {
  Vector x(kFeatureDim + kNumChoices);
  x << item.features, hint;
  return x;
}

Vector onehot(int index, int size) {
  Vector v = Vector::Zero(size);
  v[index] = 1.0;
  return v;
}

}  // namespace

double gate_logit(const PolicyParams& p, const ToyItem& item) {
  return mlp_apply(p.gate, item.features)[0];
}

Vector modality_logits(const PolicyParams& p, const ToyItem& item) {
  return mlp_apply(p.modality, item.features);
}

Vector answer_logits(const PolicyParams& p, const ToyItem& item, const Vector& hint) {
  return mlp_apply(p.answer, answer_input(item, hint));
}

Response policy_sample(const PolicyParams& p, const ToyItem& item, const HintConfig& env,
                       Rng& rng, const VelocityField* flow, const SampleOptions& options) {
  const double tau = options.temperature;
  if (!(tau > 0.0)) throw std::invalid_argument("policy_sample: temperature must be > 0");
  double log_prob = 0.0;
  bool use_aux = false;
  switch (options.gate) {
    case GateMode::kSample: {
      const double g = gate_logit(p, item) / tau;
      use_aux = rng.uniform() < sigmoid(g);
      log_prob += use_aux ? log_sigmoid(g) : log_sigmoid(-g);
      break;
    }
    case GateMode::kForceOn: use_aux = true; break;
    case GateMode::kForceOff: use_aux = false; break;
  }
  Decisions d;
  d.use_aux = use_aux;
  std::optional<Vector> latent;
  if (use_aux) {
    const SampledIndex m = softmax_sample(modality_logits(p, item), tau, rng);
    d.modality = static_cast<AuxTask>(m.index);
    log_prob += m.log_prob;
    if (flow == nullptr) {
      throw std::invalid_argument("policy_sample: auxiliary generation requested without a flow model");
    }
    const std::uint64_t gen_seed = rng.next_u64();
    latent = generate_aux(*flow, ConditionVector{d.modality, item.features}, gen_seed,
                          options.solver)
                 .latent;
  }
  const SampledIndex a = softmax_sample(answer_logits(p, item, observe(item, use_aux, env)), tau, rng);
  d.answer = a.index;
  log_prob += a.log_prob;

  Response r;
  r.segments = render_segments(d, latent);
  r.used_aux = use_aux;
  r.answer = d.answer;
  r.log_prob = log_prob;
  return r;
}

double decisions_logprob(const PolicyParams& p, const ToyItem& item, const HintConfig& env,
                         const Decisions& d) {
  const double g = gate_logit(p, item);
  double lp = d.use_aux ? log_sigmoid(g) : log_sigmoid(-g);
  if (d.use_aux) lp += log_softmax(modality_logits(p, item))[static_cast<int>(d.modality)];
  lp += log_softmax(answer_logits(p, item, observe(item, d.use_aux, env)))[d.answer];
  return lp;
}

double policy_logprob(const PolicyParams& p, const ToyItem& item, const HintConfig& env,
                      const Response& response) {
  return decisions_logprob(p, item, env, extract_decisions(response));
}

Vector decisions_logprob_grad(const PolicyParams& p, const ToyItem& item, const HintConfig& env,
                              const Decisions& d) {
  const MlpForward gf = mlp_forward(p.gate, item.features);
  const double s = sigmoid(gf.output[0]);
  Vector dg(1);
  dg[0] = d.use_aux ? 1.0 - s : -s;
  const Mlp gate_grad = mlp_backward(p.gate, gf.cache, dg).param_grads;

  Mlp modality_grad = p.modality.zeros_like();
  if (d.use_aux) {
    const MlpForward mf = mlp_forward(p.modality, item.features);
    const Vector dm = onehot(static_cast<int>(d.modality), kNumTasks) - softmax(mf.output);
    modality_grad = mlp_backward(p.modality, mf.cache, dm).param_grads;
  }

  const MlpForward af = mlp_forward(p.answer, answer_input(item, observe(item, d.use_aux, env)));
  const Vector da = onehot(d.answer, kNumChoices) - softmax(af.output);
  const Mlp answer_grad = mlp_backward(p.answer, af.cache, da).param_grads;

  Vector flat(static_cast<Eigen::Index>(p.param_count()));
  flat << gate_grad.flatten(), modality_grad.flatten(), answer_grad.flatten();
  return flat;
}

std::vector<OutcomeProb> enumerate_outcomes(const PolicyParams& p, const ToyItem& item,
                                            const HintConfig& env) {
  const double g = gate_logit(p, item);
  const Vector log_mod = log_softmax(modality_logits(p, item));
  const Vector log_ans_off = log_softmax(answer_logits(p, item, observe(item, false, env)));
  const Vector log_ans_on = log_softmax(answer_logits(p, item, observe(item, true, env)));
  std::vector<OutcomeProb> out;
  out.reserve(kNumChoices * (1 + kNumTasks));
  for (int a = 0; a < kNumChoices; ++a) {
    const double lp = log_sigmoid(-g) + log_ans_off[a];
    out.push_back(OutcomeProb{Decisions{false, AuxTask::kDepth, a}, lp, std::exp(lp)});
  }
  for (int m = 0; m < kNumTasks; ++m) {
    for (int a = 0; a < kNumChoices; ++a) {
      const double lp = log_sigmoid(g) + log_mod[m] + log_ans_on[a];
      out.push_back(OutcomeProb{Decisions{true, static_cast<AuxTask>(m), a}, lp, std::exp(lp)});
    }
  }
  return out;
}

namespace {

struct HeadDistributions {
  double gate_logit;
  MlpForward modality;
  MlpForward answer_off;
  MlpForward answer_on;
};

HeadDistributions heads(const PolicyParams& p, const ToyItem& item, const HintConfig& env) {
  return HeadDistributions{
      gate_logit(p, item), mlp_forward(p.modality, item.features),
      mlp_forward(p.answer, answer_input(item, observe(item, false, env))),
      mlp_forward(p.answer, answer_input(item, observe(item, true, env)))};
}

double categorical_kl(const Vector& log_q, const Vector& log_ref) {
  return (log_q.array().exp() * (log_q - log_ref).array()).sum();
}

}  // namespace

KlGrad policy_kl_grad(const PolicyParams& p, const PolicyParams& ref, const ToyItem& item,
                      const HintConfig& env) {
  if (!p.same_shape(ref)) throw ShapeError("policy_kl: policies have different architectures");
  const HeadDistributions h = heads(p, item, env);
  const HeadDistributions r = heads(ref, item, env);

  const double pg = sigmoid(h.gate_logit);
  const double log_on = log_sigmoid(h.gate_logit), log_off = log_sigmoid(-h.gate_logit);
  const double ref_on = log_sigmoid(r.gate_logit), ref_off = log_sigmoid(-r.gate_logit);
  const double kl_gate = pg * (log_on - ref_on) + (1.0 - pg) * (log_off - ref_off);

  const Vector lm = log_softmax(h.modality.output), lm_ref = log_softmax(r.modality.output);
  const Vector l0 = log_softmax(h.answer_off.output), l0_ref = log_softmax(r.answer_off.output);
  const Vector l1 = log_softmax(h.answer_on.output), l1_ref = log_softmax(r.answer_on.output);
  const double kl_mod = categorical_kl(lm, lm_ref);
  const double kl_off = categorical_kl(l0, l0_ref);
  const double kl_on = categorical_kl(l1, l1_ref);

  KlGrad out;
  out.kl = kl_gate + pg * (kl_mod + kl_on) + (1.0 - pg) * kl_off;

  // d/dlogits of E_q[log q - log ref] is q * (log q - log ref - KL).
  auto logit_grad = [](const Vector& lq, const Vector& lref, double kl) {
    return Vector(lq.array().exp() * ((lq - lref).array() - kl));
  };
  Vector dg(1);
  dg[0] = pg * (1.0 - pg) *
          ((log_on - ref_on) - (log_off - ref_off) + kl_mod + kl_on - kl_off);
  const Mlp gate_grad =
      mlp_backward(p.gate, mlp_forward(p.gate, item.features).cache, dg).param_grads;
  const Mlp mod_grad =
      mlp_backward(p.modality, h.modality.cache, pg * logit_grad(lm, lm_ref, kl_mod)).param_grads;
  Mlp ans_grad =
      mlp_backward(p.answer, h.answer_off.cache, (1.0 - pg) * logit_grad(l0, l0_ref, kl_off))
          .param_grads;
  const Mlp ans_on_grad =
      mlp_backward(p.answer, h.answer_on.cache, pg * logit_grad(l1, l1_ref, kl_on)).param_grads;
  for (int l = 0; l < ans_grad.num_layers(); ++l) {
    ans_grad.weights[l] += ans_on_grad.weights[l];
    ans_grad.biases[l] += ans_on_grad.biases[l];
  }
  out.grad.resize(static_cast<Eigen::Index>(p.param_count()));
  out.grad << gate_grad.flatten(), mod_grad.flatten(), ans_grad.flatten();
  return out;
}

double policy_kl(const PolicyParams& p, const PolicyParams& ref, const ToyItem& item,
                 const HintConfig& env) {
  if (!p.same_shape(ref)) throw ShapeError("policy_kl: policies have different architectures");
  const auto outcomes = enumerate_outcomes(p, item, env);
  const auto ref_outcomes = enumerate_outcomes(ref, item, env);
  double kl = 0.0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].prob > 0.0) {
      kl += outcomes[i].prob * (outcomes[i].log_prob - ref_outcomes[i].log_prob);
    }
  }
  return std::max(kl, 0.0);
}

// ----------------------------------------------------------------------------
// Supervised fine-tuning

std::vector<Demo> build_demos(std::span<const LabeledItem> items, int n_per_item) {
  if (n_per_item < 0) throw std::invalid_argument("build_demos: n_per_item must be >= 0");
  std::vector<Demo> demos;
  demos.reserve(items.size() * static_cast<std::size_t>(n_per_item));
  for (const LabeledItem& li : items) {
    Decisions d;
    d.use_aux = li.label == Gain::kPositive;
    d.modality = preferred_modality(li.item);
    d.answer = li.item.correct;
    Response r;
    r.segments = render_segments(d, d.use_aux ? std::optional<Vector>(Vector()) : std::nullopt);
    r.used_aux = d.use_aux;
    r.answer = d.answer;
    for (int k = 0; k < n_per_item; ++k) demos.push_back(Demo{li.item, d, r});
  }
  return demos;
}

SftLossGrad sft_loss_grad(const PolicyParams& p, std::span<const Demo> demos,
                          const HintConfig& env) {
  if (demos.empty()) throw std::invalid_argument("sft: no demonstrations");
  SftLossGrad out{0.0, Vector::Zero(static_cast<Eigen::Index>(p.param_count()))};
  for (const Demo& demo : demos) {
    out.loss -= decisions_logprob(p, demo.item, env, demo.decisions);
    out.grad -= decisions_logprob_grad(p, demo.item, env, demo.decisions);
  }
  const double n = static_cast<double>(demos.size());
  out.loss /= n;
  out.grad /= n;
  return out;
}

double sft_step(PolicyParams& p, OptState& opt, std::span<const Demo> demos,
                const HintConfig& env, double lr) {
  const SftLossGrad lg = sft_loss_grad(p, demos, env);
  if (!std::isfinite(lg.loss)) throw NumericError("sft loss is not finite");
  Vector flat = p.flatten();
  adam_step(flat, lg.grad, opt, lr);
  p.assign(flat);
  return lg.loss;
}

}  // namespace cooper
