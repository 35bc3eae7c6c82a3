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

#include "cooper/pipeline.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include <spdlog/spdlog.h>

#include "cooper/cognition.h"
#include "cooper/cpr_reward.h"
#include "cooper/curation.h"
#include "cooper/grpo_trainer.h"
#include "cooper/image_io.h"
#include "cooper/modality_codec.h"
#include "cooper/serialization.h"

namespace cooper {

namespace fs = std::filesystem;
using nlohmann::json;

MissingArtifact::MissingArtifact(const fs::path& path, const std::string& producer)
    : UsageError("missing " + path.string() + "; run `cooper " + producer + "` first") {}

namespace {

std::string require_file(const fs::path& path, const std::string& producer) {
  if (!fs::exists(path)) throw MissingArtifact(path, producer);
  return read_file(path);
}

Checkpoint load_checkpoint(const fs::path& path, const std::string& producer) {
  return parse_checkpoint(require_file(path, producer));
}

VelocityField load_flow(const RunPaths& paths) {
  Checkpoint c = load_checkpoint(paths.flow_checkpoint(), "flow train");
  if (!c.flow) throw FormatError(paths.flow_checkpoint().string() + ": no flow parameters");
  return *c.flow;
}

PolicyParams load_policy(const fs::path& path, const std::string& producer) {
  Checkpoint c = load_checkpoint(path, producer);
  if (!c.policy) throw FormatError(path.string() + ": no policy parameters");
  return *c.policy;
}

void write_checkpoint(const fs::path& path, const RunConfig& cfg, const std::string& stage,
                      json metadata, std::optional<VelocityField> flow,
                      std::optional<PolicyParams> policy) {
  Checkpoint c;
  c.stage = stage;
  c.config = cfg.to_json();
  c.metadata = std::move(metadata);
  c.flow = std::move(flow);
  c.policy = std::move(policy);
  write_file(path, encode_checkpoint(c));
}

std::uint64_t stage_seed(std::uint64_t seed, std::uint64_t tag) {
  return Rng::derive(seed, {tag}).next_u64();
}

constexpr std::uint64_t kInitTag = 0x494E4954ULL;
constexpr std::uint64_t kEvalTag = 0x4556414CULL;
constexpr std::uint64_t kGrpoTag = 0x4752504FULL;

// Curated items with their labels, in split order.
struct LabeledSplits {
  std::vector<LabeledItem> sft;
  std::vector<LabeledItem> rl;
};

LabeledSplits load_splits(const RunPaths& paths) {
  const std::vector<ToyItem> items = items_from_jsonl(require_file(paths.items(), "curate"));
  const Splits splits = splits_from_json(require_file(paths.splits(), "curate"));
  std::map<std::uint64_t, const ToyItem*> by_id;
  for (const ToyItem& item : items) by_id[item.id] = &item;
  std::map<std::uint64_t, Gain> labels(splits.labels.begin(), splits.labels.end());
  auto resolve = [&](const std::vector<std::uint64_t>& ids) {
    std::vector<LabeledItem> out;
    for (std::uint64_t id : ids) {
      const auto it = by_id.find(id);
      const auto label = labels.find(id);
      if (it == by_id.end() || label == labels.end()) {
        throw FormatError(paths.splits().string() + ": item " + std::to_string(id) +
                          " has no entry in items.jsonl or no label");
      }
      out.push_back(LabeledItem{*it->second, label->second});
    }
    return out;
  };
  return LabeledSplits{resolve(splits.sft), resolve(splits.rl)};
}

json hashes_of(const std::vector<fs::path>& files) {
  json out = json::object();
  for (const fs::path& f : files) {
    if (fs::exists(f)) out[f.filename().string()] = fnv1a_hex(read_file(f));
  }
  return out;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

void stage_flow_fixture(const RunConfig& cfg) {
  const RunPaths paths{cfg.out};
  const auto pairs = make_flow_fixture(cfg.flow.fixture_conditions, cfg.flow.latent_dim,
                                       cfg.flow.content_dim, cfg.flow.target_scale,
                                       cfg.flow.train.seed);
  write_file(paths.flow_data(), flow_pairs_to_jsonl(pairs));
  spdlog::info("wrote {} fixture pairs to {}", pairs.size(), paths.flow_data().string());
}

void stage_flow_train(const RunConfig& cfg, const std::optional<fs::path>& data) {
  const RunPaths paths{cfg.out};
  const fs::path data_path = data.value_or(paths.flow_data());
  const std::string data_text = require_file(data_path, "flow fixture");
  const std::vector<FlowPair> pairs = flow_pairs_from_jsonl(data_text);
  if (pairs.empty()) throw UsageError(data_path.string() + ": no flow pairs");

  Rng init = Rng::derive(cfg.flow.train.seed, {kInitTag});
  VelocityField field = VelocityField::create(cfg.flow.latent_dim, cfg.flow.content_dim,
                                              cfg.flow.hidden, init);
  for (const FlowPair& p : pairs) {
    if (p.target.size() != field.latent_dim || p.condition.encoded_size() != field.condition_dim) {
      throw UsageError(data_path.string() + ": pair dimensions do not match [flow] latent/content dims");
    }
  }
  const FlowTrainResult result = fm_train(field, pairs, cfg.flow.train);
  const std::uint64_t eval_seed = stage_seed(cfg.flow.train.seed, kEvalTag);
  const double eval_loss = fm_eval_loss(field, pairs, cfg.flow.eval_samples, eval_seed);
  const double velocity_error =
      optimal_velocity_error(field, pairs, 0.1, 0.8, cfg.flow.eval_samples, eval_seed + 1);
  double gen_max = 0.0;
  double gen_sum = 0.0;
  constexpr int kGenSeeds = 8;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    for (int s = 0; s < kGenSeeds; ++s) {
      const AuxLatent out = generate_aux(field, pairs[k].condition,
                                         Rng::derive(eval_seed, {k, static_cast<std::uint64_t>(s)}).next_u64(),
                                         cfg.solver);
      const double err = (out.latent - pairs[k].target).norm();
      gen_max = std::max(gen_max, err);
      gen_sum += err;
    }
  }
  const json metadata{{"steps", result.steps},
                      {"final_batch_loss", result.loss_curve.empty() ? 0.0 : result.loss_curve.back()},
                      {"eval_loss", eval_loss},
                      {"velocity_rel_error", velocity_error},
                      {"generation_l2_max", gen_max},
                      {"generation_l2_mean", gen_sum / (pairs.size() * kGenSeeds)},
                      {"data_hash", fnv1a_hex(data_text)}};
  write_checkpoint(paths.flow_checkpoint(), cfg, "flow", metadata, field, std::nullopt);
  std::string csv = csv_header(std::vector<std::string>{"step", "loss"});
  for (std::size_t i = 0; i < result.loss_curve.size(); ++i) {
    csv += csv_row(std::vector<double>{static_cast<double>(i), result.loss_curve[i]});
  }
  write_file(paths.flow_loss(), csv);
  spdlog::info("flow: {} steps, eval loss {:.5f}, velocity rel err {:.4f}, gen L2 max {:.4f}",
               result.steps, eval_loss, velocity_error, gen_max);
}

void stage_flow_sample(const RunConfig& cfg, const FlowSampleRequest& request) {
  const RunPaths paths{cfg.out};
  const VelocityField field = load_flow(paths);
  ConditionVector condition{request.control, Vector::Zero(field.condition_dim - kNumTasks)};
  if (fs::exists(paths.flow_data())) {
    for (const FlowPair& p : flow_pairs_from_jsonl(read_file(paths.flow_data()))) {
      if (p.condition.control == request.control &&
          p.condition.encoded_size() == field.condition_dim) {
        condition = p.condition;
        break;
      }
    }
  }
  const AuxLatent latent = generate_aux(field, condition, request.seed, request.solver);
  const std::string stem =
      "flow_sample_" + task_name(request.control) + "_" + std::to_string(request.seed);
  const json j{{"control", task_name(request.control)},
               {"seed", request.seed},
               {"steps", request.solver.steps},
               {"solver", solver_name(request.solver.method)},
               {"latent", std::vector<double>(latent.latent.data(),
                                              latent.latent.data() + latent.latent.size())}};
  write_file(paths.dir / (stem + ".json"), j.dump() + "\n");
  const PseudoImage image = decode_aux(latent, cfg.codec.render_width, cfg.codec.render_height,
                                       make_palette(cfg.codec.palette_size));
  write_netpbm(paths.dir / (stem + ".ppm"), pseudo_to_ppm(image));
  spdlog::info("wrote {}.json and {}.ppm", stem, stem);
}

void stage_curate(const RunConfig& cfg, const std::optional<fs::path>& policy_path) {
  const RunPaths paths{cfg.out};
  const VelocityField flow = load_flow(paths);
  const PolicyParams base = policy_path ? load_policy(*policy_path, "sft")
                                        : init_base_policy(cfg.base, cfg.seed);
  const std::vector<ToyItem> items = make_toy_items(cfg.toy.n_items, cfg.toy.seed, cfg.toy.world);
  const CurationResult result = curate(base, items, cfg.hint, cfg.sampling, cfg.curation, &flow);

  write_file(paths.items(), items_to_jsonl(items));
  write_file(paths.records(), records_to_jsonl(result.records));
  write_file(paths.splits(), splits_to_json(result.sft, result.rl));
  json metadata{{"items", items.size()},
                {"dropped_trivial", result.dropped_trivial},
                {"dropped_boundary", result.dropped_boundary},
                {"sft_items", result.sft.size()},
                {"rl_items", result.rl.size()}};
  write_checkpoint(paths.base_policy(), cfg, "base", metadata, std::nullopt, base);
  int counts[3] = {0, 0, 0};
  for (const CurationRecord& r : result.records) ++counts[static_cast<int>(r.gain) + 1];
  spdlog::info("curate: {} items, {} trivial dropped, labels +{} 0{} -{}, {} boundary dropped, "
               "sft {} rl {}",
               items.size(), result.dropped_trivial, counts[2], counts[1], counts[0],
               result.dropped_boundary, result.sft.size(), result.rl.size());
}

void stage_sft(const RunConfig& cfg) {
  const RunPaths paths{cfg.out};
  PolicyParams policy = load_policy(paths.base_policy(), "curate");
  const LabeledSplits splits = load_splits(paths);
  if (splits.sft.empty()) throw UsageError("curation produced an empty SFT split");
  const std::vector<Demo> demos = build_demos(splits.sft, cfg.sft.demos_per_item);
  OptState opt = OptState::for_size(policy.param_count());
  std::string csv = csv_header(std::vector<std::string>{"step", "loss"});
  double loss = 0.0;
  for (int step = 0; step < cfg.sft.steps; ++step) {
    loss = sft_step(policy, opt, demos, cfg.hint, cfg.sft.lr);
    csv += csv_row(std::vector<double>{static_cast<double>(step), loss});
  }
  const double final_loss = sft_loss_grad(policy, demos, cfg.hint).loss;
  write_file(paths.sft_loss(), csv);
  write_checkpoint(paths.sft_policy(), cfg, "sft",
                   json{{"steps", cfg.sft.steps}, {"demos", demos.size()}, {"final_loss", final_loss}},
                   std::nullopt, policy);
  spdlog::info("sft: {} demos, {} steps, loss {:.4f}", demos.size(), cfg.sft.steps, final_loss);
}

void stage_grpo(const RunConfig& cfg) {
  const RunPaths paths{cfg.out};
  PolicyParams policy = load_policy(paths.sft_policy(), "sft");
  const LabeledSplits splits = load_splits(paths);
  const VelocityField flow = load_flow(paths);
  if (splits.rl.empty()) throw UsageError("curation produced an empty RL split");

  std::string trajectories;
  const TrainLoopResult result = train_loop(
      policy, splits.rl, flow, cfg.grpo, cfg.hint, stage_seed(cfg.seed, kGrpoTag),
      [&](int step, const std::vector<RolloutGroup>& groups) {
        for (const RolloutGroup& g : groups) {
          for (std::size_t i = 0; i < g.responses.size(); ++i) {
            trajectories += trajectory_line(step, g.item.item.id, static_cast<int>(i),
                                            g.responses[i].used_aux, g.rewards[i]);
          }
        }
      });
  std::string csv = csv_header(metrics_columns());
  for (const TrainMetrics& m : result.history) csv += csv_row(metrics_values(m));
  write_file(paths.grpo_metrics(), csv);
  write_file(paths.trajectories(), trajectories);
  json metadata{{"steps", cfg.grpo.steps}, {"rl_items", splits.rl.size()}};
  if (!result.history.empty()) {
    const TrainMetrics& last = result.history.back();
    metadata["final_mean_reward"] = last.mean_reward;
    metadata["final_aux_rate_pos"] = number_or_null(last.aux_rate_pos);
    metadata["final_aux_rate_neg"] = number_or_null(last.aux_rate_neg);
    spdlog::info("grpo: final reward {:.4f}, r_a {:.4f}, aux+ {:.3f}, aux- {:.3f}, aux0 {:.3f}",
                 last.mean_reward, last.mean_r_a, last.aux_rate_pos, last.aux_rate_neg,
                 last.aux_rate_bnd);
  }
  write_checkpoint(paths.grpo_policy(), cfg, "grpo", metadata, std::nullopt, policy);
}

void stage_eval(const RunConfig& cfg, const std::optional<fs::path>& checkpoint) {
  const RunPaths paths{cfg.out};
  const fs::path ckpt_path = checkpoint.value_or(paths.grpo_policy());
  const Checkpoint ckpt = load_checkpoint(ckpt_path, "grpo");
  if (!ckpt.policy) throw FormatError(ckpt_path.string() + ": no policy parameters");
  const VelocityField flow = load_flow(paths);
  const std::vector<ToyItem> items =
      make_toy_items(cfg.eval.n_items, cfg.toy.seed, cfg.toy.world, cfg.eval.first_id);
  const std::uint64_t seed = stage_seed(cfg.seed, kEvalTag);
  SampleOptions options;
  options.solver = cfg.solver;

  double correct = 0.0, reward = 0.0, total = 0.0;
  std::array<double, 3> aux{0, 0, 0}, count{0, 0, 0}, acc{0, 0, 0};
  for (const ToyItem& item : items) {
    std::vector<Response> group;
    for (int j = 0; j < cfg.eval.rollouts_per_item; ++j) {
      Rng rng = Rng::derive(seed, {item.id, static_cast<std::uint64_t>(j)});
      group.push_back(policy_sample(*ckpt.policy, item, cfg.hint, rng, &flow, options));
    }
    const int sigma = std::min(cfg.grpo.sigma, cfg.eval.rollouts_per_item);
    const auto rewards = score_group(group, item, item.gain, sigma);
    const int label = static_cast<int>(item.gain) + 1;
    for (std::size_t j = 0; j < group.size(); ++j) {
      correct += rewards[j].r_a;
      reward += rewards[j].total;
      total += 1.0;
      aux[label] += group[j].used_aux ? 1.0 : 0.0;
      acc[label] += rewards[j].r_a;
      count[label] += 1.0;
    }
  }
  auto rate = [](double num, double den) {
    return den > 0 ? json(num / den) : json(nullptr);
  };
  const json report{{"checkpoint", ckpt_path.filename().string()},
                    {"stage", ckpt.stage},
                    {"n_items", items.size()},
                    {"rollouts_per_item", cfg.eval.rollouts_per_item},
                    {"accuracy", correct / total},
                    {"mean_reward", reward / total},
                    {"aux_rate_pos", rate(aux[2], count[2])},
                    {"aux_rate_neg", rate(aux[0], count[0])},
                    {"aux_rate_bnd", rate(aux[1], count[1])},
                    {"accuracy_pos", rate(acc[2], count[2])},
                    {"accuracy_neg", rate(acc[0], count[0])},
                    {"accuracy_bnd", rate(acc[1], count[1])}};
  write_file(paths.eval(), report.dump(1) + "\n");
  spdlog::info("eval: accuracy {:.4f}, aux+ {}, aux- {}", correct / total,
               report["aux_rate_pos"].dump(), report["aux_rate_neg"].dump());
}

SolverOrderReport measure_solver_order(SolverMethod method, const std::vector<int>& steps) {
  SolverOrderReport r;
  Vector z0(3);
  z0 << 1.0, -0.5, 2.0;
  // z(t) = z0 exp(sin(2 pi t) / (2 pi)), so z(1) = z0.
  const VelocityFn v = [](const Vector& z, double t) {
    return Vector(std::cos(2.0 * std::numbers::pi * t) * z);
  };
  for (int n : steps) {
    r.steps.push_back(n);
    r.errors.push_back((integrate(v, z0, SolverConfig{n, method}) - z0).norm());
  }
  for (std::size_t i = 1; i < r.errors.size(); ++i) {
    r.orders.push_back(std::log(r.errors[i - 1] / r.errors[i]) /
                       std::log(static_cast<double>(r.steps[i]) / r.steps[i - 1]));
  }
  return r;
}

namespace {

json solver_json(SolverMethod method) {
  const SolverOrderReport r = measure_solver_order(method, {10, 20, 40});
  return json{{"steps", r.steps},
              {"errors", r.errors},
              {"orders", r.orders},
              {"min_order", *std::min_element(r.orders.begin(), r.orders.end())}};
}

json codec_checks(const RunConfig& cfg) {
  Rng rng = Rng::derive(cfg.seed, {0x434F444543ULL});
  DepthMap depth;
  depth.width = 24;
  depth.height = 16;
  depth.far_plane = cfg.codec.far_plane;
  for (int i = 0; i < depth.width * depth.height; ++i) {
    depth.depth.push_back(0.5 + 30.0 * rng.uniform());
  }
  const DepthStats stats = compute_percentiles(depth);
  const DepthEncoding enc = depth_to_pseudo(depth, stats);
  const PseudoImage stored = pseudo_from_netpbm(parse_netpbm(encode_netpbm(pseudo_to_ppm(enc.image, 65535))));
  const NetpbmImage pgm = parse_netpbm(encode_netpbm(pseudo_depth_to_pgm(stored)));
  double depth_err = 0.0;
  for (std::size_t i = 0; i < depth.size(); ++i) {
    const double reference = normalize_depth_value(depth.depth[i], stats);
    depth_err = std::max(depth_err, std::abs(dequantize_unit16(pgm.samples[i]) - reference));
  }

  const Palette palette = make_palette(cfg.codec.palette_size);
  SegMask mask{16, 16, {}};
  for (int i = 0; i < mask.width * mask.height; ++i) {
    mask.labels.push_back(static_cast<std::uint32_t>(i % palette.size()));
  }
  const PseudoImage seg_image =
      pseudo_from_netpbm(parse_netpbm(encode_netpbm(pseudo_to_ppm(seg_to_pseudo(mask, palette)))));
  const bool seg_exact = pseudo_to_seg(seg_image, palette).labels == mask.labels;
  return json{{"depth_round_trip_max_error", depth_err},
              {"depth_round_trip_bound", 2.0 / 65535.0},
              {"seg_round_trip_exact", seg_exact},
              {"palette_size", palette.size()},
              {"palette_min_distance", min_palette_distance(palette)}};
}

json formula_checks() {
  const std::vector<double> two{1.0, 0.0};
  const std::vector<double> three{2.0, 1.0, 0.0};
  const std::vector<double> flat{0.7, 0.7, 0.7};
  int truth_table_ok = 0;
  for (Gain g : {Gain::kPositive, Gain::kNegative, Gain::kBoundary}) {
    for (int count : {3, 5}) {
      for (bool o : {false, true}) {
        const double r = exploration_reward(ExplorationContext{g, 4, 8, count, o});
        double expected = 0.0;
        if (o && g == Gain::kPositive && count <= 4) expected = 0.2;
        if (o && g == Gain::kNegative && count >= 4) expected = -0.2;
        truth_table_ok += r == expected ? 1 : 0;
      }
    }
  }
  return json{{"advantages_1_0", compute_advantages(two)},
              {"advantages_2_1_0", compute_advantages(three)},
              {"advantages_flat", compute_advantages(flat)},
              {"clip_1_5_a1", clipped_term(1.5, 1.0, 0.2)},
              {"clip_0_5_am1", clipped_term(0.5, -1.0, 0.2)},
              {"exploration_truth_table_matches", truth_table_ok},
              {"gain_0_25_0_75", gain_name(classify_gain(0.25, 0.75, 0.375))},
              {"gain_0_75_0_25", gain_name(classify_gain(0.75, 0.25, 0.375))}};
}

json gradient_checks(std::uint64_t seed) {
  // A handful of small configurations; the full sweep lives in the tests.
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 5; ++k) {
    Rng rng = Rng::derive(seed, {0x4644ULL, k});
    VelocityField field = VelocityField::create(3, 2, {6}, rng);
    std::vector<FlowSample> batch;
    for (int i = 0; i < 4; ++i) {
      batch.push_back(FlowSample::make(rng.normal_vector(3), rng.normal_vector(3), rng.uniform(),
                                       ConditionVector{AuxTask::kDepth, rng.normal_vector(2)}));
    }
    const Mlp analytic = fm_loss_grad(field, batch).grads;
    const Mlp numeric = finite_diff_gradient(
        [&](const Mlp& net) {
          VelocityField f = field;
          f.net = net;
          return fm_loss(f, batch);
        },
        field.net, 1e-5);
    worst = std::max(worst, max_relative_error(analytic.flatten(), numeric.flatten(), 1e-6));
  }
  return json{{"fm_loss_configs", 5}, {"fm_loss_max_rel_error", worst}};
}

}  // namespace

json stage_report(const RunConfig& cfg) {
  const RunPaths paths{cfg.out};
  if (!fs::exists(paths.grpo_metrics())) {
    throw UsageError("no metrics found in " + paths.dir.string() + "; run `cooper grpo` first");
  }
  const CsvTable metrics = parse_csv(read_file(paths.grpo_metrics()));
  if (metrics.rows.empty()) throw UsageError(paths.grpo_metrics().string() + " has no rows");
  auto col = [&](const std::string& name) {
    const int c = metrics.column(name);
    if (c < 0) throw FormatError(paths.grpo_metrics().string() + ": missing column " + name);
    return metrics.rows.back()[static_cast<std::size_t>(c)];
  };
  std::vector<double> rewards;
  const int reward_col = metrics.column("mean_reward");
  for (const auto& row : metrics.rows) rewards.push_back(row[static_cast<std::size_t>(reward_col)]);

  json report;
  if (fs::exists(paths.flow_checkpoint())) {
    report["a1_flow_matching"] = parse_checkpoint(read_file(paths.flow_checkpoint())).metadata;
  } else {
    report["a1_flow_matching"] = nullptr;
  }
  report["a2_solver_order"] = json{{"euler", solver_json(SolverMethod::kEuler)},
                                   {"heun", solver_json(SolverMethod::kHeun)}};
  report["a3_gradient_oracles"] = gradient_checks(cfg.seed);
  report["a4_formula_suites"] = formula_checks();
  json a5{{"final_step", col("step")},
          {"mean_reward", col("mean_reward")},
          {"mean_r_a", col("mean_r_a")},
          {"mean_r_f", col("mean_r_f")},
          {"mean_r_e", col("mean_r_e")},
          {"aux_rate_pos", number_or_null(col("aux_rate_pos"))},
          {"aux_rate_neg", number_or_null(col("aux_rate_neg"))},
          {"aux_rate_bnd", number_or_null(col("aux_rate_bnd"))},
          {"reward_window_means", window_means(rewards, 20)},
          {"reward_trend_non_decreasing", trend_non_decreasing(rewards, 20)}};
  if (fs::exists(paths.eval())) a5["eval"] = json::parse(read_file(paths.eval()));
  report["a5_adaptive_behavior"] = a5;
  report["a6_codec_contracts"] = codec_checks(cfg);
  report["a7_determinism"] = json{
      {"output_hashes",
       hashes_of({paths.flow_data(), paths.flow_checkpoint(), paths.flow_loss(), paths.items(),
                  paths.base_policy(), paths.records(), paths.splits(), paths.sft_policy(),
                  paths.sft_loss(), paths.grpo_policy(), paths.grpo_metrics(),
                  paths.trajectories(), paths.eval()})}};
  write_file(paths.report(), report.dump(1) + "\n");
  return report;
}

void codec_encode_depth(const fs::path& in, const fs::path& out, double meters_per_unit,
                        double far_plane) {
  if (!fs::exists(in)) throw UsageError("input not found: " + in.string());
  const DepthMap depth = depth_from_netpbm(read_netpbm(in), meters_per_unit, far_plane);
  const DepthStats stats = compute_percentiles(depth);
  const DepthEncoding enc = depth_to_pseudo(depth, stats);
  if (enc.flat) spdlog::warn("{}: depth map is flat (x2 == x98); writing zeros", in.string());
  write_netpbm(out, pseudo_to_ppm(enc.image, 65535));
}

void codec_decode_depth(const fs::path& in, const fs::path& out) {
  if (!fs::exists(in)) throw UsageError("input not found: " + in.string());
  write_netpbm(out, pseudo_depth_to_pgm(pseudo_from_netpbm(read_netpbm(in))));
}

void codec_encode_seg(const fs::path& in, const fs::path& out, int palette_size) {
  if (!fs::exists(in)) throw UsageError("input not found: " + in.string());
  const SegMask mask = parse_mask_json(read_file(in));
  write_netpbm(out, pseudo_to_ppm(seg_to_pseudo(mask, make_palette(palette_size))));
}

void codec_decode_seg(const fs::path& in, const fs::path& out, int palette_size) {
  if (!fs::exists(in)) throw UsageError("input not found: " + in.string());
  const PseudoImage image = pseudo_from_netpbm(read_netpbm(in));
  write_file(out, encode_mask_json(pseudo_to_seg(image, make_palette(palette_size))));
}

}  // namespace cooper
