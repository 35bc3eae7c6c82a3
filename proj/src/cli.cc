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

#include <cstdlib>
#include <iostream>
#include <mutex>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "cooper/image_io.h"
#include "cooper/pipeline.h"

namespace cooper {

namespace {

void init_logging() {
  static std::once_flag once;
  std::call_once(once, [] {
    auto logger = spdlog::stderr_logger_st("cooper");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
  });
  const char* env = std::getenv("COOPER_LOG");
  spdlog::set_level(env != nullptr ? spdlog::level::from_str(env) : spdlog::level::info);
}

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> sets;
};

// Stage flags are turned into "table.key=value" overrides so they win over
// the config file.
template <typename T>
void add_override(std::vector<std::string>& overrides, const std::string& key,
                  const std::optional<T>& value) {
  if (!value) return;
  if constexpr (std::is_same_v<T, std::string>) {
    overrides.push_back(key + "=\"" + *value + "\"");
  } else {
    std::ostringstream s;
    s.precision(17);
    s << *value;
    overrides.push_back(key + "=" + s.str());
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  init_logging();
  CLI::App app{"Cooperative perception-reasoning training laboratory", "cooper"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions global;
  app.add_option("--config", global.config, "TOML run configuration");
  app.add_option("--seed", global.seed, "global seed");
  app.add_option("--out", global.out, "run directory (overrides [out] in the config)");
  app.add_option("--set", global.sets, "override, e.g. --set grpo.steps=50")->take_all();

  std::vector<std::string> stage_overrides;
  // Stage flag storage.
  std::optional<int> grpo_steps, grpo_batch, grpo_n, grpo_sigma, sft_steps, curate_k;
  std::optional<double> grpo_lr, grpo_beta, grpo_eps, sft_lr, curate_lambda;
  std::optional<int> flow_epochs;
  std::optional<int> solver_steps;
  std::optional<std::string> solver_method;

  // codec
  auto* codec = app.add_subcommand("codec", "convert depth maps and masks to/from pseudo-images");
  codec->require_subcommand(1);
  std::string codec_in, codec_out;
  std::optional<int> palette_size;
  std::optional<double> meters_per_unit, far_plane;
  auto add_io = [&](CLI::App* sub) {
    sub->add_option("--in", codec_in, "input file")->required();
    sub->add_option("--out", codec_out, "output file")->required();
  };
  auto* enc_depth = codec->add_subcommand("encode-depth", "16-bit PGM depth -> 16-bit PPM pseudo-image");
  add_io(enc_depth);
  enc_depth->add_option("--meters-per-unit", meters_per_unit);
  enc_depth->add_option("--far-plane", far_plane);
  auto* dec_depth = codec->add_subcommand("decode-depth", "PPM pseudo-image -> normalised 16-bit PGM depth");
  add_io(dec_depth);
  auto* enc_seg = codec->add_subcommand("encode-seg", "JSON mask -> PPM pseudo-image");
  add_io(enc_seg);
  enc_seg->add_option("--palette-size", palette_size);
  auto* dec_seg = codec->add_subcommand("decode-seg", "PPM pseudo-image -> JSON mask");
  add_io(dec_seg);
  dec_seg->add_option("--palette-size", palette_size);

  // flow
  auto* flow = app.add_subcommand("flow", "flow-matching fixture, training and sampling");
  flow->require_subcommand(1);
  auto* flow_fixture = flow->add_subcommand("fixture", "write the conditioned-target fixture");
  auto* flow_train = flow->add_subcommand("train", "train the velocity field");
  std::optional<std::string> flow_data;
  flow_train->add_option("--data", flow_data, "flow pairs JSONL (default: <out>/flow_data.jsonl)");
  flow_train->add_option("--epochs", flow_epochs);
  auto* flow_sample = flow->add_subcommand("sample", "generate one latent and decode it to PPM");
  std::string control;
  std::uint64_t sample_seed = 0;
  flow_sample->add_option("--control", control, "depth or seg")->required();
  flow_sample->add_option("--seed", sample_seed, "generation seed");
  flow_sample->add_option("-T,--steps", solver_steps, "ODE steps");
  flow_sample->add_option("--solver", solver_method, "euler or heun");

  // curate / sft / grpo / eval / report / pipeline
  auto* curate_cmd = app.add_subcommand("curate", "two-round accuracy estimation and data split");
  std::optional<std::string> curate_policy;
  curate_cmd->add_option("--policy", curate_policy, "policy checkpoint (default: fresh base policy)");
  curate_cmd->add_option("-k", curate_k, "responses per question");
  curate_cmd->add_option("--lambda", curate_lambda, "visual-gain threshold");
  auto* sft_cmd = app.add_subcommand("sft", "supervised fine-tuning on the SFT split");
  sft_cmd->add_option("--steps", sft_steps);
  sft_cmd->add_option("--lr", sft_lr);
  auto* grpo_cmd = app.add_subcommand("grpo", "GRPO with the CPR reward on the RL split");
  grpo_cmd->add_option("--steps", grpo_steps);
  grpo_cmd->add_option("--batch", grpo_batch, "items per step");
  grpo_cmd->add_option("-N,--group-size", grpo_n);
  grpo_cmd->add_option("--sigma", grpo_sigma);
  grpo_cmd->add_option("--lr", grpo_lr);
  grpo_cmd->add_option("--beta", grpo_beta);
  grpo_cmd->add_option("--clip", grpo_eps);
  auto* eval_cmd = app.add_subcommand("eval", "replay a policy checkpoint on held-out items");
  std::optional<std::string> eval_ckpt;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "default: <out>/policy_grpo.ckpt.json");
  auto* report_cmd = app.add_subcommand("report", "summarise a finished run as JSON");
  auto* pipeline_cmd =
      app.add_subcommand("pipeline", "flow fixture, flow train, curate, sft, grpo, eval and report");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    std::vector<std::string> overrides = global.sets;
    if (global.seed) overrides.push_back("seed=" + std::to_string(*global.seed));
    if (!global.out.empty()) overrides.push_back("out=\"" + global.out + "\"");
    add_override(overrides, "grpo.steps", grpo_steps);
    add_override(overrides, "grpo.batch_items", grpo_batch);
    add_override(overrides, "grpo.group_size", grpo_n);
    add_override(overrides, "grpo.sigma", grpo_sigma);
    add_override(overrides, "grpo.lr", grpo_lr);
    add_override(overrides, "grpo.kl_beta", grpo_beta);
    add_override(overrides, "grpo.clip_eps", grpo_eps);
    add_override(overrides, "sft.steps", sft_steps);
    add_override(overrides, "sft.lr", sft_lr);
    add_override(overrides, "sampling.k", curate_k);
    add_override(overrides, "curation.lambda", curate_lambda);
    add_override(overrides, "flow.epochs", flow_epochs);
    add_override(overrides, "codec.palette_size", palette_size);
    add_override(overrides, "codec.meters_per_unit", meters_per_unit);
    add_override(overrides, "codec.far_plane", far_plane);
    add_override(overrides, "solver.steps", solver_steps);
    add_override(overrides, "solver.method", solver_method);

    RunConfig cfg;
    if (!global.config.empty()) {
      if (!std::filesystem::exists(global.config)) {
        throw UsageError("config file not found: " + global.config);
      }
      cfg = load_run_config(global.config, overrides);
    } else {
      cfg = parse_run_config("", overrides);
    }

    if (codec->parsed()) {
      if (enc_depth->parsed()) {
        codec_encode_depth(codec_in, codec_out, cfg.codec.meters_per_unit, cfg.codec.far_plane);
      } else if (dec_depth->parsed()) {
        codec_decode_depth(codec_in, codec_out);
      } else if (enc_seg->parsed()) {
        codec_encode_seg(codec_in, codec_out, cfg.codec.palette_size);
      } else {
        codec_decode_seg(codec_in, codec_out, cfg.codec.palette_size);
      }
    } else if (flow_fixture->parsed()) {
      stage_flow_fixture(cfg);
    } else if (flow_train->parsed()) {
      stage_flow_train(cfg, flow_data ? std::optional<std::filesystem::path>(*flow_data) : std::nullopt);
    } else if (flow_sample->parsed()) {
      stage_flow_sample(cfg, FlowSampleRequest{parse_task(control), sample_seed, cfg.solver});
    } else if (curate_cmd->parsed()) {
      stage_curate(cfg, curate_policy ? std::optional<std::filesystem::path>(*curate_policy)
                                      : std::nullopt);
    } else if (sft_cmd->parsed()) {
      stage_sft(cfg);
    } else if (grpo_cmd->parsed()) {
      stage_grpo(cfg);
    } else if (eval_cmd->parsed()) {
      stage_eval(cfg, eval_ckpt ? std::optional<std::filesystem::path>(*eval_ckpt) : std::nullopt);
    } else if (report_cmd->parsed()) {
      std::cout << stage_report(cfg).dump(1) << "\n";
    } else if (pipeline_cmd->parsed()) {
      stage_flow_fixture(cfg);
      stage_flow_train(cfg, std::nullopt);
      stage_curate(cfg, std::nullopt);
      stage_sft(cfg);
      stage_grpo(cfg);
      stage_eval(cfg, std::nullopt);
      stage_report(cfg);
    }
    return kExitOk;
  } catch (const NumericError& e) {
    spdlog::error("numeric failure: {}", e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  }
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

}  // namespace cooper
