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

#ifndef COOPER_PIPELINE_H_
#define COOPER_PIPELINE_H_

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cooper/rectified_flow.h"
#include "cooper/run_config.h"

namespace cooper {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

// Bad arguments or missing/malformed inputs (exit code 2).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An upstream artifact is missing; the message names the command to run.
class MissingArtifact : public UsageError {
 public:
  MissingArtifact(const std::filesystem::path& path, const std::string& producer);
};

// File layout of one run directory.
struct RunPaths {
  std::filesystem::path dir;

  std::filesystem::path flow_data() const { return dir / "flow_data.jsonl"; }
  std::filesystem::path flow_checkpoint() const { return dir / "flow.ckpt.json"; }
  std::filesystem::path flow_loss() const { return dir / "flow_loss.csv"; }
  std::filesystem::path items() const { return dir / "items.jsonl"; }
  std::filesystem::path base_policy() const { return dir / "policy_base.ckpt.json"; }
  std::filesystem::path records() const { return dir / "curation_records.jsonl"; }
  std::filesystem::path splits() const { return dir / "splits.json"; }
  std::filesystem::path sft_policy() const { return dir / "policy_sft.ckpt.json"; }
  std::filesystem::path sft_loss() const { return dir / "sft_loss.csv"; }
  std::filesystem::path grpo_policy() const { return dir / "policy_grpo.ckpt.json"; }
  std::filesystem::path grpo_metrics() const { return dir / "grpo_metrics.csv"; }
  std::filesystem::path trajectories() const { return dir / "trajectories.jsonl"; }
  std::filesystem::path eval() const { return dir / "eval.json"; }
  std::filesystem::path report() const { return dir / "report.json"; }
};

// Stages. Each reads its inputs from and writes its outputs to cfg.out.
void stage_flow_fixture(const RunConfig& cfg);
void stage_flow_train(const RunConfig& cfg, const std::optional<std::filesystem::path>& data);
struct FlowSampleRequest {
  AuxTask control = AuxTask::kDepth;
  std::uint64_t seed = 0;
  SolverConfig solver{};
};
// Writes flow_sample_<control>_<seed>.json (latent) and .ppm (decoded).
void stage_flow_sample(const RunConfig& cfg, const FlowSampleRequest& request);
void stage_curate(const RunConfig& cfg, const std::optional<std::filesystem::path>& policy);
void stage_sft(const RunConfig& cfg);
void stage_grpo(const RunConfig& cfg);
void stage_eval(const RunConfig& cfg, const std::optional<std::filesystem::path>& checkpoint);
nlohmann::json stage_report(const RunConfig& cfg);

// Codec file conversions.
void codec_encode_depth(const std::filesystem::path& in, const std::filesystem::path& out,
                        double meters_per_unit, double far_plane);
void codec_decode_depth(const std::filesystem::path& in, const std::filesystem::path& out);
void codec_encode_seg(const std::filesystem::path& in, const std::filesystem::path& out,
                      int palette_size);
void codec_decode_seg(const std::filesystem::path& in, const std::filesystem::path& out,
                      int palette_size);

struct SolverOrderReport {
  std::vector<int> steps;
  std::vector<double> errors;
  std::vector<double> orders;  // log2(e(T) / e(2T)) for consecutive T
};

// Global error against the exact solution of dz/dt = cos(2 pi t) z.
SolverOrderReport measure_solver_order(SolverMethod method, const std::vector<int>& steps);

// Runs the command line (without the program name) and returns the exit code.
int run_cli(const std::vector<std::string>& args);
int cli_main(int argc, char** argv);

}  // namespace cooper

#endif  // COOPER_PIPELINE_H_
