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

#ifndef COOPER_RUN_CONFIG_H_
#define COOPER_RUN_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cooper/cognition.h"
#include "cooper/curation.h"
#include "cooper/grpo_trainer.h"
#include "cooper/rectified_flow.h"

namespace cooper {

struct ToyStageConfig {
  int n_items = 600;
  std::uint64_t seed = 42;
  ToyWorldConfig world{};
};

struct FlowStageConfig {
  int latent_dim = 8;
  int content_dim = kFeatureDim;
  std::vector<int> hidden{128, 128};
  FlowTrainConfig train{};
  // Fixture: `conditions` (control, content) pairs with targets N(0, scale^2).
  int fixture_conditions = 4;
  double target_scale = 0.3;
  int eval_samples = 4096;
};

struct SftStageConfig {
  int steps = 20;
  double lr = 1e-2;
  int demos_per_item = 1;
};

struct EvalStageConfig {
  int n_items = 600;
  std::uint64_t first_id = 1000000;
  int rollouts_per_item = 8;
};

struct CodecStageConfig {
  int palette_size = 150;
  double far_plane = 80.0;
  double meters_per_unit = 0.001;
  int render_width = 32;
  int render_height = 32;
};

// Everything a pipeline run reads. Loaded from one TOML file with a table per
// stage; stage seeds default to the global seed unless set explicitly.
struct RunConfig {
  std::uint64_t seed = 42;
  std::string out = "run";
  ToyStageConfig toy{};
  HintConfig hint{};
  BasePolicyConfig base{};
  FlowStageConfig flow{};
  SolverConfig solver{};
  SamplingConfig sampling{};
  CurationConfig curation{};
  SftStageConfig sft{};
  GrpoConfig grpo{};
  EvalStageConfig eval{};
  CodecStageConfig codec{};

  // Throws std::invalid_argument naming the first out-of-range field.
  void validate() const;
  nlohmann::json to_json() const;
};

// Parses TOML text. `overrides` are "table.key=value" strings whose value is a
// TOML literal; they win over the file. Throws std::invalid_argument on
// unknown keys, type mismatches or invalid values.
RunConfig parse_run_config(const std::string& toml_text,
                           const std::vector<std::string>& overrides = {},
                           const std::string& source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides = {});

}  // namespace cooper

#endif  // COOPER_RUN_CONFIG_H_
