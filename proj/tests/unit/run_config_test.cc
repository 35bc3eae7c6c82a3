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

#include "cooper/run_config.h"

#include <gtest/gtest.h>

#include "cooper/image_io.h"
#include "test_support.h"

namespace cooper {
namespace {

TEST(RunConfig, EmptyTextGivesDefaults) {
  const RunConfig c = parse_run_config("");
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.grpo.group_size, 8);
  EXPECT_EQ(c.grpo.sigma, 4);
  EXPECT_EQ(c.grpo.steps, 100);
  EXPECT_EQ(c.grpo.batch_items, 32);
  EXPECT_EQ(c.grpo.clip_eps, 0.2);
  EXPECT_EQ(c.grpo.kl_beta, 0.0);
  EXPECT_EQ(c.sampling.k, 8);
  EXPECT_EQ(c.sampling.temperature, 1.0);
  EXPECT_EQ(c.curation.lambda, 0.375);
  EXPECT_EQ(c.solver.steps, 50);
  EXPECT_EQ(c.solver.method, SolverMethod::kEuler);
  EXPECT_EQ(c.codec.palette_size, 150);
}

TEST(RunConfig, ShippedDefaultFileMatchesBuiltInDefaults) {
  const RunConfig shipped = load_run_config(COOPER_SOURCE_DIR "/configs/default.toml");
  EXPECT_EQ(shipped.to_json(), parse_run_config("").to_json());
}

TEST(RunConfig, FileOverridesDefaultsAndFlagsOverrideFile) {
  const std::string text = "[grpo]\nsteps = 7\nlr = 0.5\n[solver]\nmethod = \"heun\"\n";
  const RunConfig file_only = parse_run_config(text);
  EXPECT_EQ(file_only.grpo.steps, 7);
  EXPECT_EQ(file_only.grpo.lr, 0.5);
  EXPECT_EQ(file_only.grpo.solver.method, SolverMethod::kHeun);
  EXPECT_EQ(file_only.sampling.solver.method, SolverMethod::kHeun);
  const RunConfig flagged = parse_run_config(text, {"grpo.steps=9", "solver.method=euler"});
  EXPECT_EQ(flagged.grpo.steps, 9);
  EXPECT_EQ(flagged.grpo.lr, 0.5);
  EXPECT_EQ(flagged.solver.method, SolverMethod::kEuler);
}

TEST(RunConfig, StageSeedsFollowGlobalSeedUnlessSet) {
  const RunConfig a = parse_run_config("seed = 7\n");
  EXPECT_EQ(a.toy.seed, 7u);
  EXPECT_EQ(a.sampling.seed, 7u);
  EXPECT_EQ(a.flow.train.seed, 7u);
  EXPECT_EQ(a.curation.split_seed, 7u);
  const RunConfig b = parse_run_config("seed = 7\n[sampling]\nseed = 99\n");
  EXPECT_EQ(b.sampling.seed, 99u);
  EXPECT_EQ(b.toy.seed, 7u);
  const RunConfig c = parse_run_config("", {"seed=11"});
  EXPECT_EQ(c.toy.seed, 11u);
}

TEST(RunConfig, UnknownKeysAndTablesRejected) {
  EXPECT_THROW(parse_run_config("[grpo]\nstep = 3\n"), std::invalid_argument);
  EXPECT_THROW(parse_run_config("[gpro]\nsteps = 3\n"), std::invalid_argument);
  EXPECT_THROW(parse_run_config("", {"grpo.nope=1"}), std::invalid_argument);
  try {
    parse_run_config("[grpo]\nstep = 3\n");
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("grpo.step"), std::string::npos) << e.what();
  }
}

TEST(RunConfig, TypeAndRangeErrors) {
  EXPECT_THROW(parse_run_config("[grpo]\nsteps = \"many\"\n"), std::invalid_argument);
  EXPECT_THROW(parse_run_config("[grpo]\nsigma = 9\n"), std::invalid_argument);
  EXPECT_THROW(parse_run_config("[curation]\nlambda = 1.5\n"), std::invalid_argument);
  EXPECT_THROW(parse_run_config("[solver]\nmethod = \"rk4\"\n"), std::invalid_argument);
  EXPECT_THROW(parse_run_config("[grpo\n"), std::invalid_argument);
  EXPECT_THROW(parse_run_config("", {"novalue"}), std::invalid_argument);
}

TEST(RunConfig, JsonSnapshotIsStable) {
  const RunConfig c = parse_run_config("[flow]\nhidden = [16, 16]\n");
  const nlohmann::json j = c.to_json();
  EXPECT_EQ(j["flow"]["hidden"], nlohmann::json::array({16, 16}));
  EXPECT_EQ(j["solver"]["method"], "euler");
  EXPECT_EQ(c.to_json().dump(), j.dump());
}

TEST(RunConfig, LoadFromFile) {
  testing::TempDir dir("cfg");
  write_file(dir.path() / "c.toml", "out = \"somewhere\"\n[toy]\nn_items = 12\n");
  const RunConfig c = load_run_config(dir.path() / "c.toml");
  EXPECT_EQ(c.out, "somewhere");
  EXPECT_EQ(c.toy.n_items, 12);
  EXPECT_THROW(load_run_config(dir.path() / "absent.toml"), std::runtime_error);
}

}  // namespace
}  // namespace cooper
