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

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cooper/image_io.h"
#include "cooper/modality_codec.h"
#include "cooper/numerics.h"
#include "cooper/pipeline.h"
#include "test_support.h"

namespace cooper {
namespace {

namespace fs = std::filesystem;

// Small enough that every stage finishes in well under a second.
std::vector<std::string> small_run(const fs::path& out) {
  return {"--out", out.string(),
          "--set", "toy.n_items=60",
          "--set", "flow.hidden=[16]",
          "--set", "flow.epochs=50",
          "--set", "flow.batch_size=64",
          "--set", "flow.eval_samples=64",
          "--set", "grpo.steps=3",
          "--set", "grpo.batch_items=4",
          "--set", "eval.n_items=20"};
}

int run(std::vector<std::string> base, const std::vector<std::string>& tail) {
  base.insert(base.end(), tail.begin(), tail.end());
  return run_cli(base);
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(run_cli({"--help"}), kExitOk); }

TEST(Cli, UnknownSubcommandIsUsageError) {
  EXPECT_EQ(run_cli({"frobnicate"}), kExitUsage);
  EXPECT_EQ(run_cli({}), kExitUsage);
}

TEST(Cli, DepthRoundTripWithinQuantization) {
  testing::TempDir dir("cli_depth");
  NetpbmImage raw{20, 12, 1, 65535, {}};
  Rng rng(5);
  for (int i = 0; i < raw.width * raw.height; ++i) {
    raw.samples.push_back(static_cast<std::uint16_t>(300 + rng.below(40000)));
  }
  write_netpbm(dir.path() / "depth.pgm", raw);
  ASSERT_EQ(run_cli({"codec", "encode-depth", "--in", (dir.path() / "depth.pgm").string(), "--out",
                     (dir.path() / "pseudo.ppm").string()}),
            kExitOk);
  ASSERT_EQ(run_cli({"codec", "decode-depth", "--in", (dir.path() / "pseudo.ppm").string(), "--out",
                     (dir.path() / "back.pgm").string()}),
            kExitOk);
  const DepthMap depth = depth_from_netpbm(raw, 0.001, 80.0);
  const DepthStats stats = compute_percentiles(depth);
  const NetpbmImage back = read_netpbm(dir.path() / "back.pgm");
  ASSERT_EQ(back.samples.size(), raw.samples.size());
  for (std::size_t i = 0; i < back.samples.size(); ++i) {
    EXPECT_LE(std::abs(dequantize_unit16(back.samples[i]) - normalize_depth_value(depth.depth[i], stats)),
              2.0 / 65535.0);
  }
}

TEST(Cli, SegRoundTripExact) {
  testing::TempDir dir("cli_seg");
  SegMask mask{9, 7, {}};
  for (int i = 0; i < mask.width * mask.height; ++i) {
    mask.labels.push_back(static_cast<std::uint32_t>((i * 37) % 150));
  }
  write_file(dir.path() / "mask.json", encode_mask_json(mask));
  ASSERT_EQ(run_cli({"codec", "encode-seg", "--in", (dir.path() / "mask.json").string(), "--out",
                     (dir.path() / "seg.ppm").string()}),
            kExitOk);
  ASSERT_EQ(run_cli({"codec", "decode-seg", "--in", (dir.path() / "seg.ppm").string(), "--out",
                     (dir.path() / "back.json").string()}),
            kExitOk);
  EXPECT_EQ(parse_mask_json(read_file(dir.path() / "back.json")).labels, mask.labels);
}

TEST(Cli, MissingInputIsUsageError) {
  testing::TempDir dir("cli_missing");
  EXPECT_EQ(run_cli({"codec", "decode-seg", "--in", (dir.path() / "nope.ppm").string(), "--out",
                     (dir.path() / "x.json").string()}),
            kExitUsage);
  EXPECT_EQ(run_cli({"--config", (dir.path() / "nope.toml").string(), "report"}), kExitUsage);
}

TEST(Cli, MalformedInputIsUsageError) {
  testing::TempDir dir("cli_bad");
  write_file(dir.path() / "bad.ppm", "P6\n2 2\n255\nxx");
  EXPECT_EQ(run_cli({"codec", "decode-seg", "--in", (dir.path() / "bad.ppm").string(), "--out",
                     (dir.path() / "x.json").string()}),
            kExitUsage);
}

TEST(Cli, BadConfigValueIsUsageError) {
  testing::TempDir dir("cli_cfg");
  EXPECT_EQ(run(small_run(dir.path()), {"--set", "grpo.bogus=1", "flow", "fixture"}), kExitUsage);
  EXPECT_EQ(run(small_run(dir.path()), {"flow", "sample", "--control", "normals"}), kExitUsage);
}

TEST(Cli, MissingUpstreamArtifactsAreUsageErrors) {
  testing::TempDir dir("cli_order");
  EXPECT_EQ(run(small_run(dir.path()), {"grpo"}), kExitUsage);
  EXPECT_EQ(run(small_run(dir.path()), {"report"}), kExitUsage);
  EXPECT_EQ(run(small_run(dir.path()), {"flow", "train"}), kExitUsage);
  EXPECT_EQ(run(small_run(dir.path()), {"curate"}), kExitUsage);
}

TEST(Cli, DivergentTrainingIsNumericError) {
  testing::TempDir dir("cli_numeric");
  ASSERT_EQ(run(small_run(dir.path()), {"flow", "fixture"}), kExitOk);
  EXPECT_EQ(run(small_run(dir.path()), {"--set", "flow.lr=1e300", "flow", "train"}),
            kExitNumeric);
}

TEST(Cli, StagesProduceArtifactsDeterministically) {
  testing::TempDir dir("cli_stages");
  const auto base = small_run(dir.path());
  const RunPaths paths{dir.path()};
  ASSERT_EQ(run(base, {"flow", "fixture"}), kExitOk);
  ASSERT_EQ(run(base, {"flow", "train"}), kExitOk);
  ASSERT_EQ(run(base, {"flow", "sample", "--control", "seg", "--seed", "9"}), kExitOk);
  const std::string sample = read_file(dir.path() / "flow_sample_seg_9.json");
  const std::string image = read_file(dir.path() / "flow_sample_seg_9.ppm");
  ASSERT_EQ(run(base, {"flow", "sample", "--control", "seg", "--seed", "9"}), kExitOk);
  EXPECT_EQ(read_file(dir.path() / "flow_sample_seg_9.json"), sample);
  EXPECT_EQ(read_file(dir.path() / "flow_sample_seg_9.ppm"), image);

  ASSERT_EQ(run(base, {"curate"}), kExitOk);
  ASSERT_EQ(run(base, {"sft"}), kExitOk);
  ASSERT_EQ(run(base, {"grpo"}), kExitOk);
  ASSERT_EQ(run(base, {"eval"}), kExitOk);
  const std::string eval = read_file(paths.eval());
  ASSERT_EQ(run(base, {"eval"}), kExitOk);
  EXPECT_EQ(read_file(paths.eval()), eval);
  ASSERT_EQ(run(base, {"report"}), kExitOk);
  const nlohmann::json report = nlohmann::json::parse(read_file(paths.report()));
  for (const char* key : {"a1_flow_matching", "a2_solver_order", "a3_gradient_oracles",
                          "a4_formula_suites", "a5_adaptive_behavior", "a6_codec_contracts",
                          "a7_determinism"}) {
    EXPECT_TRUE(report.contains(key)) << key;
  }
  EXPECT_TRUE(report["a5_adaptive_behavior"].contains("eval"));
  for (const fs::path& p : {paths.flow_checkpoint(), paths.splits(), paths.sft_policy(),
                            paths.grpo_metrics(), paths.trajectories(), paths.report()}) {
    EXPECT_TRUE(fs::exists(p)) << p;
  }
}

}  // namespace
}  // namespace cooper
