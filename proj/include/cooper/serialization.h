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

#ifndef COOPER_SERIALIZATION_H_
#define COOPER_SERIALIZATION_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cooper/cognition.h"
#include "cooper/cpr_reward.h"
#include "cooper/curation.h"
#include "cooper/rectified_flow.h"

namespace cooper {

inline constexpr const char* kCheckpointVersion = "cooper-checkpoint/1";

nlohmann::json mlp_to_json(const Mlp& mlp);
Mlp mlp_from_json(const nlohmann::json& j);

nlohmann::json flow_to_json(const VelocityField& field);
VelocityField flow_from_json(const nlohmann::json& j);

nlohmann::json policy_to_json(const PolicyParams& p);
PolicyParams policy_from_json(const nlohmann::json& j);

struct Checkpoint {
  std::string version = kCheckpointVersion;
  std::string stage;
  nlohmann::json config = nlohmann::json::object();    // run config snapshot
  nlohmann::json metadata = nlohmann::json::object();  // steps, losses, input hashes
  std::optional<VelocityField> flow;
  std::optional<PolicyParams> policy;
};

// Canonical text form: sorted keys, shortest round-trip numbers, trailing
// newline. parse_checkpoint(encode_checkpoint(c)) re-encodes to the same bytes.
std::string encode_checkpoint(const Checkpoint& c);
// Throws FormatError on malformed JSON, unknown versions or bad shapes.
Checkpoint parse_checkpoint(const std::string& text);

// JSONL helpers. Every line is one compact JSON object.
std::string items_to_jsonl(std::span<const ToyItem> items);
std::vector<ToyItem> items_from_jsonl(const std::string& text);

std::string flow_pairs_to_jsonl(std::span<const FlowPair> pairs);
std::vector<FlowPair> flow_pairs_from_jsonl(const std::string& text);

std::string records_to_jsonl(std::span<const CurationRecord> records);
std::vector<CurationRecord> records_from_jsonl(const std::string& text);

// {"sft": [ids], "rl": [ids]} plus the gain label of every listed id.
std::string splits_to_json(std::span<const LabeledItem> sft, std::span<const LabeledItem> rl);
struct Splits {
  std::vector<std::uint64_t> sft;
  std::vector<std::uint64_t> rl;
  std::vector<std::pair<std::uint64_t, Gain>> labels;
};
Splits splits_from_json(const std::string& text);

std::string trajectory_line(int step, std::uint64_t item_id, int rollout_index, bool o,
                            const RewardBreakdown& r);

// CSV with a header row; numbers in shortest round-trip form.
std::string csv_header(std::span<const std::string> columns);
std::string csv_row(std::span<const double> values);
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;  // -1 if absent
};
CsvTable parse_csv(const std::string& text);

// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

// 64-bit FNV-1a digest, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace cooper

#endif  // COOPER_SERIALIZATION_H_
