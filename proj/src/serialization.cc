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

#include "cooper/serialization.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "cooper/image_io.h"

namespace cooper {

using nlohmann::json;

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector to_vector(const std::vector<double>& v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

template <typename Fn>
auto guarded(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const FormatError&) {
    throw;
  } catch (const json::exception& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
}

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string(what) + ": " + e.what(), static_cast<long>(e.byte));
  }
}

template <typename T, typename Fn>
std::vector<T> parse_lines(const std::string& text, const char* what, Fn&& fn) {
  std::vector<T> out;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const std::string where = std::string(what) + " line " + std::to_string(number);
    const json j = parse_json(line, where.c_str());
    out.push_back(guarded(where.c_str(), [&] { return fn(j); }));
  }
  return out;
}

std::string letter(int choice) { return std::string(1, choice_letter(choice)); }

int parse_letter(const json& j) {
  if (j.is_number_integer()) return j.get<int>();
  const auto c = parse_choice(j.get<std::string>());
  if (!c) throw std::invalid_argument("answer must be one of A-D");
  return *c;
}

}  // namespace

json mlp_to_json(const Mlp& mlp) {
  json weights = json::array();
  json biases = json::array();
  for (int l = 0; l < mlp.num_layers(); ++l) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(mlp.weights[l].size()));
    for (Eigen::Index r = 0; r < mlp.weights[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < mlp.weights[l].cols(); ++c) w.push_back(mlp.weights[l](r, c));
    }
    weights.push_back(w);
    biases.push_back(to_std(mlp.biases[l]));
  }
  return json{{"layer_sizes", mlp.layer_sizes}, {"weights", weights}, {"biases", biases}};
}

Mlp mlp_from_json(const json& j) {
  Mlp mlp = Mlp::zeros(j.at("layer_sizes").get<std::vector<int>>());
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  if (weights.size() != mlp.weights.size() || biases.size() != mlp.biases.size()) {
    throw ShapeError("network JSON: layer count disagrees with layer_sizes");
  }
  for (int l = 0; l < mlp.num_layers(); ++l) {
    const auto w = weights[static_cast<std::size_t>(l)].get<std::vector<double>>();
    const auto b = biases[static_cast<std::size_t>(l)].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != mlp.weights[l].size() ||
        static_cast<Eigen::Index>(b.size()) != mlp.biases[l].size()) {
      throw ShapeError("network JSON: layer " + std::to_string(l) + " has the wrong size");
    }
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < mlp.weights[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < mlp.weights[l].cols(); ++c) mlp.weights[l](r, c) = w[k++];
    }
    mlp.biases[l] = to_vector(b);
  }
  mlp.validate();
  return mlp;
}

json flow_to_json(const VelocityField& field) {
  return json{{"latent_dim", field.latent_dim},
              {"condition_dim", field.condition_dim},
              {"net", mlp_to_json(field.net)}};
}

VelocityField flow_from_json(const json& j) {
  VelocityField field;
  field.latent_dim = j.at("latent_dim").get<int>();
  field.condition_dim = j.at("condition_dim").get<int>();
  field.net = mlp_from_json(j.at("net"));
  field.validate();
  return field;
}

json policy_to_json(const PolicyParams& p) {
  return json{{"gate", mlp_to_json(p.gate)},
              {"modality", mlp_to_json(p.modality)},
              {"answer", mlp_to_json(p.answer)}};
}

PolicyParams policy_from_json(const json& j) {
  PolicyParams p;
  p.gate = mlp_from_json(j.at("gate"));
  p.modality = mlp_from_json(j.at("modality"));
  p.answer = mlp_from_json(j.at("answer"));
  p.validate();
  return p;
}

std::string encode_checkpoint(const Checkpoint& c) {
  json j{{"version", c.version}, {"stage", c.stage}, {"config", c.config},
         {"metadata", c.metadata}};
  if (c.flow) j["flow"] = flow_to_json(*c.flow);
  if (c.policy) j["policy"] = policy_to_json(*c.policy);
  return j.dump(1) + "\n";
}

Checkpoint parse_checkpoint(const std::string& text) {
  const json j = parse_json(text, "checkpoint");
  return guarded("checkpoint", [&] {
    Checkpoint c;
    c.version = j.at("version").get<std::string>();
    if (c.version != kCheckpointVersion) {
      throw FormatError("checkpoint: unsupported version '" + c.version + "'");
    }
    c.stage = j.at("stage").get<std::string>();
    c.config = j.at("config");
    c.metadata = j.at("metadata");
    if (j.contains("flow")) c.flow = flow_from_json(j.at("flow"));
    if (j.contains("policy")) c.policy = policy_from_json(j.at("policy"));
    return c;
  });
}

std::string items_to_jsonl(std::span<const ToyItem> items) {
  std::string out;
  for (const ToyItem& item : items) {
    const json j{{"id", item.id},
                 {"features", to_std(item.features)},
                 {"correct", letter(item.correct)},
                 {"gain", gain_name(item.gain)},
                 {"misleading", letter(item.misleading)}};
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<ToyItem> items_from_jsonl(const std::string& text) {
  return parse_lines<ToyItem>(text, "items", [](const json& j) {
    ToyItem item;
    item.id = j.at("id").get<std::uint64_t>();
    item.features = to_vector(j.at("features").get<std::vector<double>>());
    item.correct = parse_letter(j.at("correct"));
    item.gain = parse_gain_name(j.at("gain").get<std::string>());
    item.misleading = parse_letter(j.at("misleading"));
    item.validate();
    return item;
  });
}

std::string flow_pairs_to_jsonl(std::span<const FlowPair> pairs) {
  std::string out;
  for (const FlowPair& p : pairs) {
    const json j{{"control", task_name(p.condition.control)},
                 {"content", to_std(p.condition.content)},
                 {"target", to_std(p.target)}};
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<FlowPair> flow_pairs_from_jsonl(const std::string& text) {
  return parse_lines<FlowPair>(text, "flow data", [](const json& j) {
    FlowPair p;
    p.condition.control = parse_task(j.at("control").get<std::string>());
    p.condition.content = to_vector(j.at("content").get<std::vector<double>>());
    p.target = to_vector(j.at("target").get<std::vector<double>>());
    return p;
  });
}

std::string records_to_jsonl(std::span<const CurationRecord> records) {
  std::string out;
  for (const CurationRecord& r : records) {
    const json j{{"item_id", r.item_id},
                 {"acc_raw", r.acc_raw},
                 {"acc_aux", r.acc_aux},
                 {"gain", gain_name(r.gain)}};
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<CurationRecord> records_from_jsonl(const std::string& text) {
  return parse_lines<CurationRecord>(text, "records", [](const json& j) {
    return CurationRecord{j.at("item_id").get<std::uint64_t>(), j.at("acc_raw").get<double>(),
                          j.at("acc_aux").get<double>(),
                          parse_gain_name(j.at("gain").get<std::string>())};
  });
}

std::string splits_to_json(std::span<const LabeledItem> sft, std::span<const LabeledItem> rl) {
  json j{{"sft", json::array()}, {"rl", json::array()}, {"labels", json::object()}};
  for (const LabeledItem& li : sft) {
    j["sft"].push_back(li.item.id);
    j["labels"][std::to_string(li.item.id)] = gain_name(li.label);
  }
  for (const LabeledItem& li : rl) {
    j["rl"].push_back(li.item.id);
    j["labels"][std::to_string(li.item.id)] = gain_name(li.label);
  }
  return j.dump(1) + "\n";
}

Splits splits_from_json(const std::string& text) {
  const json j = parse_json(text, "splits");
  return guarded("splits", [&] {
    Splits s;
    s.sft = j.at("sft").get<std::vector<std::uint64_t>>();
    s.rl = j.at("rl").get<std::vector<std::uint64_t>>();
    for (const auto& [key, value] : j.at("labels").items()) {
      s.labels.emplace_back(std::stoull(key), parse_gain_name(value.get<std::string>()));
    }
    return s;
  });
}

std::string trajectory_line(int step, std::uint64_t item_id, int rollout_index, bool o,
                            const RewardBreakdown& r) {
  const json j{{"step", step},     {"item_id", item_id}, {"rollout_index", rollout_index},
               {"o", o ? 1 : 0},   {"r_a", r.r_a},       {"r_f", r.r_f},
               {"r_e", r.r_e},     {"total", r.total}};
  return j.dump() + "\n";
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string csv_header(std::span<const std::string> columns) {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
  return out + "\n";
}

std::string csv_row(std::span<const double> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + format_double(values[i]);
  return out + "\n";
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<int>(i);
  }
  return -1;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(s);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    return cells;
  };
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    if (table.columns.empty()) {
      table.columns = split(line);
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != table.columns.size()) {
      throw FormatError("CSV line " + std::to_string(number) + ": expected " +
                        std::to_string(table.columns.size()) + " cells");
    }
    std::vector<double> row;
    for (const std::string& c : cells) {
      try {
        row.push_back(std::stod(c));
      } catch (const std::exception&) {
        throw FormatError("CSV line " + std::to_string(number) + ": '" + c + "' is not a number");
      }
    }
    table.rows.push_back(std::move(row));
  }
  if (table.columns.empty()) throw FormatError("CSV: missing header");
  return table;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace cooper
