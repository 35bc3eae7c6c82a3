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

#include <map>
#include <set>
#include <stdexcept>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "cooper/image_io.h"

namespace cooper {

namespace {

// Walks every config field once per pass. The same visitor drives TOML
// reading and JSON writing so the two can never disagree on the field set.
template <typename V>
void visit_config(RunConfig& c, V& v) {
  v.root([&] {
    v.seed("seed", c.seed, true);
    v.field("out", c.out);
  });
  v.section("toy", [&] {
    v.field("n_items", c.toy.n_items);
    v.seed("seed", c.toy.seed, false);
    v.field("type_signal", c.toy.world.type_signal);
    v.field("type_noise", c.toy.world.type_noise);
    v.field("clue_positive", c.toy.world.clue_positive);
    v.field("clue_boundary", c.toy.world.clue_boundary);
    v.field("clue_negative", c.toy.world.clue_negative);
    v.field("clue_noise", c.toy.world.clue_noise);
    v.field("mix", c.toy.world.mix);
  });
  v.section("hint", [&] {
    v.field("h_plus", c.hint.h_plus);
    v.field("h_zero", c.hint.h_zero);
    v.field("h_minus", c.hint.h_minus);
  });
  v.section("base_policy", [&] {
    v.field("weak_hint_weight", c.base.weak_hint_weight);
    v.field("clue_weight", c.base.clue_weight);
    v.field("strong_hint_scale", c.base.strong_hint_scale);
    v.field("init_noise", c.base.init_noise);
    v.field("head_hidden", c.base.head_hidden);
  });
  v.section("flow", [&] {
    v.field("latent_dim", c.flow.latent_dim);
    v.field("content_dim", c.flow.content_dim);
    v.field("hidden", c.flow.hidden);
    v.field("epochs", c.flow.train.epochs);
    v.field("batch_size", c.flow.train.batch_size);
    v.field("lr", c.flow.train.lr);
    v.field("cosine_decay", c.flow.train.cosine_decay);
    v.field("final_lr_fraction", c.flow.train.final_lr_fraction);
    v.seed("seed", c.flow.train.seed, false);
    v.field("fixture_conditions", c.flow.fixture_conditions);
    v.field("target_scale", c.flow.target_scale);
    v.field("eval_samples", c.flow.eval_samples);
  });
  v.section("solver", [&] {
    v.field("steps", c.solver.steps);
    v.field("method", c.solver.method);
  });
  v.section("sampling", [&] {
    v.field("k", c.sampling.k);
    v.field("temperature", c.sampling.temperature);
    v.seed("seed", c.sampling.seed, false);
  });
  v.section("curation", [&] {
    v.field("lambda", c.curation.lambda);
    v.field("boundary_keep_ratio", c.curation.boundary_keep_ratio);
    v.field("sft_fraction", c.curation.sft_fraction);
    v.seed("split_seed", c.curation.split_seed, false);
  });
  v.section("sft", [&] {
    v.field("steps", c.sft.steps);
    v.field("lr", c.sft.lr);
    v.field("demos_per_item", c.sft.demos_per_item);
  });
  v.section("grpo", [&] {
    v.field("clip_eps", c.grpo.clip_eps);
    v.field("kl_beta", c.grpo.kl_beta);
    v.field("lr", c.grpo.lr);
    v.field("group_size", c.grpo.group_size);
    v.field("batch_items", c.grpo.batch_items);
    v.field("steps", c.grpo.steps);
    v.field("std_floor", c.grpo.std_floor);
    v.field("sigma", c.grpo.sigma);
  });
  v.section("eval", [&] {
    v.field("n_items", c.eval.n_items);
    v.field("first_id", c.eval.first_id);
    v.field("rollouts_per_item", c.eval.rollouts_per_item);
  });
  v.section("codec", [&] {
    v.field("palette_size", c.codec.palette_size);
    v.field("far_plane", c.codec.far_plane);
    v.field("meters_per_unit", c.codec.meters_per_unit);
    v.field("render_width", c.codec.render_width);
    v.field("render_height", c.codec.render_height);
  });
}

class TomlReader {
 public:
  explicit TomlReader(const toml::table& root) : root_(root) {}

  template <typename Fn>
  void root(Fn&& fn) {
    current_ = &root_;
    prefix_.clear();
    fn();
  }

  template <typename Fn>
  void section(const std::string& name, Fn&& fn) {
    known_.insert(name);
    const toml::node* node = root_.get(name);
    const toml::table* table = node == nullptr ? &empty_ : node->as_table();
    if (table == nullptr) throw std::invalid_argument("config: '" + name + "' must be a table");
    current_ = table;
    prefix_ = name + ".";
    fn();
    for (const auto& [key, value] : *table) {
      if (!seen_.count(prefix_ + std::string(key.str()))) {
        throw std::invalid_argument("config: unknown key '" + prefix_ + std::string(key.str()) + "'");
      }
    }
  }

  void field(const std::string& key, int& out) { read_integer(key, out); }
  void field(const std::string& key, std::uint64_t& out) { read_integer(key, out); }

  void field(const std::string& key, double& out) {
    if (const toml::node* n = get(key)) {
      const auto v = n->value<double>();
      if (!v) throw type_error(key, "a number");
      out = *v;
    }
  }

  void field(const std::string& key, bool& out) {
    if (const toml::node* n = get(key)) {
      const auto v = n->value_exact<bool>();
      if (!v) throw type_error(key, "a boolean");
      out = *v;
    }
  }

  void field(const std::string& key, std::string& out) {
    if (const toml::node* n = get(key)) {
      const auto v = n->value_exact<std::string>();
      if (!v) throw type_error(key, "a string");
      out = *v;
    }
  }

  void field(const std::string& key, SolverMethod& out) {
    std::string name;
    if (get(key) == nullptr) return;
    field(key, name);
    out = parse_solver(name);
  }

  void field(const std::string& key, std::vector<int>& out) {
    if (const toml::node* n = get(key)) {
      const toml::array* arr = n->as_array();
      if (arr == nullptr) throw type_error(key, "an array of integers");
      out.clear();
      for (const toml::node& e : *arr) {
        const auto v = e.value_exact<std::int64_t>();
        if (!v) throw type_error(key, "an array of integers");
        out.push_back(static_cast<int>(*v));
      }
    }
  }

  void field(const std::string& key, std::array<double, 3>& out) {
    if (const toml::node* n = get(key)) {
      const toml::array* arr = n->as_array();
      if (arr == nullptr || arr->size() != 3) throw type_error(key, "an array of 3 numbers");
      for (std::size_t i = 0; i < 3; ++i) {
        const auto v = (*arr)[i].value<double>();
        if (!v) throw type_error(key, "an array of 3 numbers");
        out[i] = *v;
      }
    }
  }

  // Stage seeds that are not set explicitly follow the global seed.
  void seed(const std::string& key, std::uint64_t& out, bool global) {
    const bool present = get(key) != nullptr;
    field(key, out);
    if (global) {
      global_seed_ = out;
    } else if (!present) {
      follow_global_.push_back(&out);
    }
  }

  void finish() {
    for (std::uint64_t* s : follow_global_) *s = global_seed_;
    for (const auto& [key, value] : root_) {
      const std::string k(key.str());
      if (value.is_table()) {
        if (!known_.count(k)) throw std::invalid_argument("config: unknown table '[" + k + "]'");
      } else if (!seen_.count(k)) {
        throw std::invalid_argument("config: unknown key '" + k + "'");
      }
    }
  }

 private:
  const toml::node* get(const std::string& key) {
    seen_.insert(prefix_ + key);
    return current_->get(key);
  }

  std::invalid_argument type_error(const std::string& key, const char* expected) const {
    return std::invalid_argument("config: '" + prefix_ + key + "' must be " + expected);
  }

  template <typename T>
  void read_integer(const std::string& key, T& out) {
    if (const toml::node* n = get(key)) {
      const auto v = n->value_exact<std::int64_t>();
      if (!v) throw type_error(key, "an integer");
      if (std::is_unsigned_v<T> && *v < 0) throw type_error(key, "a non-negative integer");
      out = static_cast<T>(*v);
    }
  }

  const toml::table& root_;
  const toml::table empty_;
  const toml::table* current_ = nullptr;
  std::string prefix_;
  std::set<std::string> seen_;
  std::set<std::string> known_;
  std::vector<std::uint64_t*> follow_global_;
  std::uint64_t global_seed_ = 42;
};

class JsonWriter {
 public:
  template <typename Fn>
  void root(Fn&& fn) {
    current_ = &out_;
    fn();
  }

  template <typename Fn>
  void section(const std::string& name, Fn&& fn) {
    current_ = &out_[name];
    *current_ = nlohmann::json::object();
    fn();
  }

  template <typename T>
  void field(const std::string& key, const T& value) {
    (*current_)[key] = value;
  }
  void field(const std::string& key, SolverMethod value) { (*current_)[key] = solver_name(value); }
  void seed(const std::string& key, std::uint64_t value, bool) { (*current_)[key] = value; }

  nlohmann::json take() { return std::move(out_); }

 private:
  nlohmann::json out_ = nlohmann::json::object();
  nlohmann::json* current_ = nullptr;
};

void apply_override(toml::table& root, const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::invalid_argument("override '" + text + "' must look like table.key=value");
  }
  const std::string path = text.substr(0, eq);
  const std::string value = text.substr(eq + 1);
  toml::table fragment;
  try {
    fragment = toml::parse("v = " + value);
  } catch (const toml::parse_error&) {
    fragment = toml::table{};
    fragment.insert("v", value);  // bare words are taken as strings
  }
  toml::table* target = &root;
  std::string key = path;
  if (const auto dot = path.find('.'); dot != std::string::npos) {
    const std::string table_name = path.substr(0, dot);
    key = path.substr(dot + 1);
    if (!root.contains(table_name)) root.insert(table_name, toml::table{});
    target = root.get_as<toml::table>(table_name);
    if (target == nullptr) throw std::invalid_argument("override: '" + table_name + "' is not a table");
  }
  target->insert_or_assign(key, std::move(*fragment.get("v")));
}

}  // namespace

void RunConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("config: ") + what);
  };
  require(toy.n_items >= 1, "toy.n_items must be >= 1");
  require(toy.world.mix[0] >= 0 && toy.world.mix[1] >= 0 && toy.world.mix[2] >= 0 &&
              toy.world.mix[0] + toy.world.mix[1] + toy.world.mix[2] > 0,
          "toy.mix must be non-negative with a positive sum");
  require(toy.world.type_noise >= 0 && toy.world.clue_noise >= 0, "toy noise levels must be >= 0");
  hint.validate();
  require(base.head_hidden >= 1, "base_policy.head_hidden must be >= 1");
  require(flow.latent_dim >= 1 && flow.content_dim >= 0, "flow dimensions must be positive");
  require(flow.content_dim == kFeatureDim, "flow.content_dim must equal the item feature size (8)");
  for (int h : flow.hidden) require(h >= 1, "flow.hidden sizes must be >= 1");
  require(flow.train.epochs >= 0 && flow.train.batch_size >= 1, "flow epochs/batch_size out of range");
  require(flow.train.lr > 0, "flow.lr must be > 0");
  require(flow.train.final_lr_fraction >= 0 && flow.train.final_lr_fraction <= 1,
          "flow.final_lr_fraction must lie in [0, 1]");
  require(flow.fixture_conditions >= 1, "flow.fixture_conditions must be >= 1");
  require(flow.target_scale > 0, "flow.target_scale must be > 0");
  require(flow.eval_samples >= 1, "flow.eval_samples must be >= 1");
  require(solver.steps >= 1, "solver.steps must be >= 1");
  sampling.validate();
  curation.validate();
  require(sft.steps >= 0 && sft.lr > 0 && sft.demos_per_item >= 1, "sft fields out of range");
  grpo.validate();
  require(eval.n_items >= 1 && eval.rollouts_per_item >= 1, "eval fields out of range");
  require(codec.palette_size >= 1 && codec.palette_size <= 1024, "codec.palette_size must lie in [1, 1024]");
  require(codec.far_plane > 0 && codec.meters_per_unit > 0, "codec scales must be > 0");
  require(codec.render_width >= 1 && codec.render_height >= 1, "codec render size must be >= 1");
}

nlohmann::json RunConfig::to_json() const {
  JsonWriter writer;
  visit_config(const_cast<RunConfig&>(*this), writer);
  return writer.take();
}

RunConfig parse_run_config(const std::string& toml_text, const std::vector<std::string>& overrides,
                           const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(toml_text, source);
  } catch (const toml::parse_error& e) {
    const auto& where = e.source().begin;
    throw std::invalid_argument("config " + source + ":" + std::to_string(where.line) + ":" +
                                std::to_string(where.column) + ": " + std::string(e.description()));
  }
  for (const std::string& o : overrides) apply_override(root, o);
  RunConfig config;
  TomlReader reader(root);
  visit_config(config, reader);
  reader.finish();
  config.grpo.solver = config.solver;
  config.sampling.solver = config.solver;
  config.validate();
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides) {
  return parse_run_config(read_file(path), overrides, path.string());
}

}  // namespace cooper
