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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cooper/cpr_reward.h"
#include "cooper/curation.h"
#include "cooper/grpo_trainer.h"
#include "cooper/modality_codec.h"
#include "cooper/pipeline.h"
#include "cooper/rectified_flow.h"
#include "cooper/run_config.h"

namespace py = pybind11;

namespace {

using cooper::AuxTask;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using LabelArray = py::array_t<std::uint32_t, py::array::c_style | py::array::forcecast>;

cooper::DepthMap depth_from_array(const DoubleArray& depth, double far_plane) {
  if (depth.ndim() != 2) throw std::invalid_argument("depth must be a 2-D array (height, width)");
  cooper::DepthMap map;
  map.height = static_cast<int>(depth.shape(0));
  map.width = static_cast<int>(depth.shape(1));
  map.far_plane = far_plane;
  map.depth.assign(depth.data(), depth.data() + depth.size());
  return map;
}

cooper::PseudoImage pseudo_from_array(const DoubleArray& image) {
  if (image.ndim() != 3 || image.shape(2) != 3) {
    throw std::invalid_argument("pseudo-image must have shape (height, width, 3)");
  }
  cooper::PseudoImage img;
  img.height = static_cast<int>(image.shape(0));
  img.width = static_cast<int>(image.shape(1));
  img.data.assign(image.data(), image.data() + image.size());
  img.validate();
  return img;
}

DoubleArray pseudo_to_array(const cooper::PseudoImage& img) {
  DoubleArray out({img.height, img.width, 3});
  std::copy(img.data.begin(), img.data.end(), out.mutable_data());
  return out;
}

cooper::Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const cooper::Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> from_vector(const cooper::Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

PYBIND11_MODULE(_cooper, m) {
  m.doc() = "Native core of the cooper toolkit.";

  m.def("run_cli", &cooper::run_cli, py::arg("args"),
        "Run a cooper command line (without the program name); returns the exit code.");

  // Configuration.
  m.def(
      "parse_config",
      [](const std::string& toml_text, const std::vector<std::string>& overrides) {
        return cooper::parse_run_config(toml_text, overrides).to_json().dump();
      },
      py::arg("toml_text") = "", py::arg("overrides") = std::vector<std::string>{});

  // Codec.
  m.def("percentile", &cooper::percentile, py::arg("values"), py::arg("p"));
  m.def(
      "depth_to_pseudo",
      [](const DoubleArray& depth, double far_plane) {
        const cooper::DepthMap map = depth_from_array(depth, far_plane);
        map.validate();
        const cooper::DepthStats stats = cooper::compute_percentiles(map);
        const cooper::DepthEncoding enc = cooper::depth_to_pseudo(map, stats);
        return py::make_tuple(pseudo_to_array(enc.image), enc.flat, stats.x2, stats.x98);
      },
      py::arg("depth"), py::arg("far_plane") = 80.0,
      "Returns (pseudo_image, flat, x2, x98).");
  m.def(
      "pseudo_to_depth",
      [](const DoubleArray& image) {
        const cooper::NormalizedDepth nd = cooper::pseudo_to_depth(pseudo_from_array(image));
        DoubleArray out({nd.height, nd.width});
        std::copy(nd.values.begin(), nd.values.end(), out.mutable_data());
        return out;
      },
      py::arg("image"));
  m.def("make_palette", [](int n) { return cooper::make_palette(n).colors; }, py::arg("n") = 150);
  m.def(
      "min_palette_distance",
      [](int n) { return cooper::min_palette_distance(cooper::make_palette(n)); },
      py::arg("n") = 150);
  m.def(
      "seg_to_pseudo",
      [](const LabelArray& labels, int palette_size) {
        if (labels.ndim() != 2) throw std::invalid_argument("labels must be a 2-D array");
        cooper::SegMask mask{static_cast<int>(labels.shape(1)), static_cast<int>(labels.shape(0)),
                             std::vector<std::uint32_t>(labels.data(), labels.data() + labels.size())};
        return pseudo_to_array(cooper::seg_to_pseudo(mask, cooper::make_palette(palette_size)));
      },
      py::arg("labels"), py::arg("palette_size") = 150);
  m.def(
      "pseudo_to_seg",
      [](const DoubleArray& image, int palette_size) {
        const cooper::SegMask mask =
            cooper::pseudo_to_seg(pseudo_from_array(image), cooper::make_palette(palette_size));
        LabelArray out({mask.height, mask.width});
        std::copy(mask.labels.begin(), mask.labels.end(), out.mutable_data());
        return out;
      },
      py::arg("image"), py::arg("palette_size") = 150);

  // Rectified flow.
  m.def(
      "interpolate_path",
      [](const std::vector<double>& z0, const std::vector<double>& z1, double t) {
        return from_vector(cooper::interpolate_path(to_vector(z0), to_vector(z1), t));
      },
      py::arg("z0"), py::arg("z1"), py::arg("t"));
  m.def(
      "measure_solver_order",
      [](const std::string& method, const std::vector<int>& steps) {
        const cooper::SolverOrderReport r =
            cooper::measure_solver_order(cooper::parse_solver(method), steps);
        py::dict out;
        out["steps"] = r.steps;
        out["errors"] = r.errors;
        out["orders"] = r.orders;
        return out;
      },
      py::arg("method"), py::arg("steps") = std::vector<int>{10, 20, 40});
  m.def(
      "train_flow_fixture",
      [](int conditions, int latent_dim, int content_dim, const std::vector<int>& hidden, int epochs,
         int batch_size, double lr, std::uint64_t seed, int eval_samples) {
        const auto pairs = cooper::make_flow_fixture(conditions, latent_dim, content_dim, 0.3, seed);
        cooper::Rng init = cooper::Rng::derive(seed, {0x494E4954ULL});
        cooper::VelocityField field =
            cooper::VelocityField::create(latent_dim, content_dim, hidden, init);
        cooper::FlowTrainConfig cfg;
        cfg.epochs = epochs;
        cfg.batch_size = batch_size;
        cfg.lr = lr;
        cfg.seed = seed;
        const cooper::FlowTrainResult result = cooper::fm_train(field, pairs, cfg);
        py::dict out;
        out["loss_curve"] = result.loss_curve;
        out["eval_loss"] = cooper::fm_eval_loss(field, pairs, eval_samples, seed + 1);
        out["velocity_rel_error"] =
            cooper::optimal_velocity_error(field, pairs, 0.1, 0.8, eval_samples, seed + 2);
        return out;
      },
      py::arg("conditions") = 4, py::arg("latent_dim") = 8, py::arg("content_dim") = 8,
      py::arg("hidden") = std::vector<int>{32}, py::arg("epochs") = 200,
      py::arg("batch_size") = 256, py::arg("lr") = 1.5e-2, py::arg("seed") = 42,
      py::arg("eval_samples") = 1024,
      "Train a velocity field on a fresh fixture; returns the loss curve and eval metrics.");

  // Rewards and training signals.
  m.def(
      "compute_advantages",
      [](const std::vector<double>& rewards, double std_floor) {
        return cooper::compute_advantages(rewards, std_floor);
      },
      py::arg("rewards"), py::arg("std_floor") = 1e-8);
  m.def("clipped_term", &cooper::clipped_term, py::arg("ratio"), py::arg("advantage"),
        py::arg("eps") = 0.2);
  m.def(
      "exploration_reward",
      [](int gain, int sigma, int n, int aux_count, bool used_aux) {
        return cooper::exploration_reward(
            cooper::ExplorationContext{cooper::gain_from_int(gain), sigma, n, aux_count, used_aux});
      },
      py::arg("gain"), py::arg("sigma"), py::arg("n"), py::arg("aux_count"), py::arg("used_aux"));
  m.def(
      "classify_gain",
      [](double acc_raw, double acc_aux, double lambda) {
        return static_cast<int>(cooper::classify_gain(acc_raw, acc_aux, lambda));
      },
      py::arg("acc_raw"), py::arg("acc_aux"), py::arg("lam") = 0.375);
  m.def(
      "match_thinking_generation",
      [](const std::string& text) -> std::optional<std::string> {
        const auto task = cooper::match_thinking_generation(text);
        if (!task) return std::nullopt;
        return cooper::task_name(*task);
      },
      py::arg("text"));
  m.def("match_thinking_answer", &cooper::match_thinking_answer, py::arg("text"));
}
