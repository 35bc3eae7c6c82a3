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

#include "cooper/rectified_flow.h"

#include <algorithm>
#include <malloc.h>
#include <mutex>
#include <cmath>
#include <numbers>
#include <numeric>

namespace cooper {

Vector ConditionVector::encode() const {
  Vector out = Vector::Zero(encoded_size());
  out[static_cast<int>(control)] = 1.0;
  out.tail(content.size()) = content;
  return out;
}

FlowSample FlowSample::make(Vector z0, Vector z1, double t, ConditionVector condition) {
  FlowSample s;
  s.zt = interpolate_path(z0, z1, t);
  s.z0 = std::move(z0);
  s.z1 = std::move(z1);
  s.t = t;
  s.condition = std::move(condition);
  return s;
}

std::string solver_name(SolverMethod method) {
  return method == SolverMethod::kEuler ? "euler" : "heun";
}

SolverMethod parse_solver(const std::string& name) {
  if (name == "euler") return SolverMethod::kEuler;
  if (name == "heun") return SolverMethod::kHeun;
  throw std::invalid_argument("unknown solver '" + name + "' (expected euler or heun)");
}

VelocityField VelocityField::create(int latent_dim, int content_dim,
                                    const std::vector<int>& hidden, Rng& rng) {
  if (latent_dim <= 0 || content_dim < 0) throw ShapeError("invalid latent/content dimension");
  VelocityField field;
  field.latent_dim = latent_dim;
  field.condition_dim = kNumTasks + content_dim;
  std::vector<int> sizes{latent_dim + 1 + field.condition_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(latent_dim);
  field.net = Mlp::random(sizes, rng);
  return field;
}

void VelocityField::validate() const {
  net.validate();
  if (net.input_size() != latent_dim + 1 + condition_dim || net.output_size() != latent_dim) {
    throw ShapeError("velocity network does not map latent+1+condition -> latent");
  }
}

Vector VelocityField::input(const Vector& z, double t, const Vector& encoded_condition) const {
  if (z.size() != latent_dim || encoded_condition.size() != condition_dim) {
    throw ShapeError("velocity input: latent or condition dimension mismatch");
  }
  Vector x(latent_dim + 1 + condition_dim);
  x << z, t, encoded_condition;
  return x;
}

Vector VelocityField::operator()(const Vector& z, double t, const Vector& encoded_condition) const {
  return mlp_apply(net, input(z, t, encoded_condition));
}

Vector interpolate_path(const Vector& z0, const Vector& z1, double t) {
  if (z0.size() != z1.size()) throw ShapeError("interpolate_path: endpoint dimensions differ");
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("interpolate_path: t outside [0, 1]");
  return (1.0 - t) * z0 + t * z1;
}

namespace {

struct BatchMatrices {
  Matrix inputs;
  Matrix targets;  // z1 - z0 per column
};

BatchMatrices assemble(const VelocityField& field, std::span<const FlowSample> batch) {
  if (batch.empty()) throw std::invalid_argument("flow-matching batch is empty");
  const int in = field.latent_dim + 1 + field.condition_dim;
  BatchMatrices m{Matrix(in, static_cast<Eigen::Index>(batch.size())),
                  Matrix(field.latent_dim, static_cast<Eigen::Index>(batch.size()))};
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const FlowSample& s = batch[j];
    if (s.z0.size() != field.latent_dim || s.z1.size() != field.latent_dim ||
        s.zt.size() != field.latent_dim) {
      throw ShapeError("flow sample latent dimension does not match the field");
    }
    const auto col = static_cast<Eigen::Index>(j);
    m.inputs.col(col) = field.input(s.zt, s.t, s.condition.encode());
    m.targets.col(col) = s.z1 - s.z0;
  }
  return m;
}

}  // namespace

double fm_loss(const VelocityField& field, std::span<const FlowSample> batch) {
  const BatchMatrices m = assemble(field, batch);
  const Matrix out = mlp_forward_batch(field.net, m.inputs).output;
  return (out - m.targets).squaredNorm() / static_cast<double>(batch.size());
}

FlowLossGrad fm_loss_grad(const VelocityField& field, std::span<const FlowSample> batch) {
  const BatchMatrices m = assemble(field, batch);
  MlpBatchForward fwd = mlp_forward_batch(field.net, m.inputs);
  const Matrix residual = fwd.output - m.targets;
  const double n = static_cast<double>(batch.size());
  FlowLossGrad result;
  result.loss = residual.squaredNorm() / n;
  result.grads = mlp_backward_batch(field.net, fwd.cache, (2.0 / n) * residual).param_grads;
  return result;
}

std::vector<FlowPair> make_flow_fixture(int conditions, int latent_dim, int content_dim,
                                        double target_scale, std::uint64_t seed) {
  if (conditions < 1 || latent_dim < 1 || content_dim < 0) {
    throw std::invalid_argument("make_flow_fixture: sizes must be positive");
  }
  std::vector<FlowPair> pairs;
  for (int k = 0; k < conditions; ++k) {
    Rng rng = Rng::derive(seed, {0x46495854ULL, static_cast<std::uint64_t>(k)});
    FlowPair p;
    p.condition.control = k % 2 == 0 ? AuxTask::kDepth : AuxTask::kSegmentation;
    p.condition.content = rng.normal_vector(content_dim);
    p.target = target_scale * rng.normal_vector(latent_dim);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

namespace {

// Cycles through the dataset in reshuffled passes.
class PairStream {
 public:
  PairStream(std::size_t n, Rng rng) : order_(n), rng_(rng) { reshuffle(); }

  std::size_t next() {
    if (pos_ == order_.size()) reshuffle();
    return order_[pos_++];
  }

 private:
  void reshuffle() {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    for (std::size_t i = order_.size(); i > 1; --i) {
      std::swap(order_[i - 1], order_[rng_.below(i)]);
    }
    pos_ = 0;
  }

  std::vector<std::size_t> order_;
  Rng rng_;
  std::size_t pos_ = 0;
};

}  // namespace

FlowTrainResult fm_train(VelocityField& field, std::span<const FlowPair> dataset,
                         const FlowTrainConfig& config) {
  if (dataset.empty()) throw std::invalid_argument("fm_train: empty dataset");
  if (config.batch_size <= 0 || config.epochs < 0) {
    throw std::invalid_argument("fm_train: batch_size must be > 0 and epochs >= 0");
  }
  for (const FlowPair& p : dataset) {
    if (p.target.size() != field.latent_dim ||
        p.condition.encoded_size() != field.condition_dim) {
      throw ShapeError("fm_train: dataset pair does not match the field dimensions");
    }
  }
  // Batch activations are a few MB each; keep them on the heap instead of a
  // fresh mmap per step, which otherwise costs a page fault per 4 KB touched.
  static std::once_flag allocator_tuned;
  std::call_once(allocator_tuned, [] {
    mallopt(M_MMAP_THRESHOLD, 64 << 20);
    mallopt(M_TRIM_THRESHOLD, 128 << 20);
  });
  const auto batch = static_cast<std::size_t>(config.batch_size);
  const std::size_t steps_per_epoch = (dataset.size() + batch - 1) / batch;
  const std::size_t total = steps_per_epoch * static_cast<std::size_t>(config.epochs);

  PairStream stream(dataset.size(), Rng::derive(config.seed, {0x5041495253ULL}));
  Rng noise = Rng::derive(config.seed, {0x4E4F495345ULL});
  OptState opt = OptState::for_params(field.net);
  std::vector<FlowSample> samples(batch);

  FlowTrainResult result;
  result.loss_curve.reserve(total);
  for (std::size_t step = 0; step < total; ++step) {
    for (std::size_t j = 0; j < batch; ++j) {
      const FlowPair& pair = dataset[stream.next()];
      Vector z0 = noise.normal_vector(field.latent_dim);
      const double t = noise.uniform();
      samples[j] = FlowSample::make(std::move(z0), pair.target, t, pair.condition);
    }
    FlowLossGrad lg = fm_loss_grad(field, samples);
    if (!std::isfinite(lg.loss)) {
      throw NumericError("flow-matching loss diverged at step " + std::to_string(step));
    }
    result.loss_curve.push_back(lg.loss);
    double lr = config.lr;
    if (config.cosine_decay) {
      const double progress = static_cast<double>(step) / static_cast<double>(total);
      const double f = config.final_lr_fraction;
      lr *= f + (1.0 - f) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
    }
    adam_step(field.net, lg.grads, opt, lr);
  }
  result.steps = static_cast<int>(total);
  return result;
}

double fm_eval_loss(const VelocityField& field, std::span<const FlowPair> dataset, int samples,
                    std::uint64_t seed) {
  if (dataset.empty() || samples <= 0) throw std::invalid_argument("fm_eval_loss: nothing to do");
  Rng rng(seed);
  std::vector<FlowSample> batch;
  batch.reserve(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) {
    const FlowPair& pair = dataset[static_cast<std::size_t>(i) % dataset.size()];
    Vector z0 = rng.normal_vector(field.latent_dim);
    const double t = rng.uniform();
    batch.push_back(FlowSample::make(std::move(z0), pair.target, t, pair.condition));
  }
  return fm_loss(field, batch);
}

double optimal_velocity_error(const VelocityField& field, std::span<const FlowPair> dataset,
                              double t_lo, double t_hi, int samples, std::uint64_t seed) {
  if (dataset.empty() || samples <= 0) throw std::invalid_argument("optimal_velocity_error: nothing to do");
  if (!(0.0 <= t_lo && t_lo <= t_hi && t_hi < 1.0)) {
    throw std::invalid_argument("optimal_velocity_error: need 0 <= t_lo <= t_hi < 1");
  }
  Rng rng(seed);
  double err = 0.0;
  double norm = 0.0;
  for (int i = 0; i < samples; ++i) {
    const FlowPair& pair = dataset[static_cast<std::size_t>(i) % dataset.size()];
    const Vector z0 = rng.normal_vector(field.latent_dim);
    const double t = t_lo + (t_hi - t_lo) * rng.uniform();
    const Vector zt = interpolate_path(z0, pair.target, t);
    const Vector optimal = (pair.target - zt) / (1.0 - t);
    err += (field(zt, t, pair.condition.encode()) - optimal).squaredNorm();
    norm += optimal.squaredNorm();
  }
  return std::sqrt(err / norm);
}

Vector integrate(const VelocityFn& velocity, const Vector& z0, const SolverConfig& solver) {
  if (solver.steps < 1) throw std::invalid_argument("solver needs at least one step");
  const double h = 1.0 / solver.steps;
  Vector z = z0;
  for (int i = 0; i < solver.steps; ++i) {
    const double t = static_cast<double>(i) / solver.steps;
    const Vector k1 = velocity(z, t);
    if (solver.method == SolverMethod::kEuler) {
      z += h * k1;
    } else {
      const Vector predictor = z + h * k1;
      const double t_next = static_cast<double>(i + 1) / solver.steps;
      const Vector k2 = velocity(predictor, t_next);
      z += 0.5 * h * (k1 + k2);
    }
    if (!z.allFinite()) {
      throw NumericError("ODE state became non-finite at step " + std::to_string(i));
    }
  }
  return z;
}

Vector integrate(const VelocityField& field, const Vector& z0, const ConditionVector& condition,
                 const SolverConfig& solver) {
  const Vector c = condition.encode();
  return integrate([&](const Vector& z, double t) { return field(z, t, c); }, z0, solver);
}

AuxLatent generate_aux(const VelocityField& field, const ConditionVector& condition,
                       std::uint64_t seed, const SolverConfig& solver) {
  Rng rng = Rng::derive(seed, {0x41555821ULL});
  const Vector z0 = rng.normal_vector(field.latent_dim);
  return AuxLatent{condition.control, integrate(field, z0, condition, solver)};
}

PseudoImage render_latent(const Vector& latent, int width, int height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("render size must be positive");
  PseudoImage img = PseudoImage::zeros(width, height);
  const double pi = std::numbers::pi;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * width + x;
      for (int ch = 0; ch < 3; ++ch) {
        double acc = 0.0;
        for (Eigen::Index k = 0; k < latent.size(); ++k) {
          const double fx = static_cast<double>(k % 3);
          const double fy = static_cast<double>((k / 3) % 3);
          const double basis = std::cos(pi * fx * (x + 0.5) / width) *
                               std::cos(pi * fy * (y + 0.5) / height) *
                               std::cos(2.0 * pi * static_cast<double>(k + ch) / 3.0);
          acc += latent[k] * basis;
        }
        img.at(p, ch) = std::tanh(acc);
      }
    }
  }
  return img;
}

PseudoImage decode_aux(const AuxLatent& aux, int width, int height, const Palette& palette) {
  const PseudoImage raw = render_latent(aux.latent, width, height);
  if (aux.task == AuxTask::kSegmentation) return seg_to_pseudo(pseudo_to_seg(raw, palette), palette);
  const NormalizedDepth depth = pseudo_to_depth(raw);
  PseudoImage out = PseudoImage::zeros(width, height);
  for (std::size_t p = 0; p < out.pixel_count(); ++p) {
    for (int c = 0; c < 3; ++c) out.at(p, c) = depth.values[p];
  }
  return out;
}

}  // namespace cooper
