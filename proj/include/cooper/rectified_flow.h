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

#ifndef COOPER_RECTIFIED_FLOW_H_
#define COOPER_RECTIFIED_FLOW_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cooper/modality_codec.h"
#include "cooper/numerics.h"

namespace cooper {

inline constexpr int kNumTasks = 2;

// Control token (one-hot over the two tasks) plus scene content features.
struct ConditionVector {
  AuxTask control = AuxTask::kDepth;
  Vector content;

  // [onehot(control), content]
  Vector encode() const;
  int encoded_size() const { return kNumTasks + static_cast<int>(content.size()); }
};

// One training visit on the linear path between a noise draw and a target.
struct FlowSample {
  Vector z0;
  Vector z1;
  double t = 0.0;
  Vector zt;
  ConditionVector condition;

  static FlowSample make(Vector z0, Vector z1, double t, ConditionVector condition);
};

enum class SolverMethod { kEuler, kHeun };

struct SolverConfig {
  int steps = 50;
  SolverMethod method = SolverMethod::kEuler;
};

std::string solver_name(SolverMethod method);
SolverMethod parse_solver(const std::string& name);

// v_theta(z_t, t, c) realised as an MLP on concat(z_t, t, encode(c)).
struct VelocityField {
  Mlp net;
  int latent_dim = 8;
  int condition_dim = kNumTasks + 8;

  static VelocityField create(int latent_dim, int content_dim, const std::vector<int>& hidden,
                              Rng& rng);
  void validate() const;

  Vector input(const Vector& z, double t, const Vector& encoded_condition) const;
  Vector operator()(const Vector& z, double t, const Vector& encoded_condition) const;
};

// (1 - t) z0 + t z1.
Vector interpolate_path(const Vector& z0, const Vector& z1, double t);

// Mean over the batch of ||v(z_t, t, c) - (z1 - z0)||^2.
double fm_loss(const VelocityField& field, std::span<const FlowSample> batch);

struct FlowLossGrad {
  double loss = 0.0;
  Mlp grads;
};

FlowLossGrad fm_loss_grad(const VelocityField& field, std::span<const FlowSample> batch);

// A conditioning signal and the latent it should generate.
struct FlowPair {
  ConditionVector condition;
  Vector target;
};

// `conditions` pairs: control alternates depth/seg, content ~ N(0, I) and
// target ~ N(0, scale^2 I), all drawn from `seed`.
std::vector<FlowPair> make_flow_fixture(int conditions, int latent_dim, int content_dim,
                                        double target_scale, std::uint64_t seed);

struct FlowTrainConfig {
  // One epoch visits every pair once (pairs repeat within an epoch when the
  // batch is larger than the dataset), so an epoch is ceil(n / batch) steps.
  int epochs = 5000;
  int batch_size = 1024;
  double lr = 1.5e-2;
  // Cosine decay from lr to lr * final_lr_fraction over the run.
  bool cosine_decay = true;
  double final_lr_fraction = 0.0;
  std::uint64_t seed = 42;
};

struct FlowTrainResult {
  std::vector<double> loss_curve;  // batch loss before each update
  int steps = 0;
};

// Draws fresh z0 ~ N(0, I) and t ~ U[0, 1] on every visit. Throws
// NumericError if the loss becomes non-finite.
FlowTrainResult fm_train(VelocityField& field, std::span<const FlowPair> dataset,
                         const FlowTrainConfig& config);

// Monte-Carlo estimate of the flow-matching loss with a dedicated seed.
double fm_eval_loss(const VelocityField& field, std::span<const FlowPair> dataset, int samples,
                    std::uint64_t seed);

// Aggregate relative error sqrt(sum ||v - v*||^2 / sum ||v*||^2) against the
// optimal field v* = (z1 - z_t) / (1 - t) of single-target conditions, with
// t ~ U[t_lo, t_hi] and z0 ~ N(0, I).
double optimal_velocity_error(const VelocityField& field, std::span<const FlowPair> dataset,
                              double t_lo, double t_hi, int samples, std::uint64_t seed);

using VelocityFn = std::function<Vector(const Vector& z, double t)>;

// Integrates dz/dt = v(z, t) from t = 0 to 1 on the grid t_i = i / T. Throws
// NumericError naming the step if the state becomes non-finite.
Vector integrate(const VelocityFn& velocity, const Vector& z0, const SolverConfig& solver);
Vector integrate(const VelocityField& field, const Vector& z0, const ConditionVector& condition,
                 const SolverConfig& solver);

// Generated latent tagged with the task that produced it.
struct AuxLatent {
  AuxTask task = AuxTask::kDepth;
  Vector latent;
};

AuxLatent generate_aux(const VelocityField& field, const ConditionVector& condition,
                       std::uint64_t seed, const SolverConfig& solver);

// Fixed cosine-basis decoder standing in for the image decoder: pixel value
// tanh(sum_k z_k * basis_k(x, y, channel)). Depth latents are then routed
// through the channel mean, segmentation latents through the palette.
PseudoImage render_latent(const Vector& latent, int width, int height);
PseudoImage decode_aux(const AuxLatent& aux, int width, int height, const Palette& palette);

}  // namespace cooper

#endif  // COOPER_RECTIFIED_FLOW_H_
