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

#include "cooper/numerics.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace cooper {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::string shape_string(const std::vector<int>& sizes) {
  std::string out = "[";
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i > 0) out += ",";
    out += std::to_string(sizes[i]);
  }
  return out + "]";
}

void check_cache(const Mlp& params, const MlpCache& cache) {
  if (cache.activations.size() != params.weights.size() + 1) {
    throw ShapeError("stale cache: layer count does not match parameters");
  }
  for (std::size_t l = 0; l < cache.activations.size(); ++l) {
    if (cache.activations[l].rows() != params.layer_sizes[l]) {
      throw ShapeError("stale cache: activation " + std::to_string(l) + " has " +
                       std::to_string(cache.activations[l].rows()) + " rows, expected " +
                       std::to_string(params.layer_sizes[l]));
    }
  }
}

}  // namespace

bool all_finite(const Vector& v) { return v.allFinite(); }
bool all_finite(const Matrix& m) { return m.allFinite(); }

// ----------------------------------------------------------------------------
// Rng

std::uint64_t Rng::mix(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Rng Rng::derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t key = mix(seed);
  for (std::uint64_t part : path) key = mix(key ^ mix(part * kGolden + 1));
  return Rng(key);
}

std::uint64_t Rng::next_u64() {
  ++counter_;
  return mix(key_ + counter_ * kGolden);
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (spare_normal_) {
    double z = *spare_normal_;
    spare_normal_.reset();
    return z;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(theta);
  return r * std::cos(theta);
}

Vector Rng::normal_vector(int n) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = normal();
  return v;
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below: empty range");
  // Rejection keeps the draw unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

// ----------------------------------------------------------------------------
// Mlp

Mlp Mlp::zeros(const std::vector<int>& layer_sizes) {
  if (layer_sizes.size() < 2) throw ShapeError("an MLP needs at least two layer sizes");
  for (int s : layer_sizes) {
    if (s <= 0) throw ShapeError("layer sizes must be positive: " + shape_string(layer_sizes));
  }
  Mlp mlp;
  mlp.layer_sizes = layer_sizes;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    mlp.weights.push_back(Matrix::Zero(layer_sizes[l + 1], layer_sizes[l]));
    mlp.biases.push_back(Vector::Zero(layer_sizes[l + 1]));
  }
  return mlp;
}

Mlp Mlp::random(const std::vector<int>& layer_sizes, Rng& rng, double gain) {
  Mlp mlp = zeros(layer_sizes);
  for (int l = 0; l < mlp.num_layers(); ++l) {
    const double limit =
        gain * std::sqrt(6.0 / static_cast<double>(layer_sizes[l] + layer_sizes[l + 1]));
    Matrix& w = mlp.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = limit * (2.0 * rng.uniform() - 1.0);
    }
  }
  return mlp;
}

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    n += static_cast<std::size_t>(layer_sizes[l]) * layer_sizes[l + 1] + layer_sizes[l + 1];
  }
  return n;
}

Vector Mlp::flatten() const {
  Vector flat(static_cast<Eigen::Index>(param_count()));
  Eigen::Index pos = 0;
  for (int l = 0; l < num_layers(); ++l) {
    const Matrix& w = weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat[pos++] = w(r, c);
    }
    flat.segment(pos, biases[l].size()) = biases[l];
    pos += biases[l].size();
  }
  return flat;
}

void Mlp::assign(const Vector& flat) {
  if (static_cast<std::size_t>(flat.size()) != param_count()) {
    throw ShapeError("flat parameter vector has " + std::to_string(flat.size()) +
                     " entries, network " + shape_string(layer_sizes) + " needs " +
                     std::to_string(param_count()));
  }
  Eigen::Index pos = 0;
  for (int l = 0; l < num_layers(); ++l) {
    Matrix& w = weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = flat[pos++];
    }
    biases[l] = flat.segment(pos, biases[l].size());
    pos += biases[l].size();
  }
}

void Mlp::validate() const {
  if (layer_sizes.size() < 2) throw ShapeError("an MLP needs at least two layer sizes");
  if (weights.size() + 1 != layer_sizes.size() || biases.size() + 1 != layer_sizes.size()) {
    throw ShapeError("layer count mismatch for " + shape_string(layer_sizes));
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != layer_sizes[l + 1] || weights[l].cols() != layer_sizes[l] ||
        biases[l].size() != layer_sizes[l + 1]) {
      throw ShapeError("layer " + std::to_string(l) + " disagrees with sizes " +
                       shape_string(layer_sizes));
    }
  }
}

bool Mlp::same_shape(const Mlp& other) const { return layer_sizes == other.layer_sizes; }

// ----------------------------------------------------------------------------
// Forward / backward

namespace {

// tanh through a single vectorised exp. Eigen evaluates tanh on doubles one
// scalar at a time, which dominated training time.
Matrix tanh_activation(const Matrix& z) {
  const Eigen::ArrayXXd e = (-2.0 * z.array().abs()).exp();
  return (z.array().sign() * (1.0 - e) / (1.0 + e)).matrix();
}

}  // namespace

MlpBatchForward mlp_forward_batch(const Mlp& params, const Matrix& inputs) {
  if (inputs.rows() != params.input_size()) {
    throw ShapeError("input has " + std::to_string(inputs.rows()) + " rows, network expects " +
                     std::to_string(params.input_size()));
  }
  MlpBatchForward result;
  auto& acts = result.cache.activations;
  acts.reserve(params.weights.size() + 1);
  acts.push_back(inputs);
  const int last = params.num_layers() - 1;
  for (int l = 0; l <= last; ++l) {
    Matrix z = params.weights[l] * acts.back();
    z.colwise() += params.biases[l];
    if (l < last) z = tanh_activation(z);
    acts.push_back(std::move(z));
  }
  result.output = acts.back();
  return result;
}

MlpForward mlp_forward(const Mlp& params, const Vector& input) {
  MlpBatchForward batch = mlp_forward_batch(params, input);
  return MlpForward{batch.output.col(0), std::move(batch.cache)};
}

Vector mlp_apply(const Mlp& params, const Vector& input) {
  if (input.size() != params.input_size()) {
    throw ShapeError("input has " + std::to_string(input.size()) + " entries, network expects " +
                     std::to_string(params.input_size()));
  }
  Vector a = input;
  const int last = params.num_layers() - 1;
  for (int l = 0; l <= last; ++l) {
    Matrix z = params.weights[l] * a + params.biases[l];
    a = (l < last) ? Vector(tanh_activation(z)) : Vector(z);
  }
  return a;
}

MlpBatchBackward mlp_backward_batch(const Mlp& params, const MlpCache& cache,
                                    const Matrix& output_grads) {
  check_cache(params, cache);
  const Eigen::Index batch = cache.activations.front().cols();
  if (output_grads.rows() != params.output_size() || output_grads.cols() != batch) {
    throw ShapeError("output gradient shape does not match the cached forward pass");
  }
  MlpBatchBackward result{params.zeros_like(), Matrix()};
  Matrix delta = output_grads;
  for (int l = params.num_layers() - 1; l >= 0; --l) {
    const Matrix& a_in = cache.activations[l];
    result.param_grads.weights[l].noalias() = delta * a_in.transpose();
    result.param_grads.biases[l] = delta.rowwise().sum();
    Matrix back = params.weights[l].transpose() * delta;
    if (l > 0) {
      back.array() *= 1.0 - a_in.array().square();
      delta = std::move(back);
    } else {
      result.input_grad = std::move(back);
    }
  }
  return result;
}

MlpBackward mlp_backward(const Mlp& params, const MlpCache& cache, const Vector& output_grad) {
  MlpBatchBackward batch = mlp_backward_batch(params, cache, output_grad);
  return MlpBackward{std::move(batch.param_grads), batch.input_grad.col(0)};
}

// ----------------------------------------------------------------------------
// Finite differences

Vector finite_diff_gradient(const std::function<double(const Vector&)>& f, const Vector& point,
                            double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite difference step must be positive");
  Vector x = point;
  Vector grad(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f(x);
    x[i] = saved - h;
    const double down = f(x);
    x[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("non-finite function value at coordinate " + std::to_string(i));
    }
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

Mlp finite_diff_gradient(const std::function<double(const Mlp&)>& f, const Mlp& params,
                         double h) {
  Mlp probe = params;
  Vector grad = finite_diff_gradient(
      [&](const Vector& flat) {
        probe.assign(flat);
        return f(probe);
      },
      params.flatten(), h);
  Mlp out = params.zeros_like();
  out.assign(grad);
  return out;
}

double max_relative_error(const Vector& a, const Vector& b, double floor) {
  if (a.size() != b.size()) throw ShapeError("max_relative_error: size mismatch");
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

// ----------------------------------------------------------------------------
// Softmax and sampling

Vector log_softmax(const Vector& logits) {
  if (logits.size() == 0) throw std::invalid_argument("softmax of an empty logit vector");
  Eigen::Index arg = 0;
  const double top = logits.maxCoeff(&arg);
  double rest = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (i != arg) rest += std::exp(logits[i] - top);
  }
  return (logits.array() - top) - std::log1p(rest);
}

Vector softmax(const Vector& logits) { return log_softmax(logits).array().exp(); }

double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

SampledIndex softmax_sample(const Vector& logits, double temperature, Rng& rng) {
  if (logits.size() == 0) throw std::invalid_argument("softmax_sample: empty logits");
  if (!(temperature > 0.0)) throw std::invalid_argument("softmax_sample: temperature must be > 0");
  if (!logits.allFinite()) throw NumericError("softmax_sample: non-finite logits");
  const Vector logp = log_softmax(logits / temperature);
  const double u = rng.uniform();
  double cumulative = 0.0;
  int chosen = -1;
  for (Eigen::Index i = 0; i < logp.size(); ++i) {
    const double p = std::exp(logp[i]);
    if (p <= 0.0) continue;
    chosen = static_cast<int>(i);
    cumulative += p;
    if (u < cumulative) break;
  }
  return SampledIndex{chosen, logp[chosen]};
}

SampledIndex softmax_sample(const Vector& logits, double temperature, std::uint64_t seed) {
  Rng rng(seed);
  return softmax_sample(logits, temperature, rng);
}

// ----------------------------------------------------------------------------
// Adam

OptState OptState::for_size(std::size_t n) {
  const auto len = static_cast<Eigen::Index>(n);
  return OptState{Vector::Zero(len), Vector::Zero(len), 0};
}

void adam_step(Vector& params, const Vector& grads, OptState& state, double lr,
               const AdamConfig& config) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw ShapeError("adam_step: parameter, gradient and moment sizes differ");
  }
  if (!grads.allFinite()) throw NumericError("adam_step: non-finite gradient");
  state.step += 1;
  const double t = static_cast<double>(state.step);
  state.m = config.beta1 * state.m + (1.0 - config.beta1) * grads;
  state.v = config.beta2 * state.v + (1.0 - config.beta2) * grads.cwiseProduct(grads);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  params.array() -=
      lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + config.eps);
}

void adam_step(Mlp& params, const Mlp& grads, OptState& state, double lr,
               const AdamConfig& config) {
  if (!params.same_shape(grads)) throw ShapeError("adam_step: gradient shape differs");
  Vector flat = params.flatten();
  adam_step(flat, grads.flatten(), state, lr, config);
  params.assign(flat);
}

}  // namespace cooper
