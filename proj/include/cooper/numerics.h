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

#ifndef COOPER_NUMERICS_H_
#define COOPER_NUMERICS_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cooper {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Raised when operand shapes disagree (layer sizes, vector lengths, stale
// caches). Maps to exit code 2 at the CLI boundary.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a computation produces or receives NaN/Inf. Maps to exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

bool all_finite(const Vector& v);
bool all_finite(const Matrix& m);

// Counter-based generator: the n-th draw is a pure function of (key, n), so
// streams derived from (seed, item, rollout) are independent of scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : key_(mix(key)) {}

  // Stream keyed by a seed plus a path of identifiers, e.g. {item_id, index}.
  static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  // Standard normal via Box-Muller.
  double normal();
  Vector normal_vector(int n);
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  static std::uint64_t mix(std::uint64_t x);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::optional<double> spare_normal_;
};

// Feed-forward network: tanh on hidden layers, identity on the output layer.
// weights[l] has shape (layer_sizes[l + 1], layer_sizes[l]).
struct Mlp {
  std::vector<int> layer_sizes;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static Mlp zeros(const std::vector<int>& layer_sizes);
  // Uniform Glorot initialisation scaled by `gain`; biases start at zero.
  static Mlp random(const std::vector<int>& layer_sizes, Rng& rng, double gain = 1.0);

  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  int num_layers() const { return static_cast<int>(weights.size()); }
  std::size_t param_count() const;

  // Flat layout: for each layer, weights row-major followed by biases.
  Vector flatten() const;
  void assign(const Vector& flat);
  // Same-shape container of zeros, used for gradient accumulators.
  Mlp zeros_like() const { return zeros(layer_sizes); }

  // Throws ShapeError if matrices disagree with layer_sizes.
  void validate() const;
  bool same_shape(const Mlp& other) const;
};

// Activations per layer: activations[0] is the input, activations.back() the
// output. Column j of every matrix belongs to sample j of the batch.
struct MlpCache {
  std::vector<Matrix> activations;
};

struct MlpForward {
  Vector output;
  MlpCache cache;
};

struct MlpBatchForward {
  Matrix output;
  MlpCache cache;
};

struct MlpBackward {
  Mlp param_grads;
  Vector input_grad;
};

struct MlpBatchBackward {
  Mlp param_grads;  // summed over the batch
  Matrix input_grad;
};

MlpForward mlp_forward(const Mlp& params, const Vector& input);
MlpBatchForward mlp_forward_batch(const Mlp& params, const Matrix& inputs);

// Gradients of <output_grad, output> with respect to parameters and input.
MlpBackward mlp_backward(const Mlp& params, const MlpCache& cache, const Vector& output_grad);
MlpBatchBackward mlp_backward_batch(const Mlp& params, const MlpCache& cache,
                                    const Matrix& output_grads);

// Output of the network without keeping a cache.
Vector mlp_apply(const Mlp& params, const Vector& input);

// Central differences (f(p + h e_i) - f(p - h e_i)) / 2h for every coordinate.
Vector finite_diff_gradient(const std::function<double(const Vector&)>& f, const Vector& point,
                            double h);
Mlp finite_diff_gradient(const std::function<double(const Mlp&)>& f, const Mlp& params, double h);

// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor); the floor keeps near-zero
// coordinates from dominating.
double max_relative_error(const Vector& a, const Vector& b, double floor = 1e-6);

Vector log_softmax(const Vector& logits);
Vector softmax(const Vector& logits);
// log(sigmoid(x)) computed without overflow.
double log_sigmoid(double x);
double sigmoid(double x);

struct SampledIndex {
  int index = 0;
  double log_prob = 0.0;
};

// Draws from softmax(logits / temperature). log_prob is the exact log
// probability of the drawn index under that distribution.
SampledIndex softmax_sample(const Vector& logits, double temperature, Rng& rng);
SampledIndex softmax_sample(const Vector& logits, double temperature, std::uint64_t seed);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Moment accumulators follow the flat layout of the parameters they update.
struct OptState {
  Vector m;
  Vector v;
  std::int64_t step = 0;

  static OptState for_size(std::size_t n);
  static OptState for_params(const Mlp& params) { return for_size(params.param_count()); }
};

void adam_step(Vector& params, const Vector& grads, OptState& state, double lr,
               const AdamConfig& config = {});
void adam_step(Mlp& params, const Mlp& grads, OptState& state, double lr,
               const AdamConfig& config = {});

}  // namespace cooper

#endif  // COOPER_NUMERICS_H_
