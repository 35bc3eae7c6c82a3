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

#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "cooper/pipeline.h"

namespace cooper {
namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// Linear field with zero weights and the given output bias: v = bias.
VelocityField constant_field(const Vector& bias, int content_dim) {
  VelocityField f;
  f.latent_dim = static_cast<int>(bias.size());
  f.condition_dim = kNumTasks + content_dim;
  f.net = Mlp::zeros({f.latent_dim + 1 + f.condition_dim, f.latent_dim});
  f.net.biases[0] = bias;
  return f;
}

TEST(InterpolatePath, Endpoints) {
  const Vector z0 = vec({1.0, -2.0, 3.5});
  const Vector z1 = vec({0.25, 7.0, -1.0});
  EXPECT_EQ(interpolate_path(z0, z1, 0.0), z0);
  EXPECT_EQ(interpolate_path(z0, z1, 1.0), z1);
}

TEST(InterpolatePath, QuarterPoint) {
  EXPECT_EQ(interpolate_path(vec({0.0, 0.0}), vec({2.0, 4.0}), 0.25), vec({0.5, 1.0}));
}

TEST(InterpolatePath, MidpointIsMean) {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const Vector a = rng.normal_vector(6);
    const Vector b = rng.normal_vector(6);
    EXPECT_LT((interpolate_path(a, b, 0.5) - 0.5 * (a + b)).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(InterpolatePath, Rejections) {
  EXPECT_THROW(interpolate_path(vec({0.0}), vec({1.0}), 1.5), std::invalid_argument);
  EXPECT_THROW(interpolate_path(vec({0.0}), vec({1.0}), -0.1), std::invalid_argument);
  EXPECT_THROW(interpolate_path(vec({0.0}), vec({1.0, 2.0}), 0.5), ShapeError);
}

TEST(FmLoss, ExactFieldHasZeroLoss) {
  const Vector z0 = vec({0.5, -1.0});
  const Vector z1 = vec({2.0, 3.0});
  const VelocityField f = constant_field(z1 - z0, 1);
  std::vector<FlowSample> batch;
  for (double t : {0.0, 0.3, 0.9}) {
    batch.push_back(FlowSample::make(z0, z1, t, ConditionVector{AuxTask::kDepth, vec({1.0})}));
  }
  EXPECT_EQ(fm_loss(f, batch), 0.0);
}

TEST(FmLoss, ZeroFieldSquaredNorm) {
  const VelocityField f = constant_field(Vector::Zero(2), 0);
  const std::vector<FlowSample> batch{
      FlowSample::make(vec({0.0, 0.0}), vec({3.0, 4.0}), 0.5, ConditionVector{AuxTask::kDepth, Vector(0)})};
  EXPECT_EQ(fm_loss(f, batch), 25.0);
}

TEST(FmLoss, NonNegativeAndDimensionChecked) {
  Rng rng(17);
  const VelocityField f = VelocityField::create(3, 2, {5}, rng);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<FlowSample> batch{FlowSample::make(
        rng.normal_vector(3), rng.normal_vector(3), rng.uniform(),
        ConditionVector{AuxTask::kSegmentation, rng.normal_vector(2)})};
    EXPECT_GE(fm_loss(f, batch), 0.0);
  }
  std::vector<FlowSample> bad{FlowSample::make(vec({0.0, 0.0}), vec({1.0, 1.0}), 0.5,
                                               ConditionVector{AuxTask::kDepth, vec({0.0, 0.0})})};
  EXPECT_THROW(fm_loss(f, bad), ShapeError);
}

// Property: over random shapes, batches and times the analytic loss gradient
// agrees with central differences.
TEST(FmLoss, GradientMatchesFiniteDifferences) {
  for (std::uint64_t trial = 0; trial < 30; ++trial) {
    Rng rng = Rng::derive(404, {trial});
    const int latent = 1 + static_cast<int>(rng.below(4));
    const int content = static_cast<int>(rng.below(3));
    const VelocityField field =
        VelocityField::create(latent, content, {2 + static_cast<int>(rng.below(6))}, rng);
    std::vector<FlowSample> batch;
    const int n = 1 + static_cast<int>(rng.below(5));
    for (int i = 0; i < n; ++i) {
      batch.push_back(FlowSample::make(
          rng.normal_vector(latent), rng.normal_vector(latent), rng.uniform(),
          ConditionVector{rng.below(2) == 0 ? AuxTask::kDepth : AuxTask::kSegmentation,
                          rng.normal_vector(content)}));
    }
    const FlowLossGrad analytic = fm_loss_grad(field, batch);
    EXPECT_NEAR(analytic.loss, fm_loss(field, batch), 1e-12);
    const Mlp fd = finite_diff_gradient(
        [&](const Mlp& net) {
          VelocityField f = field;
          f.net = net;
          return fm_loss(f, batch);
        },
        field.net, 1e-5);
    EXPECT_LT(max_relative_error(analytic.grads.flatten(), fd.flatten()), 1e-4) << trial;
  }
}

TEST(FmTrain, ZeroEpochsLeavesFieldUnchanged) {
  Rng rng(1);
  VelocityField field = VelocityField::create(4, 2, {8}, rng);
  const Vector before = field.net.flatten();
  const auto pairs = make_flow_fixture(2, 4, 2, 0.3, 5);
  FlowTrainConfig cfg;
  cfg.epochs = 0;
  const FlowTrainResult r = fm_train(field, pairs, cfg);
  EXPECT_EQ(r.steps, 0);
  EXPECT_TRUE(r.loss_curve.empty());
  EXPECT_EQ(field.net.flatten(), before);
}

TEST(FmTrain, DeterministicAndDecreasing) {
  const auto pairs = make_flow_fixture(2, 4, 2, 0.3, 5);
  FlowTrainConfig cfg;
  cfg.epochs = 300;
  cfg.batch_size = 64;
  cfg.lr = 1e-2;
  cfg.seed = 9;
  auto run = [&] {
    Rng rng(1);
    VelocityField field = VelocityField::create(4, 2, {16}, rng);
    FlowTrainResult r = fm_train(field, pairs, cfg);
    return std::make_pair(field.net.flatten(), r.loss_curve);
  };
  const auto a = run();
  const auto b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
  ASSERT_EQ(a.second.size(), 300u);
  double head = 0.0;
  double tail = 0.0;
  for (int i = 0; i < 30; ++i) {
    head += a.second[static_cast<std::size_t>(i)];
    tail += a.second[a.second.size() - 1 - static_cast<std::size_t>(i)];
  }
  EXPECT_LT(tail, 0.5 * head);
}

TEST(FmTrain, DivergenceAborts) {
  const auto pairs = make_flow_fixture(2, 4, 2, 0.3, 5);
  Rng rng(1);
  VelocityField field = VelocityField::create(4, 2, {8}, rng);
  FlowTrainConfig cfg;
  cfg.epochs = 50;
  cfg.batch_size = 8;
  cfg.lr = 1e300;
  EXPECT_THROW(fm_train(field, pairs, cfg), NumericError);
}

TEST(FmTrain, TwoTaskControlsSelectTheirTargets) {
  const auto pairs = make_flow_fixture(2, 4, 3, 1.0, 21);
  ASSERT_NE(pairs[0].condition.control, pairs[1].condition.control);
  Rng rng(2);
  VelocityField field = VelocityField::create(4, 3, {32, 32}, rng);
  FlowTrainConfig cfg;
  cfg.epochs = 1500;
  cfg.batch_size = 128;
  cfg.lr = 1e-2;
  fm_train(field, pairs, cfg);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const AuxLatent out = generate_aux(field, pairs[i].condition, seed, SolverConfig{});
      EXPECT_EQ(out.task, pairs[i].condition.control);
      const double own = (out.latent - pairs[i].target).norm();
      const double other = (out.latent - pairs[1 - i].target).norm();
      EXPECT_LT(own, other);
    }
  }
}

TEST(Integrate, ConstantFieldExactForAnyT) {
  const Vector z0 = vec({0.5, -0.25});
  const Vector z1 = vec({2.5, 1.75});
  const Vector d = z1 - z0;
  for (int steps : {1, 2, 7, 50}) {
    for (SolverMethod m : {SolverMethod::kEuler, SolverMethod::kHeun}) {
      const Vector out = integrate([&](const Vector&, double) { return d; }, z0, {steps, m});
      EXPECT_LT((out - z1).cwiseAbs().maxCoeff(), 1e-14) << steps;
    }
  }
}

TEST(Integrate, SingleEulerStep) {
  const Vector z0 = vec({1.0, 2.0});
  const Vector out =
      integrate([](const Vector& z, double t) { return Vector(3.0 * z.array() + t); }, z0,
                {1, SolverMethod::kEuler});
  EXPECT_EQ(out, vec({4.0, 8.0}));
}

TEST(Integrate, LeftEndpointGrid) {
  std::vector<double> times;
  integrate(
      [&](const Vector& z, double t) {
        times.push_back(t);
        return Vector(Vector::Zero(z.size()));
      },
      vec({0.0}), {4, SolverMethod::kEuler});
  EXPECT_EQ(times, (std::vector<double>{0.0, 0.25, 0.5, 0.75}));
}

TEST(Integrate, ZeroDisplacementField) {
  // v = cos(2 pi t) u integrates to zero net displacement.
  const Vector u = vec({1.0, -2.0, 0.5});
  const Vector z0 = vec({0.3, 0.1, -0.7});
  auto v = [&](const Vector&, double t) { return Vector(std::cos(2.0 * std::numbers::pi * t) * u); };
  auto err = [&](int steps, SolverMethod m) { return (integrate(v, z0, {steps, m}) - z0).norm(); };
  // A z-independent field is sampled at the same grid by both methods, so
  // Euler's left-endpoint sum is exact up to rounding here.
  EXPECT_LT(err(10, SolverMethod::kEuler), 1e-14);
  EXPECT_LT(err(10, SolverMethod::kHeun), 1e-14);
}

TEST(Integrate, ConvergenceOrders) {
  const SolverOrderReport euler = measure_solver_order(SolverMethod::kEuler, {10, 20, 40});
  const SolverOrderReport heun = measure_solver_order(SolverMethod::kHeun, {10, 20, 40});
  for (double o : euler.orders) EXPECT_GE(o, 0.9);
  for (double o : heun.orders) EXPECT_GE(o, 1.8);
  // Independent check: the exact solution of dz/dt = cos(2 pi t) z is
  // z0 exp(sin(2 pi t) / 2 pi), which returns to z0 at t = 1.
  const Vector z0 = vec({1.0, -0.5});
  auto v = [](const Vector& z, double t) { return Vector(std::cos(2.0 * std::numbers::pi * t) * z); };
  const double e10 = (integrate(v, z0, {10, SolverMethod::kEuler}) - z0).norm();
  const double e20 = (integrate(v, z0, {20, SolverMethod::kEuler}) - z0).norm();
  EXPECT_NEAR(e10 / e20, 2.0, 0.25);
}

TEST(Integrate, NonFiniteStateNamesStep) {
  auto v = [](const Vector& z, double) { return Vector(1e300 * z); };
  try {
    integrate(v, vec({1.0}), {50, SolverMethod::kEuler});
    FAIL() << "expected divergence";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("step"), std::string::npos);
  }
  EXPECT_THROW(integrate(v, vec({1.0}), {0, SolverMethod::kEuler}), std::invalid_argument);
}

TEST(GenerateAux, DeterministicPerSeed) {
  Rng rng(6);
  const VelocityField field = VelocityField::create(4, 2, {8}, rng);
  const ConditionVector c{AuxTask::kSegmentation, vec({0.1, -0.2})};
  const AuxLatent a = generate_aux(field, c, 12, {});
  const AuxLatent b = generate_aux(field, c, 12, {});
  const AuxLatent other = generate_aux(field, c, 13, {});
  EXPECT_EQ(a.latent, b.latent);
  EXPECT_NE(a.latent, other.latent);
  EXPECT_EQ(a.task, AuxTask::kSegmentation);
}

TEST(Condition, OneHotControlThenContent) {
  const ConditionVector c{AuxTask::kSegmentation, vec({5.0, 6.0})};
  EXPECT_EQ(c.encode(), vec({0.0, 1.0, 5.0, 6.0}));
  EXPECT_EQ(c.encoded_size(), 4);
}

TEST(Solver, ParseNames) {
  EXPECT_EQ(parse_solver("euler"), SolverMethod::kEuler);
  EXPECT_EQ(parse_solver("heun"), SolverMethod::kHeun);
  EXPECT_THROW(parse_solver("rk4"), std::invalid_argument);
}

TEST(Fixture, DeterministicAlternatingControls) {
  const auto a = make_flow_fixture(4, 8, 8, 0.3, 42);
  const auto b = make_flow_fixture(4, 8, 8, 0.3, 42);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].target, b[i].target);
    EXPECT_EQ(a[i].condition.content, b[i].condition.content);
    EXPECT_EQ(a[i].condition.control, i % 2 == 0 ? AuxTask::kDepth : AuxTask::kSegmentation);
  }
}

TEST(RenderLatent, InRangeAndDeterministic) {
  Rng rng(2);
  const Vector z = rng.normal_vector(8);
  const PseudoImage a = render_latent(z, 16, 12);
  a.validate();
  EXPECT_EQ(a.data, render_latent(z, 16, 12).data);
  const PseudoImage seg = decode_aux(AuxLatent{AuxTask::kSegmentation, z}, 8, 8, make_palette(150));
  seg.validate();
}

}  // namespace
}  // namespace cooper
