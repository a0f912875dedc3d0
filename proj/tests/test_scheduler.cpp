/* Copyright 2026 The seqdiff Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "seqdiff/scheduler.hpp"

namespace seqdiff {
namespace {

Tensor<double> normal_tensor(const Shape& shape, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Tensor<double> t(shape);
  for (auto& v : t.data()) v = n(rng);
  return t;
}

TEST(Schedule, ConstantBetaProducts) {
  const auto p = make_schedule(3, 0.1, 0.1);
  double prod = 1.0;
  const double expect[3] = {0.9, 0.81, 0.729};
  for (std::size_t t = 1; t <= 3; ++t) {
    prod *= 1.0 - 0.1;
    EXPECT_NEAR(p.alpha_bar[t], prod, 1e-15);
    EXPECT_NEAR(p.alpha_bar[t], expect[t - 1], 1e-12);
    EXPECT_DOUBLE_EQ(p.beta[t], 0.1);
  }
}

TEST(Schedule, SingleStep) {
  const auto p = make_schedule(1, 0.3, 0.5);
  EXPECT_DOUBLE_EQ(p.alpha_bar[1], 1.0 - 0.3);
  EXPECT_EQ(p.posterior_variance[1], 0.0);
}

TEST(Schedule, LinearInterpolationAndInvariants) {
  const auto p = make_schedule(50, 1e-4, 0.2);
  EXPECT_DOUBLE_EQ(p.beta[1], 1e-4);
  EXPECT_NEAR(p.beta[50], 0.2, 1e-15);
  EXPECT_EQ(p.alpha_bar[0], 1.0);
  for (std::size_t t = 1; t <= 50; ++t) {
    EXPECT_LT(p.alpha_bar[t], p.alpha_bar[t - 1]);
    EXPECT_GT(p.alpha_bar[t], 0.0);
    EXPECT_NEAR(p.alpha_bar[t], p.alpha_bar[t - 1] * (1 - p.beta[t]), 1e-15);
    EXPECT_NEAR(p.beta[t] - p.beta[t > 1 ? t - 1 : 1], t > 1 ? (0.2 - 1e-4) / 49 : 0.0, 1e-12);
  }
}

TEST(Schedule, RejectsBadRanges) {
  EXPECT_THROW(make_schedule(0, 0.1, 0.2), std::invalid_argument);
  EXPECT_THROW(make_schedule(10, 0.0, 0.2), std::invalid_argument);
  EXPECT_THROW(make_schedule(10, 0.3, 0.2), std::invalid_argument);
  EXPECT_THROW(make_schedule(10, 0.1, 1.0), std::invalid_argument);
}

TEST(QSample, NoiselessScheduleKeepsLatent) {
  const auto p = SchedulerParams::from_betas(std::vector<double>(5, 0.0));
  std::mt19937_64 rng(1);
  const auto z0 = normal_tensor({2, 3}, rng), eps = normal_tensor({2, 3}, rng);
  for (std::size_t t = 1; t <= 5; ++t) EXPECT_EQ(q_sample(z0, t, eps, p), z0);
}

TEST(QSample, ZeroNoiseScalesBySqrtAlphaBar) {
  // alpha_bar_2 = 0.5 * 0.5 = 0.25
  const auto p = SchedulerParams::from_betas({0.5, 0.5});
  Tensor<double> z0(Shape{3}, std::vector<double>{1, -2, 4});
  const auto zt = q_sample(z0, 2, Tensor<double>(Shape{3}), p);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(zt[i], 0.5 * z0[i]);
}

TEST(QSample, HandValue) {
  const auto p = make_schedule(10, 0.02, 0.02);
  const auto z1 = q_sample(Tensor<double>::scalar(1.0), 1, Tensor<double>::scalar(1.0), p);
  EXPECT_NEAR(z1[0], std::sqrt(0.98) + std::sqrt(0.02), 1e-12);
  EXPECT_NEAR(z1[0], 1.13137, 1e-5);
}

TEST(QSample, Errors) {
  const auto p = make_schedule(5, 0.1, 0.2);
  Tensor<double> z(Shape{2});
  EXPECT_THROW(q_sample(z, 0, z, p), std::out_of_range);
  EXPECT_THROW(q_sample(z, 6, z, p), std::out_of_range);
  EXPECT_THROW(q_sample(z, 1, Tensor<double>(Shape{3}), p), ShapeError);
}

TEST(QSample, MomentsMatchClosedForm) {
  const auto p = make_schedule(50, 1e-4, 0.2);
  const std::size_t draws = 10000;
  Tensor<double> z0(Shape{draws}, 0.7);
  std::mt19937_64 rng(123);
  for (std::size_t t : {std::size_t{1}, std::size_t{25}, std::size_t{50}}) {
    const auto zt = q_sample(z0, t, normal_tensor({draws}, rng), p);
    double mean = 0, var = 0;
    for (double v : zt.data()) mean += v;
    mean /= draws;
    for (double v : zt.data()) var += (v - mean) * (v - mean);
    var /= draws - 1;
    const double want_var = 1 - p.alpha_bar[t];
    EXPECT_NEAR(mean, std::sqrt(p.alpha_bar[t]) * 0.7, 3 * std::sqrt(want_var / draws)) << t;
    EXPECT_NEAR(var, want_var, 3 * want_var * std::sqrt(2.0 / (draws - 1))) << t;
  }
}

TEST(QSample, ComposedStepsMatchClosedForm) {
  const auto p = make_schedule(20, 1e-3, 0.1);
  const std::size_t draws = 10000;
  std::mt19937_64 rng(5);
  Tensor<double> z(Shape{draws}, 1.0);
  for (std::size_t t = 1; t <= 20; ++t) z = q_step(z, t, normal_tensor({draws}, rng), p);
  double mean = 0, var = 0;
  for (double v : z.data()) mean += v;
  mean /= draws;
  for (double v : z.data()) var += (v - mean) * (v - mean);
  var /= draws - 1;
  const double want_var = 1 - p.alpha_bar[20];
  EXPECT_NEAR(mean, std::sqrt(p.alpha_bar[20]), 3 * std::sqrt(want_var / draws));
  EXPECT_NEAR(var, want_var, 3 * want_var * std::sqrt(2.0 / (draws - 1)));
}

TEST(ReverseStep, NoiselessScheduleIsIdentity) {
  const auto p = SchedulerParams::from_betas(std::vector<double>(4, 0.0));
  std::mt19937_64 rng(2);
  const auto z = normal_tensor({5}, rng), e = normal_tensor({5}, rng), n = normal_tensor({5}, rng);
  EXPECT_EQ(reverse_step(z, e, 3, n, p), z);
}

TEST(ReverseStep, ExactNoiseInvertsSingleStep) {
  const auto p = make_schedule(1, 0.3, 0.3);
  std::mt19937_64 rng(4);
  const auto z0 = normal_tensor({6}, rng), eps = normal_tensor({6}, rng);
  const auto z1 = q_sample(z0, 1, eps, p);
  const auto back = reverse_step(z1, eps, 1, Tensor<double>(Shape{6}), p);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(back[i], z0[i], 1e-12);
}

TEST(ReverseStep, FinalStepIgnoresNoise) {
  const auto p = make_schedule(10, 0.01, 0.1);
  EXPECT_EQ(p.posterior_variance[1], 0.0);
  std::mt19937_64 rng(6);
  const auto z = normal_tensor({4}, rng), e = normal_tensor({4}, rng);
  EXPECT_EQ(reverse_step(z, e, 1, normal_tensor({4}, rng), p),
            reverse_step(z, e, 1, Tensor<double>(Shape{4}), p));
  EXPECT_THROW(reverse_step(z, e, 11, z, p), std::out_of_range);
}

TEST(ReverseStep, PosteriorMeanFormula) {
  const auto p = make_schedule(10, 0.01, 0.1);
  const double zt = 0.8, e = -0.3, z = 0.5;
  const std::size_t t = 6;
  const auto out = reverse_step(Tensor<double>::scalar(zt), Tensor<double>::scalar(e), t,
                                Tensor<double>::scalar(z), p);
  double ab = 1, ab_prev = 1;
  for (std::size_t i = 1; i <= t; ++i) {
    ab_prev = ab;
    ab *= 1 - p.beta[i];
  }
  const double beta = p.beta[t];
  const double mu = (zt - beta / std::sqrt(1 - ab) * e) / std::sqrt(1 - beta);
  const double sigma = std::sqrt(beta * (1 - ab_prev) / (1 - ab));
  EXPECT_NEAR(out[0], mu + sigma * z, 1e-12);
}

TEST(ReverseStep, OracleChainRecoversLatent) {
  // With the true eps of Z_t = sqrt(ab_t) Z_0 + sqrt(1 - ab_t) eps at every step
  // and z = 0, the chain walks back to Z_0.
  const auto p = make_schedule(8, 1e-3, 0.05);
  std::mt19937_64 rng(8);
  const auto z0 = normal_tensor({10}, rng);
  auto z = q_sample(z0, 8, normal_tensor({10}, rng), p);
  for (std::size_t t = 8; t >= 1; --t) {
    Tensor<double> eps(z.shape());
    for (std::size_t i = 0; i < z.size(); ++i)
      eps[i] = (z[i] - std::sqrt(p.alpha_bar[t]) * z0[i]) / std::sqrt(1 - p.alpha_bar[t]);
    z = reverse_step(z, eps, t, Tensor<double>(z.shape()), p);
  }
  for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(z[i], z0[i], 1e-4);
}

TEST(Loss, PerfectPredictionIsZero) {
  std::mt19937_64 rng(1);
  const auto e = normal_tensor({3, 4}, rng);
  EXPECT_EQ(training_loss(e, e, {1, 1, 1}), 0.0);
}

TEST(Loss, ZeroPredictionIsNoisePower) {
  std::mt19937_64 rng(2);
  const auto e = normal_tensor({10, 10000}, rng);
  EXPECT_NEAR(training_loss(e, Tensor<double>(e.shape()), std::vector<double>(10, 1.0)), 1.0, 0.05);
}

TEST(Loss, ExcludedFrameDoesNotMatter) {
  std::mt19937_64 rng(3);
  const auto e = normal_tensor({3, 5}, rng);
  auto a = normal_tensor({3, 5}, rng);
  auto b = a;
  for (std::size_t i = 5; i < 10; ++i) b[i] += 100.0;
  EXPECT_EQ(training_loss(e, a, {1, 0, 1}), training_loss(e, b, {1, 0, 1}));
  EXPECT_THROW(training_loss(e, a, {0, 0, 0}), std::invalid_argument);
  EXPECT_THROW(training_loss(e, a, {1, 1}), ShapeError);
}

TEST(Loss, DifferentiableFormAgrees) {
  std::mt19937_64 rng(4);
  const auto e = normal_tensor({3, 6}, rng), h = normal_tensor({3, 6}, rng);
  const std::vector<double> w{1, 0, 2.5};
  const auto v = training_loss(e, Var<double>::constant(h), w);
  EXPECT_NEAR(v.value()[0], training_loss(e, h, w), 1e-12);
}

}  // namespace
}  // namespace seqdiff
