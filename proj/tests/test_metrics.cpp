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

#include "seqdiff/fundus.hpp"
#include "seqdiff/metrics.hpp"

namespace seqdiff {
namespace {

Tensor<float> random_image(const Shape& s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Tensor<float> t(s);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

TEST(Psnr, IdenticalHitsCap) {
  const auto a = random_image({1, 8, 8}, 1);
  EXPECT_EQ(psnr(a, a), kPsnrCap);
}

TEST(Psnr, KnownMse) {
  Tensor<float> a(Shape{1, 10, 10}, 0.3f), b(Shape{1, 10, 10}, 0.4f);
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-5);
  // half the pixels off by sqrt(0.02): MSE 0.01
  Tensor<float> c(Shape{2, 2}, std::vector<float>{0, 0, 0, 0});
  Tensor<float> d(Shape{2, 2}, std::vector<float>{0, static_cast<float>(std::sqrt(0.02)), 0,
                                                  static_cast<float>(std::sqrt(0.02))});
  EXPECT_NEAR(psnr(c, d), 20.0, 1e-5);
  EXPECT_THROW(psnr(a, Tensor<float>(Shape{1, 10, 9})), ShapeError);
}

TEST(Psnr, SymmetricAndPermutationInvariant) {
  const auto a = random_image({1, 6, 6}, 2), b = random_image({1, 6, 6}, 3);
  EXPECT_EQ(psnr(a, b), psnr(b, a));
  std::vector<std::size_t> perm(36);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(4));
  Tensor<float> pa(a.shape()), pb(b.shape());
  for (std::size_t i = 0; i < 36; ++i) {
    pa[i] = a[perm[i]];
    pb[i] = b[perm[i]];
  }
  EXPECT_NEAR(psnr(pa, pb), psnr(a, b), 1e-9);
}

TEST(Ssim, IdenticalIsOne) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto a = random_image({1, 12, 12}, s);
    EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
  }
}

TEST(Ssim, ConstantImagesClosedForm) {
  const double mu_a = 0.2, mu_b = 0.7, c1 = 1e-4;
  Tensor<float> a(Shape{1, 9, 9}, static_cast<float>(mu_a)), b(Shape{1, 9, 9}, static_cast<float>(mu_b));
  // zero variances: SSIM = (2 mu_a mu_b + C1) / (mu_a^2 + mu_b^2 + C1)
  const double expected = (2 * mu_a * mu_b + c1) / (mu_a * mu_a + mu_b * mu_b + c1);
  EXPECT_NEAR(ssim(a, b), expected, 1e-6);
}

TEST(Ssim, InvertedImageScoresBelowOne) {
  const auto a = random_image({1, 10, 10}, 5);
  Tensor<float> inv(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) inv[i] = 1.0f - a[i];
  const double s = ssim(a, inv);
  EXPECT_LT(s, 1.0);
  EXPECT_GE(s, -1.0);
}

TEST(Ssim, Errors) {
  const auto a = random_image({1, 6, 6}, 1);
  EXPECT_THROW(ssim(a, a), std::invalid_argument);
  const auto b = random_image({1, 9, 9}, 1);
  EXPECT_THROW(ssim(b, b, 4), std::invalid_argument);
}

TEST(Vcdr, RenderedFrameRecoversRatio) {
  EyePhenotype e;
  e.time_variant = true;
  e.r0 = 0.7;
  e.year0 = 2000;
  const auto f = render_frame(e, 2000, 32);
  EXPECT_NEAR(vcdr(f.image).vcdr, 0.7, 0.02);
}

TEST(Vcdr, BackgroundIsUngradable) {
  EXPECT_THROW(vcdr(Tensor<float>(Shape{1, 32, 32}, 0.25f)), UngradableFrame);
}

TEST(Vcdr, CupFillingDiscGivesOne) {
  EyePhenotype e;
  FrameGeometry g;
  g.cup_rx = g.disc_rx;
  g.cup_ry = g.disc_ry;
  EXPECT_NEAR(vcdr(render_geometry(e, g, 32)).vcdr, 1.0, 0.02);
}

TEST(Vcdr, AcrossRatioSweep) {
  for (double r = 0.3; r <= 0.9; r += 0.05) {
    EyePhenotype e;
    e.time_variant = true;
    e.r0 = r;
    e.year0 = 0;
    EXPECT_NEAR(vcdr(render_frame(e, 0, 32).image).vcdr, r, 0.02) << r;
  }
}

TEST(Vcdr, DiscSizeBands) {
  // 130 px per mm^2 on a 32x32 canvas; 4x the pixels at 64x64
  EXPECT_DOUBLE_EQ(vcdr_threshold(1.9 * 130, 32), 0.69);
  EXPECT_DOUBLE_EQ(vcdr_threshold(2.5 * 130, 32), 0.72);
  EXPECT_DOUBLE_EQ(vcdr_threshold(3.0 * 130, 32), 0.76);
  EXPECT_DOUBLE_EQ(vcdr_threshold(2.5 * 130 * 4, 64), 0.72);
  EyePhenotype e;
  e.time_variant = true;
  e.r0 = 0.8;
  const auto res = vcdr(render_frame(e, 0, 32).image);
  EXPECT_EQ(res.threshold, vcdr_threshold(res.disc_area, 32));
  EXPECT_EQ(res.glaucoma, res.vcdr > res.threshold);
  EXPECT_TRUE(res.glaucoma);
}

// Toy frames: dark class 0, bright class 1, with noise.
void toy_bands(std::size_t n, std::uint64_t seed, Tensor<float>& x, std::vector<int>& y,
               bool shuffle_labels = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  x = Tensor<float>(Shape{n, 1, 16, 16});
  y.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<int>(i % 2);
    const float base = y[i] ? 0.65f : 0.25f;
    for (std::size_t k = 0; k < 256; ++k) x[i * 256 + k] = base + 0.2f * u(rng);
  }
  if (shuffle_labels)
    for (auto& v : y) v = static_cast<int>(rng() % 2);
}

ClassifierConfig toy_classifier() {
  ClassifierConfig c;
  c.steps = 150;
  c.seed = 3;
  return c;
}

TEST(Classifier, SeparableBandsReachFloor) {
  Tensor<float> x, hx;
  std::vector<int> y, hy;
  toy_bands(64, 1, x, y);
  toy_bands(32, 2, hx, hy);
  ClassifierReport rep;
  const auto p = train_classifier(x, y, hx, hy, toy_classifier(), &rep);
  EXPECT_GE(rep.heldout_accuracy, 0.95);
  EXPECT_EQ(accuracy(classify(p, hx), hy), rep.heldout_accuracy);
}

TEST(Classifier, FrozenParametersGiveStableLogits) {
  const auto p = init_classifier(1, 16, 4);
  Tensor<float> x;
  std::vector<int> y;
  toy_bands(8, 5, x, y);
  Tape<float> t1(false), t2(false);
  EXPECT_EQ(classifier_logits(t1, p, Var<float>::constant(x)).value(),
            classifier_logits(t2, p, Var<float>::constant(x)).value());
}

TEST(Classifier, ShuffledLabelsMissFloor) {
  Tensor<float> x, hx;
  std::vector<int> y, hy;
  toy_bands(64, 1, x, y, true);
  toy_bands(200, 2, hx, hy, true);
  ClassifierConfig c = toy_classifier();
  c.accuracy_floor = 0.0;
  ClassifierReport rep;
  train_classifier(x, y, hx, hy, c, &rep);
  EXPECT_NEAR(rep.heldout_accuracy, 0.5, 0.12);
  c.accuracy_floor = 0.95;
  EXPECT_THROW(train_classifier(x, y, hx, hy, c), AccuracyFloorError);
}

TEST(Classifier, DeterministicPerSeed) {
  Tensor<float> x, hx;
  std::vector<int> y, hy;
  toy_bands(32, 1, x, y);
  toy_bands(16, 2, hx, hy);
  auto c = toy_classifier();
  c.steps = 20;
  c.accuracy_floor = 0.0;
  EXPECT_EQ(train_classifier(x, y, hx, hy, c), train_classifier(x, y, hx, hy, c));
}

TEST(Ams, Fractions) {
  EXPECT_EQ(ams({1, 0, 1}, {1, 0, 1}), 1.0);
  EXPECT_EQ(ams({1, 1, 0, 0}, {1, 0, 1, 0}), 0.5);
  EXPECT_EQ(ams({1, 0, 0, 1, 1}, {1, 1, 1, 1, 1}), accuracy({1, 0, 0, 1, 1}, {1, 1, 1, 1, 1}));
}

TEST(Ams, RealFramesEqualClassifierAccuracy) {
  Tensor<float> x, hx;
  std::vector<int> y, hy;
  toy_bands(64, 1, x, y);
  toy_bands(40, 9, hx, hy);
  auto c = toy_classifier();
  c.steps = 30;
  c.accuracy_floor = 0.0;
  const auto p = train_classifier(x, y, hx, hy, c);
  const auto pred = classify(p, hx);
  std::size_t right = 0;
  for (std::size_t i = 0; i < hy.size(); ++i) right += pred[i] == hy[i];
  EXPECT_DOUBLE_EQ(ams(pred, hy), static_cast<double>(right) / hy.size());
}

TEST(BalancedAccuracy, AveragesRecalls) {
  // class 0 recall 1/2, class 1 recall 1
  EXPECT_DOUBLE_EQ(balanced_accuracy({0, 1, 1}, {0, 0, 1}), 0.75);
}

}  // namespace
}  // namespace seqdiff
