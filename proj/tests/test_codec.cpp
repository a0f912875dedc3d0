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

#include "seqdiff/codec.hpp"

namespace seqdiff {
namespace {

Tensor<float> random_images(const Shape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Tensor<float> t(shape);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

TEST(Codec, UnitReductionIsIdentity) {
  const auto x = random_images({3, 2, 5, 7}, 1);
  EXPECT_EQ(encode_frames(x, 1), x);
}

TEST(Codec, TwoByTwoIndexMap) {
  Tensor<float> x(Shape{1, 1, 4, 4});
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) x.at(0, 0, i, j) = static_cast<float>(4 * i + j);
  const auto z = encode_frames(x, 2);
  ASSERT_EQ(z.shape(), (Shape{1, 4, 2, 2}));
  // channel dy*2+dx at block (bi,bj) holds pixel (2bi+dy, 2bj+dx) = 4(2bi+dy) + 2bj+dx
  const float expected[4][2][2] = {{{0, 2}, {8, 10}},
                                   {{1, 3}, {9, 11}},
                                   {{4, 6}, {12, 14}},
                                   {{5, 7}, {13, 15}}};
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(z.at(0, c, i, j), expected[c][i][j]);
}

TEST(Codec, RoundTripIsBitExact) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const std::size_t k = 1 + seed % 4;
    const auto x = random_images({1 + seed % 3, 1 + seed % 2, 4 * k, 8 * k}, seed);
    EXPECT_EQ(decode_frames(encode_frames(x, k), k), x);
  }
}

TEST(Codec, ZeroLatentDecodesToZeroImage) {
  EXPECT_EQ(decode_frames(Tensor<float>(Shape{2, 16, 8, 8}), 4), Tensor<float>(Shape{2, 1, 32, 32}));
}

TEST(Codec, LatentRoundTripIsBitExact) {
  std::mt19937_64 rng(3);
  std::normal_distribution<float> n;
  Tensor<float> z(Shape{3, 32, 4, 4});
  for (auto& v : z.data()) v = n(rng);
  EXPECT_EQ(encode_frames(decode_frames(z, 4), 4), z);
}

TEST(Codec, PreservesNorm) {
  const auto x = random_images({2, 3, 16, 16}, 9);
  const auto z = encode_frames(x, 4);
  double a = 0, b = 0;
  for (float v : x.data()) a += static_cast<double>(v) * v;
  for (float v : z.data()) b += static_cast<double>(v) * v;
  // a permutation: same multiset of values
  std::vector<float> sx(x.data().begin(), x.data().end()), sz(z.data().begin(), z.data().end());
  std::sort(sx.begin(), sx.end());
  std::sort(sz.begin(), sz.end());
  EXPECT_EQ(sx, sz);
  EXPECT_NEAR(a, b, 1e-9 * a);
}

TEST(Codec, MissingSlotsEncodeToZero) {
  CodecConfig c;
  ImageSequence s;
  s.frames = random_images({3, 1, 32, 32}, 5);
  s.present = {true, false, true};
  const auto z = encode(s, c);
  ASSERT_EQ(z.shape(), (Shape{3, 16, 8, 8}));
  const std::size_t per = 16 * 64;
  for (std::size_t i = 0; i < per; ++i) EXPECT_EQ(z[per + i], 0.0f);
  EXPECT_NE(z[0], 0.0f);
}

TEST(Codec, Errors) {
  EXPECT_THROW(encode_frames(Tensor<float>(Shape{1, 1, 6, 8}), 4), ShapeError);
  EXPECT_THROW(decode_frames(Tensor<float>(Shape{1, 15, 2, 2}), 4), ShapeError);
  CodecConfig c;
  c.height = 30;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  ImageSequence s;
  s.frames = Tensor<float>(Shape{1, 1, 32, 32}, 1.5f);
  EXPECT_THROW(encode(s, CodecConfig{}), std::domain_error);
}

}  // namespace
}  // namespace seqdiff
