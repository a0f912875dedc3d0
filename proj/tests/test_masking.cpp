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

#include <random>

#include <gtest/gtest.h>

#include "seqdiff/masking.hpp"

namespace seqdiff {
namespace {

constexpr auto P = SlotCode::kPresent;
constexpr auto M = SlotCode::kMissing;
constexpr auto H = SlotCode::kHidden;

TEST(Align, IrregularYears) {
  const auto m = align({1990, 1992, 1995}, 1990, 6, 1);
  EXPECT_EQ(m.codes, (std::vector<SlotCode>{P, M, P, M, M, P}));
  EXPECT_EQ(m.raw(), (std::vector<std::uint8_t>{1, 255, 1, 255, 255, 1}));
}

TEST(Align, ConsecutiveYearsAllPresent) {
  const auto m = align({2000, 2001, 2002, 2003}, 2000, 4);
  EXPECT_EQ(m.count(P), 4u);
}

TEST(Align, EmptyIsAllMissing) {
  EXPECT_EQ(align({}, 2000, 5).count(M), 5u);
}

TEST(Align, Errors) {
  EXPECT_THROW(align({1989}, 1990, 6), std::out_of_range);
  EXPECT_THROW(align({1996}, 1990, 6), std::out_of_range);
  try {
    align({1990, 1991}, 1990, 3, 2);
    FAIL();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("1990"), std::string::npos);
    EXPECT_NE(msg.find("1991"), std::string::npos);
  }
}

TEST(Align, InvariantToYearShiftWithinSlot) {
  const auto a = align({2000, 2004, 2009}, 2000, 5, 2);
  const auto b = align({2001, 2005, 2008}, 2000, 5, 2);
  EXPECT_EQ(a, b);
  EXPECT_EQ(window_start_for(2009, 5, 2), 2000);
}

TEST(HideRandom, TwoSlotsOutcomesAreReproducible) {
  const auto m = align({2000, 2001}, 2000, 2);
  bool seen[2] = {false, false};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 a(seed), b(seed);
    const auto x = hide_random_frame(m, a);
    EXPECT_EQ(x, hide_random_frame(m, b));
    ASSERT_TRUE(x.codes == (std::vector<SlotCode>{H, P}) || x.codes == (std::vector<SlotCode>{P, H}));
    seen[x.codes[0] == H ? 0 : 1] = true;
  }
  EXPECT_TRUE(seen[0] && seen[1]);
}

TEST(HideRandom, NeverHidesMissing) {
  const auto m = align({2000, 2002}, 2000, 3);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    std::mt19937_64 rng(seed);
    const auto x = hide_random_frame(m, rng);
    EXPECT_EQ(x.codes[1], M);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < 3; ++i) {
      if (x.codes[i] != m.codes[i]) {
        ++changed;
        EXPECT_EQ(m.codes[i], P);
        EXPECT_EQ(x.codes[i], H);
      }
    }
    EXPECT_EQ(changed, 1u);
  }
}

TEST(HideRandom, UniformOverPresentSlots) {
  const auto m = align({2000, 2001, 2002, 2003}, 2000, 4);
  std::mt19937_64 rng(42);
  std::size_t hits[4] = {};
  const std::size_t draws = 10000;
  for (std::size_t i = 0; i < draws; ++i) hits[*hide_random_frame(m, rng).hidden_slot()]++;
  for (std::size_t h : hits) EXPECT_NEAR(static_cast<double>(h) / draws, 0.25, 0.02);
}

TEST(HideRandom, NeedsTwoPresent) {
  std::mt19937_64 rng(1);
  EXPECT_THROW(hide_random_frame(align({2000}, 2000, 3), rng), std::invalid_argument);
}

TEST(HideTarget, Basics) {
  const auto all = align({2000, 2001, 2002}, 2000, 3);
  EXPECT_EQ(hide_target_slot(all, 2).codes, (std::vector<SlotCode>{P, P, H}));
  const auto gap = align({2000, 2002}, 2000, 3);
  EXPECT_EQ(hide_target_slot(gap, 1).codes, (std::vector<SlotCode>{P, H, P}));
  EXPECT_THROW(hide_target_slot(gap, 3), std::out_of_range);
}

TEST(HideTarget, OtherSlotsMatchRealignment) {
  const std::vector<int> years{2000, 2003, 2005};
  const auto m = align(years, 2000, 6);
  const auto h = hide_target_slot(m, 3);
  const auto again = align(years, 2000, 6);
  for (std::size_t i = 0; i < 6; ++i)
    if (i != 3) {
      EXPECT_EQ(h.codes[i], again.codes[i]);
    }
}

TEST(Broadcast, Basics) {
  const TimeAlignedMask m{{P, H}, 0, 1};
  const auto b = broadcast<float>(m, {2, 1, 1, 1});
  EXPECT_EQ(b[0], 1.0f);
  EXPECT_EQ(b[1], 0.0f);
  EXPECT_THROW(broadcast<float>(m, {3, 1, 1, 1}), ShapeError);
}

TEST(Broadcast, FramesAreConstantAndHistogramScales) {
  const TimeAlignedMask m{{P, M, H, P, M}, 0, 1};
  const Shape s{5, 3, 2, 4};
  const auto b = broadcast<float>(m, s);
  const std::size_t per = 3 * 2 * 4;
  std::map<float, std::size_t> hist;
  for (std::size_t f = 0; f < 5; ++f)
    for (std::size_t i = 0; i < per; ++i) {
      EXPECT_EQ(b[f * per + i], b[f * per]);
      hist[b[f * per + i]]++;
    }
  EXPECT_EQ(hist[1.0f], 2 * per);
  EXPECT_EQ(hist[255.0f], 2 * per);
  EXPECT_EQ(hist[0.0f], 1 * per);
}

Tensor<float> random_latent(const Shape& s, std::mt19937_64& rng) {
  std::normal_distribution<float> n;
  Tensor<float> t(s);
  for (auto& v : t.data()) v = n(rng);
  return t;
}

TEST(Truncate, AllPresentAndAllHidden) {
  std::mt19937_64 rng(1);
  const auto z = random_latent({2, 3, 2, 2}, rng);
  EXPECT_EQ(truncate(z, Tensor<float>(z.shape(), 1.0f)), z);
  EXPECT_EQ(truncate(z, Tensor<float>(z.shape(), 0.0f)), Tensor<float>(z.shape()));
  EXPECT_THROW(truncate(z, Tensor<float>(z.shape(), 2.0f)), std::invalid_argument);
}

TEST(Truncate, MatchesElementwiseOracle) {
  std::mt19937_64 rng(7);
  const float codes[3] = {0.0f, 1.0f, 255.0f};
  for (int trial = 0; trial < 1000; ++trial) {
    const Shape s{1 + rng() % 4, 1 + rng() % 3, 1 + rng() % 3, 1 + rng() % 3};
    const auto z = random_latent(s, rng);
    Tensor<float> m(s);
    for (auto& v : m.data()) v = codes[rng() % 3];
    const auto out = truncate(z, m);
    for (std::size_t i = 0; i < z.size(); ++i) {
      float want;
      if (m[i] == 0.0f) {
        want = 0.0f;
      } else if (m[i] == 1.0f) {
        want = z[i];
      } else {
        want = 255.0f;
      }
      ASSERT_EQ(std::bit_cast<std::uint32_t>(out[i]), std::bit_cast<std::uint32_t>(want));
    }
    // idempotent on masked positions
    const auto twice = truncate(out, m);
    EXPECT_EQ(twice, out);
  }
}

TEST(Assemble, LayoutAndSlicing) {
  Tensor<float> zt(Shape{1, 1, 1, 1}, std::vector<float>{0.25f});
  Tensor<float> mh(Shape{1, 1, 1, 1}, std::vector<float>{1.0f});
  Tensor<float> zm(Shape{1, 1, 1, 1}, std::vector<float>{-3.0f});
  const auto x = assemble_input(zt, mh, zm);
  EXPECT_EQ(x.values(), (std::vector<float>{0.25f, 1.0f, -3.0f}));

  std::mt19937_64 rng(2);
  const auto a = random_latent({3, 4, 2, 2}, rng), b = random_latent({3, 4, 2, 2}, rng),
             c = random_latent({3, 4, 2, 2}, rng);
  const auto y = assemble_input(a, b, c);
  ASSERT_EQ(y.shape(), (Shape{3, 12, 2, 2}));
  for (std::size_t f = 0; f < 3; ++f)
    for (std::size_t ch = 0; ch < 4; ++ch)
      for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(y[(f * 12 + ch) * 4 + i], a[(f * 4 + ch) * 4 + i]);
        EXPECT_EQ(y[(f * 12 + 4 + ch) * 4 + i], b[(f * 4 + ch) * 4 + i]);
        EXPECT_EQ(y[(f * 12 + 8 + ch) * 4 + i], c[(f * 4 + ch) * 4 + i]);
      }
  EXPECT_THROW(assemble_input(a, b, random_latent({3, 4, 2, 1}, rng)), ShapeError);
}

TEST(Conditioning, WeightsAndSentinels) {
  std::mt19937_64 rng(3);
  const auto z = random_latent({4, 2, 2, 2}, rng);
  const TimeAlignedMask m{{P, M, H, P}, 0, 1};
  const auto b = make_conditioning(z, m, false, 3.0);
  EXPECT_EQ(b.loss_weights, (std::vector<double>{1, 0, 3, 1}));
  EXPECT_EQ(b.z_masked[8], 255.0f);
  EXPECT_EQ(b.z_masked[0], z[0]);
  const auto n = make_conditioning(z, m, true);
  EXPECT_EQ(n.z_masked[8], -1.0f);
  EXPECT_EQ(n.mask_hat[8], -1.0f);
  EXPECT_EQ(n.z_masked[16], 0.0f);
}

}  // namespace
}  // namespace seqdiff
