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

#include "seqdiff/denoiser.hpp"

namespace seqdiff {
namespace {

constexpr auto P = SlotCode::kPresent;
constexpr auto M = SlotCode::kMissing;
constexpr auto H = SlotCode::kHidden;

// Parameter count written out from the architecture table.
std::size_t count_from_table(const DenoiserConfig& c) {
  const std::size_t t = c.time_dim(), cl = c.latent_channels, d = c.label_dim;
  auto gn = [](std::size_t ch) { return 2 * ch; };
  auto conv3 = [](std::size_t in, std::size_t out) { return 9 * in * out + out; };
  auto res = [&](std::size_t in, std::size_t out) {
    std::size_t n = gn(in) + conv3(in, out) + t * out + out + gn(out) + conv3(out, out);
    if (in != out) n += in * out + out;
    return n;
  };
  auto attn = [&](std::size_t ch, std::size_t kv) { return gn(ch) + ch * ch + 2 * kv * ch + ch * ch + ch; };
  auto width = [&](std::size_t l) { return l == 0 ? c.base_channels : 2 * c.base_channels; };
  std::size_t n = (c.base_channels * t + t) + (t * t + t);
  n += conv3(3 * cl, width(0));
  for (std::size_t l = 0; l < c.depth; ++l) n += res(width(l), width(l)) + attn(width(l), width(l)) + conv3(width(l), width(l + 1));
  const std::size_t m = width(c.depth);
  n += res(m, m) + 2 * attn(m, m) + attn(m, d);
  for (std::size_t l = 0; l < c.depth; ++l) {
    n += conv3(width(l + 1), width(l)) + res(2 * width(l), width(l)) + attn(width(l), width(l));
    if (c.temporal_placement == TemporalPlacement::kMidAndUp) n += attn(width(l), width(l));
  }
  n += gn(width(0)) + conv3(width(0), cl);
  n += 3 * d;
  return n;
}

DenoiserConfig tiny_config() {
  DenoiserConfig c;
  c.latent_channels = 4;
  c.latent_size = 8;
  c.frames = 3;
  c.base_channels = 8;
  c.heads = 2;
  c.groups = 2;
  c.label_dim = 8;
  c.diffusion_steps = 10;
  return c;
}

// Denoiser input for one sequence per entry of `codes`.
template <typename T>
Tensor<T> make_input(const DenoiserConfig& c, const std::vector<std::vector<SlotCode>>& codes,
                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  const std::size_t F = c.frames, C = c.latent_channels, h = c.latent_size;
  Tensor<T> out(Shape{codes.size() * F, 3 * C, h, h});
  for (std::size_t b = 0; b < codes.size(); ++b) {
    Tensor<T> zt(Shape{F, C, h, h}), z0(Shape{F, C, h, h});
    for (auto& v : zt.data()) v = static_cast<T>(n(rng));
    for (auto& v : z0.data()) v = static_cast<T>(0.5 + 0.2 * n(rng));
    const TimeAlignedMask mask{codes[b], 0, 1};
    const auto mh = broadcast<T>(mask, zt.shape());
    const auto x = assemble_input(zt, mh, truncate(z0, mh));
    std::copy(x.data().begin(), x.data().end(), out.data().begin() + b * x.size());
  }
  return out;
}

LabelMask labels_for(const std::vector<SlotCode>& codes, const std::vector<int>& labels) {
  LabelMask m;
  m.labels = labels;
  for (auto code : codes) m.no_label.push_back(code == M);
  return m;
}

TEST(Init, SameSeedSameParameters) {
  EXPECT_EQ(init_model(DenoiserConfig{}, 5), init_model(DenoiserConfig{}, 5));
  EXPECT_FALSE(init_model(DenoiserConfig{}, 5) == init_model(DenoiserConfig{}, 6));
}

TEST(Init, ParameterCountMatchesTable) {
  DenoiserConfig c;
  EXPECT_EQ(init_model(c, 1).element_count(), count_from_table(c));
  EXPECT_EQ(expected_parameter_count(c), count_from_table(c));
  EXPECT_EQ(count_from_table(c), 586576u);
  c.temporal_placement = TemporalPlacement::kMidAndUp;
  EXPECT_EQ(init_model(c, 1).element_count(), count_from_table(c));
  EXPECT_EQ(expected_parameter_count(c), count_from_table(c));
  const auto t = tiny_config();
  EXPECT_EQ(init_model(t, 1).element_count(), count_from_table(t));
}

TEST(Init, RejectsBadConfigs) {
  DenoiserConfig c;
  c.depth = 0;
  EXPECT_THROW(init_model(c, 1), std::invalid_argument);
  c = DenoiserConfig{};
  c.latent_size = 6;  // not divisible by 2^depth
  EXPECT_THROW(init_model(c, 1), std::invalid_argument);
  c = DenoiserConfig{};
  c.heads = 5;
  EXPECT_THROW(init_model(c, 1), std::invalid_argument);
}

TEST(Labels, TokensAfterInit) {
  const DenoiserConfig c;
  const auto p = init_model(c, 2);
  Tape<float> tape(false);
  LabelMask m{{0, 1, 0, 1, 0, 1}, std::vector<bool>(6, false)};
  const auto tok = embed_labels(tape, p, {m}).value();
  ASSERT_EQ(tok.shape(), (Shape{6, 1, c.label_dim}));
  bool differ = false;
  for (std::size_t i = 0; i < c.label_dim; ++i) differ |= tok[i] != tok[c.label_dim + i];
  EXPECT_TRUE(differ);

  const auto null_tok = embed_labels(tape, p, {LabelMask::unlabeled(6)}).value();
  const auto& table = p.at("label.embed");
  for (std::size_t f = 0; f < 6; ++f)
    for (std::size_t i = 0; i < c.label_dim; ++i)
      EXPECT_EQ(null_tok[f * c.label_dim + i], table[kNullLabelToken * c.label_dim + i]);
}

TEST(Labels, GradientReachesEmbedding) {
  const auto c = tiny_config();
  const auto p = init_model(c, 3);
  const std::vector<SlotCode> codes{P, H, P};
  Tape<float> tape;
  auto out = predict_noise(tape, p, c, Var<float>::constant(make_input<float>(c, {codes}, 4)), {5},
                           {labels_for(codes, {0, 1, 0})});
  const auto g = tape.backward(ad::mean(ad::mul(out, out)), p);
  double norm = 0;
  for (float v : g.at("label.embed").data()) norm += std::abs(v);
  EXPECT_GT(norm, 0.0);
}

TEST(Labels, Validation) {
  LabelMask m{{0, 2, 1}, {false, false, false}};
  EXPECT_THROW(m.validate(3), std::invalid_argument);
  EXPECT_THROW(LabelMask::unlabeled(2).validate(3), std::invalid_argument);
}

Tensor<double> random_hidden(std::size_t n, std::size_t ch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  Tensor<double> t(Shape{n, ch, 2, 2});
  for (auto& v : t.data()) v = d(rng);
  return t;
}

TEST(Temporal, MaskedKvWeightsIgnoreUnknownSlots) {
  DenoiserConfig c;
  c.frames = 4;
  const auto p = init_model(c, 7).cast<double>();
  const auto x = random_hidden(4, 64, 8);
  const std::vector<SlotCode> codes{P, M, H, P};
  AttentionProbe<double> probe;
  Tape<double> tape(false);
  temporal_attention(tape, p, "mid.temporal", Var<double>::constant(x), {codes}, c, &probe);
  ASSERT_EQ(probe.size(), 1u);
  const auto& w = probe[0];
  ASSERT_EQ(w.shape(), (Shape{4 * c.heads, 4, 4}));
  for (std::size_t r = 0; r < w.size() / 4; ++r) {
    EXPECT_EQ(w[r * 4 + 1], 0.0);
    EXPECT_EQ(w[r * 4 + 2], 0.0);
    EXPECT_GT(w[r * 4 + 0], 0.0);
    EXPECT_NEAR(w[r * 4 + 0] + w[r * 4 + 3], 1.0, 1e-6);
  }
}

TEST(Temporal, RemoveReinsertPassesUnknownSlotsThrough) {
  DenoiserConfig c;
  c.frames = 4;
  c.temporal_mode = TemporalMode::kRemoveReinsert;
  const auto p = init_model(c, 7);
  const auto x = random_hidden(8, 64, 9).cast<float>();
  const std::vector<std::vector<SlotCode>> codes{{P, M, H, P}, {H, P, P, M}};
  Tape<float> tape(false);
  const auto y =
      temporal_attention(tape, p, "mid.temporal", Var<float>::constant(x), codes, c).value();
  const std::size_t per = 64 * 4;
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t f = 0; f < 4; ++f) {
      bool same = true;
      for (std::size_t i = 0; i < per; ++i)
        same &= std::bit_cast<std::uint32_t>(y[(b * 4 + f) * per + i]) ==
                std::bit_cast<std::uint32_t>(x[(b * 4 + f) * per + i]);
      EXPECT_EQ(same, codes[b][f] != P) << b << "," << f;
    }
}

TEST(Temporal, SingleKnownSlot) {
  DenoiserConfig c;
  c.frames = 3;
  const auto x = random_hidden(3, 64, 10);
  const std::vector<SlotCode> codes{M, P, H};
  auto run = [&](TemporalMode mode, const ParamStore<double>& p) {
    c.temporal_mode = mode;
    Tape<double> tape(false);
    return temporal_attention(tape, p, "mid.temporal", Var<double>::constant(x), {codes}, c).value();
  };
  auto p = init_model(c, 11).cast<double>();
  // one key: weight 1 in both modes, so the known slot agrees across modes
  const auto rr = run(TemporalMode::kRemoveReinsert, p), kv = run(TemporalMode::kMaskedKv, p);
  for (std::size_t i = 256; i < 512; ++i) EXPECT_NEAR(rr[i], kv[i], 1e-12);
  // output projection bypassed: the block is the identity in every slot
  p.at("mid.temporal.o.w") = Tensor<double>(p.at("mid.temporal.o.w").shape());
  EXPECT_EQ(run(TemporalMode::kRemoveReinsert, p), x);
  EXPECT_EQ(run(TemporalMode::kMaskedKv, p), x);
}

TEST(Temporal, NeedsAKnownSlot) {
  DenoiserConfig c;
  c.frames = 2;
  const auto p = init_model(c, 1).cast<double>();
  Tape<double> tape(false);
  EXPECT_THROW(temporal_attention(tape, p, "mid.temporal",
                                  Var<double>::constant(random_hidden(2, 64, 1)), {{H, M}}, c),
               std::invalid_argument);
}

TEST(Predict, OutputShapeAndCodes) {
  const DenoiserConfig c;
  const auto p = init_model(c, 1);
  const std::vector<std::vector<SlotCode>> codes{{P, M, P, P, M, H}, {P, P, H, M, M, P}};
  const auto x = make_input<float>(c, codes, 3);
  EXPECT_EQ(frame_codes_from_input(x, c), codes);
  Tape<float> tape(false);
  const auto y = predict_noise(tape, p, c, Var<float>::constant(x), {4, 50},
                               {labels_for(codes[0], {0, 0, 0, 1, 1, 1}),
                                labels_for(codes[1], std::vector<int>(6, 0))});
  EXPECT_EQ(y.shape(), (Shape{12, 16, 8, 8}));
  EXPECT_TRUE(y.value().all_finite());
}

TEST(Predict, Errors) {
  const auto c = tiny_config();
  const auto p = init_model(c, 1);
  const std::vector<SlotCode> codes{P, H, P};
  const auto x = make_input<float>(c, {codes}, 3);
  Tape<float> tape(false);
  const auto lm = labels_for(codes, {0, 0, 0});
  EXPECT_THROW(predict_noise(tape, p, c, Var<float>::constant(x), {0}, {lm}), std::out_of_range);
  EXPECT_THROW(predict_noise(tape, p, c, Var<float>::constant(x), {11}, {lm}), std::out_of_range);
  EXPECT_THROW(predict_noise(tape, p, c, Var<float>::constant(Tensor<float>(Shape{3, 11, 8, 8})), {1}, {lm}),
               ShapeError);
  EXPECT_THROW(predict_noise(tape, p, c, Var<float>::constant(x), {1, 2}, {lm}), std::invalid_argument);
}

TEST(Predict, PermutingFramesPermutesOutput) {
  DenoiserConfig c = tiny_config();
  c.frames = 4;
  const auto p = init_model(c, 5).cast<double>();
  const std::vector<SlotCode> codes{P, M, P, H};
  const std::vector<int> labels{0, 0, 1, 1};
  const auto x = make_input<double>(c, {codes}, 6);
  const std::size_t per = x.size() / 4, out_per = per / 3;
  // swap the two Present frames 0 and 2
  Tensor<double> xs = x;
  std::swap_ranges(xs.data().begin(), xs.data().begin() + per, xs.data().begin() + 2 * per);
  Tape<double> t1(false), t2(false);
  const auto y = predict_noise(t1, p, c, Var<double>::constant(x), {3}, {labels_for(codes, labels)}).value();
  const auto ys = predict_noise(t2, p, c, Var<double>::constant(xs), {3},
                                {labels_for(codes, {1, 0, 0, 1})}).value();
  const std::size_t map[4] = {2, 1, 0, 3};
  for (std::size_t f = 0; f < 4; ++f)
    for (std::size_t i = 0; i < out_per; ++i)
      ASSERT_NEAR(ys[map[f] * out_per + i], y[f * out_per + i], 1e-10) << f;
}

double hidden_response(TemporalMode mode) {
  DenoiserConfig c = tiny_config();
  c.temporal_mode = mode;
  const auto p = init_model(c, 8).cast<double>();
  const std::vector<SlotCode> codes{P, P, H};
  const auto x = make_input<double>(c, {codes}, 9);
  Tensor<double> x2 = x;
  // change the Z_t and Z_M channels of frame 0
  const std::size_t C = c.latent_channels, plane = 64;
  for (std::size_t i = 0; i < C * plane; ++i) {
    x2[i] += 0.5;
    x2[2 * C * plane + i] += 0.5;
  }
  const auto lm = labels_for(codes, {0, 0, 0});
  Tape<double> t1(false), t2(false);
  const auto a = predict_noise(t1, p, c, Var<double>::constant(x), {4}, {lm}).value();
  const auto b = predict_noise(t2, p, c, Var<double>::constant(x2), {4}, {lm}).value();
  double diff = 0;
  for (std::size_t i = 2 * C * plane; i < 3 * C * plane; ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
  return diff;
}

TEST(Predict, KnownFramesReachHiddenFrame) {
  EXPECT_GT(hidden_response(TemporalMode::kMaskedKv), 1e-6);
  // the literal variant carries nothing across frames into the Hidden slot
  EXPECT_EQ(hidden_response(TemporalMode::kRemoveReinsert), 0.0);
}

TEST(Predict, Deterministic) {
  const DenoiserConfig c;
  const auto p = init_model(c, 1);
  const std::vector<SlotCode> codes{P, M, P, P, M, H};
  const auto x = make_input<float>(c, {codes}, 2);
  Tape<float> t1(false), t2(false);
  EXPECT_EQ(predict_noise(t1, p, c, Var<float>::constant(x), {7}, {labels_for(codes, std::vector<int>(6, 1))}).value(),
            predict_noise(t2, p, c, Var<float>::constant(x), {7}, {labels_for(codes, std::vector<int>(6, 1))}).value());
}

double denoiser_grad_error(TemporalMode mode, TemporalPlacement placement) {
  DenoiserConfig c = tiny_config();
  c.temporal_mode = mode;
  c.temporal_placement = placement;
  c.temporal_positional = true;
  auto p = init_model(c, 12).cast<double>();
  // nonzero biases so every path carries gradient
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (auto& [name, t] : p.tensors())
    if (name.ends_with(".b")) for (auto& v : t.data()) v += u(rng);
  const std::vector<std::vector<SlotCode>> codes{{P, H, P}, {M, P, H}};
  const auto x = make_input<double>(c, codes, 14);
  std::mt19937_64 erng(15);
  std::normal_distribution<double> n;
  Tensor<double> eps(Shape{6, c.latent_channels, 8, 8});
  for (auto& v : eps.data()) v = n(erng);
  const std::vector<LabelMask> labels{labels_for(codes[0], {0, 1, 1}), labels_for(codes[1], {0, 0, 1})};
  auto loss = [&](Tape<double>& tape, const ParamStore<double>& ps) {
    auto y = predict_noise(tape, ps, c, Var<double>::constant(x), {3, 7}, labels);
    return ad::mse(y, Var<double>::constant(eps));
  };
  GradCheckOptions opt;
  opt.max_elements_per_param = 3;
  opt.seed = 16;
  return grad_check(loss, p, opt);
}

TEST(GradCheck, FullDenoiserMaskedKv) {
  EXPECT_LT(denoiser_grad_error(TemporalMode::kMaskedKv, TemporalPlacement::kMidAndUp), 1e-3);
}

TEST(GradCheck, FullDenoiserRemoveReinsert) {
  EXPECT_LT(denoiser_grad_error(TemporalMode::kRemoveReinsert, TemporalPlacement::kMidOnly), 1e-3);
}

}  // namespace
}  // namespace seqdiff
