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

#include "seqdiff/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

namespace seqdiff {

const char* to_string(TemporalMode mode) {
  return mode == TemporalMode::kMaskedKv ? "masked-kv" : "remove-reinsert";
}

TemporalMode temporal_mode_from_string(const std::string& s) {
  if (s == "masked-kv") return TemporalMode::kMaskedKv;
  if (s == "remove-reinsert") return TemporalMode::kRemoveReinsert;
  throw std::invalid_argument("unknown temporal attention mode '" + s + "'");
}

const char* to_string(TemporalPlacement placement) {
  return placement == TemporalPlacement::kMidOnly ? "mid" : "mid-and-up";
}

TemporalPlacement temporal_placement_from_string(const std::string& s) {
  if (s == "mid") return TemporalPlacement::kMidOnly;
  if (s == "mid-and-up") return TemporalPlacement::kMidAndUp;
  throw std::invalid_argument("unknown temporal attention placement '" + s + "'");
}

void DenoiserConfig::validate() const {
  if (depth == 0) throw std::invalid_argument("DenoiserConfig: depth must be >= 1");
  if (latent_channels == 0 || frames == 0 || base_channels == 0 || heads == 0 ||
      label_dim == 0 || groups == 0 || diffusion_steps == 0) {
    throw std::invalid_argument("DenoiserConfig: sizes must be positive");
  }
  if (base_channels % 2 != 0) {
    throw std::invalid_argument("DenoiserConfig: base channels must be even");
  }
  const std::size_t factor = std::size_t{1} << depth;
  if (latent_size == 0 || latent_size % factor != 0) {
    throw std::invalid_argument("DenoiserConfig: latent size " + std::to_string(latent_size) +
                                " not divisible by 2^depth = " + std::to_string(factor));
  }
  for (std::size_t l = 0; l <= depth; ++l) {
    const std::size_t c = level_channels(l);
    if (c % heads != 0) {
      throw std::invalid_argument("DenoiserConfig: " + std::to_string(heads) +
                                  " heads do not divide width " + std::to_string(c));
    }
    if (c % groups != 0) {
      throw std::invalid_argument("DenoiserConfig: " + std::to_string(groups) +
                                  " groups do not divide width " + std::to_string(c));
    }
  }
}

void LabelMask::validate(std::size_t slots) const {
  if (labels.size() != slots || no_label.size() != slots) {
    throw std::invalid_argument("LabelMask: expected " + std::to_string(slots) + " slots");
  }
  for (int l : labels)
    if (l != 0 && l != 1) throw std::invalid_argument("LabelMask: labels must be 0 or 1");
}

namespace {

enum class Init { kHe, kFanInUniform, kZero, kOne, kSmallUniform };

struct ParamSpec {
  Shape shape;
  Init init;
  std::size_t fan_in;
};

class ArchitectureBuilder {
 public:
  explicit ArchitectureBuilder(const DenoiserConfig& c) : c_(c) {}

  std::map<std::string, ParamSpec> build() {
    const std::size_t base = c_.base_channels, tdim = c_.time_dim();
    linear("time.lin1", base, tdim);
    linear("time.lin2", tdim, tdim);
    conv("conv_in", 3 * c_.latent_channels, c_.level_channels(0), 3);
    for (std::size_t l = 0; l < c_.depth; ++l) {
      const std::string p = "down" + std::to_string(l);
      const std::size_t ch = c_.level_channels(l);
      res(p + ".res", ch, ch);
      attn(p + ".attn", ch, ch);
      conv(p + ".down", ch, c_.level_channels(l + 1), 3);
    }
    const std::size_t mid = c_.level_channels(c_.depth);
    res("mid.res", mid, mid);
    attn("mid.attn", mid, mid);
    attn("mid.cross", mid, c_.label_dim);
    temporal("mid.temporal", mid);
    for (std::size_t l = c_.depth; l-- > 0;) {
      const std::string p = "up" + std::to_string(l);
      const std::size_t ch = c_.level_channels(l);
      conv(p + ".up", c_.level_channels(l + 1), ch, 3);
      res(p + ".res", 2 * ch, ch);
      attn(p + ".attn", ch, ch);
      if (c_.temporal_placement == TemporalPlacement::kMidAndUp) temporal(p + ".temporal", ch);
    }
    norm("out.gn", c_.level_channels(0));
    conv("out.conv", c_.level_channels(0), c_.latent_channels, 3);
    specs_["label.embed"] = {Shape{3, c_.label_dim}, Init::kSmallUniform, 0};
    return specs_;
  }

 private:
  void linear(const std::string& p, std::size_t in, std::size_t out, bool bias = true) {
    specs_[p + ".w"] = {Shape{in, out}, Init::kFanInUniform, in};
    if (bias) specs_[p + ".b"] = {Shape{out}, Init::kZero, in};
  }
  void conv(const std::string& p, std::size_t in, std::size_t out, std::size_t k) {
    specs_[p + ".w"] = {Shape{out, in, k, k}, Init::kHe, in * k * k};
    specs_[p + ".b"] = {Shape{out}, Init::kZero, in * k * k};
  }
  void norm(const std::string& p, std::size_t c) {
    specs_[p + ".g"] = {Shape{c}, Init::kOne, 0};
    specs_[p + ".b"] = {Shape{c}, Init::kZero, 0};
  }
  void res(const std::string& p, std::size_t in, std::size_t out) {
    norm(p + ".gn1", in);
    conv(p + ".conv1", in, out, 3);
    linear(p + ".temb", c_.time_dim(), out);
    norm(p + ".gn2", out);
    conv(p + ".conv2", out, out, 3);
    if (in != out) conv(p + ".skip", in, out, 1);
  }
  void attn(const std::string& p, std::size_t c, std::size_t kv) {
    norm(p + ".gn", c);
    linear(p + ".q", c, c, false);
    linear(p + ".k", kv, c, false);
    linear(p + ".v", kv, c, false);
    linear(p + ".o", c, c);
  }
  void temporal(const std::string& p, std::size_t c) {
    attn(p, c, c);
    if (c_.temporal_positional) specs_[p + ".pos"] = {Shape{c_.frames, c}, Init::kSmallUniform, 0};
  }

  const DenoiserConfig& c_;
  std::map<std::string, ParamSpec> specs_;
};

}  // namespace

ParamStore<float> init_model(const DenoiserConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  ParamStore<float> params;
  for (const auto& [name, spec] : ArchitectureBuilder(config).build()) {
    Tensor<float> t(spec.shape);
    switch (spec.init) {
      case Init::kHe: {
        std::normal_distribution<double> d(0.0, std::sqrt(2.0 / spec.fan_in));
        for (auto& v : t.data()) v = static_cast<float>(d(rng));
        break;
      }
      case Init::kFanInUniform: {
        const double bound = 1.0 / std::sqrt(static_cast<double>(spec.fan_in));
        std::uniform_real_distribution<double> d(-bound, bound);
        for (auto& v : t.data()) v = static_cast<float>(d(rng));
        break;
      }
      case Init::kSmallUniform: {
        std::uniform_real_distribution<double> d(-0.1, 0.1);
        for (auto& v : t.data()) v = static_cast<float>(d(rng));
        break;
      }
      case Init::kOne:
        std::fill(t.data().begin(), t.data().end(), 1.0f);
        break;
      case Init::kZero:
        break;
    }
    params.set(name, std::move(t));
  }
  return params;
}

std::size_t expected_parameter_count(const DenoiserConfig& c) {
  c.validate();
  const std::size_t tdim = c.time_dim();
  auto lin = [](std::size_t i, std::size_t o) { return i * o + o; };
  auto conv = [](std::size_t i, std::size_t o, std::size_t k) { return o * i * k * k + o; };
  auto gn = [](std::size_t ch) { return 2 * ch; };
  auto res = [&](std::size_t i, std::size_t o) {
    return gn(i) + conv(i, o, 3) + lin(tdim, o) + gn(o) + conv(o, o, 3) +
           (i != o ? conv(i, o, 1) : 0);
  };
  auto attn = [&](std::size_t ch, std::size_t kv) {
    return gn(ch) + ch * ch + 2 * kv * ch + lin(ch, ch);
  };
  auto temporal = [&](std::size_t ch) {
    return attn(ch, ch) + (c.temporal_positional ? c.frames * ch : 0);
  };
  std::size_t n = lin(c.base_channels, tdim) + lin(tdim, tdim) +
                  conv(3 * c.latent_channels, c.level_channels(0), 3);
  for (std::size_t l = 0; l < c.depth; ++l) {
    const std::size_t ch = c.level_channels(l);
    n += res(ch, ch) + attn(ch, ch) + conv(ch, c.level_channels(l + 1), 3);
  }
  const std::size_t mid = c.level_channels(c.depth);
  n += res(mid, mid) + attn(mid, mid) + attn(mid, c.label_dim) + temporal(mid);
  for (std::size_t l = 0; l < c.depth; ++l) {
    const std::size_t ch = c.level_channels(l);
    n += conv(c.level_channels(l + 1), ch, 3) + res(2 * ch, ch) + attn(ch, ch);
    if (c.temporal_placement == TemporalPlacement::kMidAndUp) n += temporal(ch);
  }
  n += gn(c.level_channels(0)) + conv(c.level_channels(0), c.latent_channels, 3);
  n += 3 * c.label_dim;
  return n;
}

namespace {

template <typename T>
class UNet {
 public:
  UNet(Tape<T>& tape, const ParamStore<T>& params, const DenoiserConfig& config)
      : tape_(tape), params_(params), c_(config) {}

  Var<T> forward(const Var<T>& z_hat, const std::vector<std::size_t>& steps,
                 const std::vector<LabelMask>& labels, AttentionProbe<T>* probe) {
    const std::size_t F = c_.frames;
    const auto& s = z_hat.shape();
    if (s.size() != 4 || s[1] != 3 * c_.latent_channels || s[2] != c_.latent_size ||
        s[3] != c_.latent_size || s[0] == 0 || s[0] % F != 0) {
      throw ShapeError("predict_noise: input " + shape_str(s) + " does not match [B*" +
                       std::to_string(F) + ", " + std::to_string(3 * c_.latent_channels) +
                       ", " + std::to_string(c_.latent_size) + ", " +
                       std::to_string(c_.latent_size) + "]");
    }
    const std::size_t B = s[0] / F;
    if (steps.size() != B || labels.size() != B) {
      throw std::invalid_argument("predict_noise: need one step and one label mask per sequence");
    }
    std::vector<T> per_frame_steps;
    for (std::size_t t : steps) {
      if (t < 1 || t > c_.diffusion_steps) {
        throw std::out_of_range("predict_noise: step " + std::to_string(t) + " outside [1," +
                                std::to_string(c_.diffusion_steps) + "]");
      }
      per_frame_steps.insert(per_frame_steps.end(), F, static_cast<T>(t));
    }
    const auto codes = frame_codes_from_input(z_hat.value(), c_);

    auto temb = ad::time_features<T>(per_frame_steps, c_.base_channels);
    temb = linear(ad::silu(linear(temb, "time.lin1")), "time.lin2");
    auto tokens = embed_labels(tape_, params_, labels);

    auto h = conv(z_hat, "conv_in", 1, 1);
    std::vector<Var<T>> skips;
    for (std::size_t l = 0; l < c_.depth; ++l) {
      const std::string p = "down" + std::to_string(l);
      const std::size_t ch = c_.level_channels(l);
      h = resblock(h, temb, p + ".res", ch, ch);
      h = spatial_attention(h, p + ".attn");
      skips.push_back(h);
      h = conv(h, p + ".down", 2, 1);
    }
    const std::size_t mid = c_.level_channels(c_.depth);
    h = resblock(h, temb, "mid.res", mid, mid);
    h = spatial_attention(h, "mid.attn");
    h = cross_attention(h, tokens, "mid.cross");
    h = temporal(h, codes, "mid.temporal", probe);
    for (std::size_t l = c_.depth; l-- > 0;) {
      const std::string p = "up" + std::to_string(l);
      const std::size_t ch = c_.level_channels(l);
      h = conv(ad::upsample2x(h), p + ".up", 1, 1);
      h = ad::concat<T>({h, skips[l]}, 1);
      h = resblock(h, temb, p + ".res", 2 * ch, ch);
      h = spatial_attention(h, p + ".attn");
      if (c_.temporal_placement == TemporalPlacement::kMidAndUp)
        h = temporal(h, codes, p + ".temporal", probe);
    }
    return conv(ad::silu(norm(h, "out.gn")), "out.conv", 1, 1);
  }

  Var<T> temporal(const Var<T>& x, const std::vector<std::vector<SlotCode>>& codes,
                  const std::string& prefix, AttentionProbe<T>* probe) {
    if (x.value().rank() != 4) {
      throw ShapeError("temporal_attention: expected [B*F,c,h,w], got " + shape_str(x.shape()));
    }
    const std::size_t F = c_.frames, N = x.dim(0), ch = x.dim(1), H = x.dim(2),
                      W = x.dim(3), hw = H * W;
    if (N % F != 0 || codes.size() != N / F) {
      throw ShapeError("temporal_attention: " + std::to_string(codes.size()) +
                       " code lists for " + std::to_string(N) + " frames of " +
                       std::to_string(F) + " slots");
    }
    const std::size_t B = N / F;
    std::vector<std::vector<std::size_t>> known(B);
    for (std::size_t b = 0; b < B; ++b) {
      if (codes[b].size() != F) throw ShapeError("temporal_attention: code list length != F");
      for (std::size_t f = 0; f < F; ++f)
        if (codes[b][f] == SlotCode::kPresent) known[b].push_back(f);
      if (known[b].empty()) {
        throw std::invalid_argument("temporal_attention: sequence " + std::to_string(b) +
                                    " has no known frame");
      }
    }
    auto xn = norm(x, prefix + ".gn");
    if (c_.temporal_positional) {
      auto pos = ad::reshape(param(prefix + ".pos"), Shape{1, F, ch, 1});
      pos = ad::expand(ad::expand(pos, 0, B), 3, hw);
      xn = ad::add(xn, ad::reshape(pos, Shape{N, ch, H, W}));
    }
    if (c_.temporal_mode == TemporalMode::kMaskedKv) {
      auto tokens = ad::reshape(ad::permute(ad::reshape(xn, Shape{B, F, ch, hw}), {0, 3, 1, 2}),
                                Shape{B * hw, F, ch});
      std::vector<std::uint8_t> mask(B * hw * F);
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t site = 0; site < hw; ++site)
          for (std::size_t f = 0; f < F; ++f)
            mask[(b * hw + site) * F + f] = codes[b][f] == SlotCode::kPresent;
      auto a = attention(tokens, tokens, prefix, &mask, probe);
      auto back = ad::reshape(ad::permute(ad::reshape(a, Shape{B, hw, F, ch}), {0, 2, 3, 1}),
                              Shape{N, ch, H, W});
      return ad::add(x, back);
    }
    std::vector<Var<T>> parts;
    for (std::size_t b = 0; b < B; ++b) {
      auto xb = B == 1 ? x : ad::slice(x, 0, b * F, (b + 1) * F);
      auto xnb = B == 1 ? xn : ad::slice(xn, 0, b * F, (b + 1) * F);
      const auto& idx = known[b];
      const std::size_t K = idx.size();
      auto sel = ad::index_select(xnb, 0, idx);
      auto tokens = ad::permute(ad::reshape(sel, Shape{K, ch, hw}), {2, 0, 1});
      auto a = attention(tokens, tokens, prefix, nullptr, probe);
      auto back = ad::reshape(ad::permute(a, {1, 2, 0}), Shape{K, ch, H, W});
      auto updated = ad::add(ad::index_select(xb, 0, idx), back);
      parts.push_back(ad::index_scatter(xb, 0, idx, updated));
    }
    return B == 1 ? parts[0] : ad::concat(parts, 0);
  }

 private:
  Var<T> param(const std::string& name) { return tape_.param(params_, name); }

  Var<T> linear(const Var<T>& x, const std::string& prefix, bool bias = true) {
    auto y = ad::matmul(x, param(prefix + ".w"));
    if (!bias) return y;
    const std::size_t out = y.dim(1);
    return ad::add(y, ad::expand(ad::reshape(param(prefix + ".b"), Shape{1, out}), 0, y.dim(0)));
  }

  Var<T> conv(const Var<T>& x, const std::string& prefix, std::size_t stride, std::size_t pad) {
    auto w = param(prefix + ".w");
    const std::size_t k = w.dim(2);
    return ad::conv2d(x, w, param(prefix + ".b"), stride, k == 1 ? 0 : pad);
  }

  Var<T> norm(const Var<T>& x, const std::string& prefix) {
    return ad::group_norm(x, param(prefix + ".g"), param(prefix + ".b"), c_.groups);
  }

  Var<T> resblock(const Var<T>& x, const Var<T>& temb, const std::string& prefix,
                  std::size_t in, std::size_t out) {
    const std::size_t N = x.dim(0), H = x.dim(2), W = x.dim(3);
    auto h = conv(ad::silu(norm(x, prefix + ".gn1")), prefix + ".conv1", 1, 1);
    auto t = linear(ad::silu(temb), prefix + ".temb");
    t = ad::expand(ad::expand(ad::reshape(t, Shape{N, out, 1, 1}), 2, H), 3, W);
    h = ad::add(h, t);
    h = conv(ad::silu(norm(h, prefix + ".gn2")), prefix + ".conv2", 1, 1);
    auto skip = in != out ? conv(x, prefix + ".skip", 1, 0) : x;
    return ad::add(skip, h);
  }

  // q_tokens [S, Lq, c], kv_tokens [S, Lk, kv]; key_mask has S*Lk entries.
  Var<T> attention(const Var<T>& q_tokens, const Var<T>& kv_tokens, const std::string& prefix,
                   const std::vector<std::uint8_t>* key_mask, AttentionProbe<T>* probe) {
    const std::size_t S = q_tokens.dim(0), Lq = q_tokens.dim(1), ch = q_tokens.dim(2);
    const std::size_t Lk = kv_tokens.dim(1), kv = kv_tokens.dim(2);
    const std::size_t H = c_.heads, dh = ch / H;
    auto q = linear(ad::reshape(q_tokens, Shape{S * Lq, ch}), prefix + ".q", false);
    auto k = linear(ad::reshape(kv_tokens, Shape{S * Lk, kv}), prefix + ".k", false);
    auto v = linear(ad::reshape(kv_tokens, Shape{S * Lk, kv}), prefix + ".v", false);
    auto qh = ad::reshape(ad::permute(ad::reshape(q, Shape{S, Lq, H, dh}), {0, 2, 1, 3}),
                          Shape{S * H, Lq, dh});
    auto kt = ad::reshape(ad::permute(ad::reshape(k, Shape{S, Lk, H, dh}), {0, 2, 3, 1}),
                          Shape{S * H, dh, Lk});
    auto vh = ad::reshape(ad::permute(ad::reshape(v, Shape{S, Lk, H, dh}), {0, 2, 1, 3}),
                          Shape{S * H, Lk, dh});
    auto logits = ad::scale(ad::matmul(qh, kt), static_cast<T>(1.0 / std::sqrt(double(dh))));
    Var<T> weights;
    if (key_mask) {
      std::vector<std::uint8_t> per_head(S * H * Lk);
      for (std::size_t s = 0; s < S; ++s)
        for (std::size_t hd = 0; hd < H; ++hd)
          std::copy_n(key_mask->begin() + s * Lk, Lk, per_head.begin() + (s * H + hd) * Lk);
      weights = ad::masked_softmax(logits, per_head);
    } else {
      weights = ad::softmax(logits, 2);
    }
    if (probe) probe->push_back(weights.value());
    auto o = ad::matmul(weights, vh);
    o = ad::reshape(ad::permute(ad::reshape(o, Shape{S, H, Lq, dh}), {0, 2, 1, 3}),
                    Shape{S * Lq, ch});
    return ad::reshape(linear(o, prefix + ".o"), Shape{S, Lq, ch});
  }

  Var<T> spatial_attention(const Var<T>& x, const std::string& prefix) {
    const std::size_t N = x.dim(0), ch = x.dim(1), H = x.dim(2), W = x.dim(3);
    auto tokens = ad::permute(ad::reshape(norm(x, prefix + ".gn"), Shape{N, ch, H * W}), {0, 2, 1});
    auto a = attention(tokens, tokens, prefix, nullptr, nullptr);
    return ad::add(x, ad::reshape(ad::permute(a, {0, 2, 1}), Shape{N, ch, H, W}));
  }

  Var<T> cross_attention(const Var<T>& x, const Var<T>& label_tokens, const std::string& prefix) {
    const std::size_t N = x.dim(0), ch = x.dim(1), H = x.dim(2), W = x.dim(3);
    auto tokens = ad::permute(ad::reshape(norm(x, prefix + ".gn"), Shape{N, ch, H * W}), {0, 2, 1});
    auto a = attention(tokens, label_tokens, prefix, nullptr, nullptr);
    return ad::add(x, ad::reshape(ad::permute(a, {0, 2, 1}), Shape{N, ch, H, W}));
  }

  Tape<T>& tape_;
  const ParamStore<T>& params_;
  const DenoiserConfig& c_;
};

}  // namespace

template <typename T>
Var<T> embed_labels(Tape<T>& tape, const ParamStore<T>& params,
                    const std::vector<LabelMask>& labels) {
  std::vector<std::size_t> idx;
  for (const auto& m : labels) {
    m.validate(m.labels.size());
    for (std::size_t f = 0; f < m.slots(); ++f)
      idx.push_back(m.no_label[f] ? kNullLabelToken : static_cast<std::size_t>(m.labels[f]));
  }
  auto table = tape.param(params, "label.embed");
  const std::size_t d = table.dim(1);
  return ad::reshape(ad::embedding(table, idx), Shape{idx.size(), 1, d});
}

template <typename T>
std::vector<std::vector<SlotCode>> frame_codes_from_input(const Tensor<T>& z_hat,
                                                          const DenoiserConfig& config) {
  const std::size_t F = config.frames, C = config.latent_channels;
  if (z_hat.rank() != 4 || z_hat.dim(1) != 3 * C || z_hat.dim(0) % F != 0) {
    throw ShapeError("frame codes: input " + shape_str(z_hat.shape()) +
                     " is not a [B*F, 3C', h, w] denoiser input");
  }
  const std::size_t B = z_hat.dim(0) / F;
  std::vector<std::vector<SlotCode>> codes(B, std::vector<SlotCode>(F));
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t f = 0; f < F; ++f) {
      const T v = z_hat.at(b * F + f, C, 0, 0);
      if (v == T(1)) {
        codes[b][f] = SlotCode::kPresent;
      } else if (v == T(0)) {
        codes[b][f] = SlotCode::kHidden;
      } else if (v == T(255) || v == T(-1)) {
        codes[b][f] = SlotCode::kMissing;
      } else {
        throw std::invalid_argument("frame codes: mask channel value " + std::to_string(v) +
                                    " is not a slot code");
      }
    }
  return codes;
}

template <typename T>
Var<T> temporal_attention(Tape<T>& tape, const ParamStore<T>& params, const std::string& prefix,
                          const Var<T>& hidden,
                          const std::vector<std::vector<SlotCode>>& frame_codes,
                          const DenoiserConfig& config, AttentionProbe<T>* probe) {
  return UNet<T>(tape, params, config).temporal(hidden, frame_codes, prefix, probe);
}

template <typename T>
Var<T> predict_noise(Tape<T>& tape, const ParamStore<T>& params, const DenoiserConfig& config,
                     const Var<T>& z_hat, const std::vector<std::size_t>& steps,
                     const std::vector<LabelMask>& labels, AttentionProbe<T>* temporal_probe) {
  config.validate();
  for (const auto& m : labels) m.validate(config.frames);
  return UNet<T>(tape, params, config).forward(z_hat, steps, labels, temporal_probe);
}

#define SEQDIFF_INSTANTIATE(T)                                                              \
  template Var<T> embed_labels(Tape<T>&, const ParamStore<T>&,                              \
                               const std::vector<LabelMask>&);                              \
  template std::vector<std::vector<SlotCode>> frame_codes_from_input(const Tensor<T>&,      \
                                                                     const DenoiserConfig&); \
  template Var<T> temporal_attention(Tape<T>&, const ParamStore<T>&, const std::string&,    \
                                     const Var<T>&,                                         \
                                     const std::vector<std::vector<SlotCode>>&,             \
                                     const DenoiserConfig&, AttentionProbe<T>*);            \
  template Var<T> predict_noise(Tape<T>&, const ParamStore<T>&, const DenoiserConfig&,      \
                                const Var<T>&, const std::vector<std::size_t>&,             \
                                const std::vector<LabelMask>&, AttentionProbe<T>*);

SEQDIFF_INSTANTIATE(float)
SEQDIFF_INSTANTIATE(double)

#undef SEQDIFF_INSTANTIATE

}  // namespace seqdiff
