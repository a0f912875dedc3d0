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

// Frame-wise U-Net noise predictor with label cross-attention and temporal
// attention across the frames of each sequence.
//
// Input layout: [B*F, 3*C', h, w] frames grouped by sequence, channels
// ordered (Z_t, M_hat, Z_M). Slot codes for temporal attention are read back
// from the M_hat channels, so the input alone determines which frames are
// known.

#ifndef SEQDIFF_DENOISER_HPP_
#define SEQDIFF_DENOISER_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "seqdiff/autodiff.hpp"
#include "seqdiff/masking.hpp"

namespace seqdiff {

enum class TemporalMode {
  kMaskedKv,       // all slots query; keys/values restricted to known slots
  kRemoveReinsert  // attention among known slots only; others pass through
};

enum class TemporalPlacement {
  kMidOnly,  // temporal attention in the mid block only
  kMidAndUp  // mid block and every up level
};

const char* to_string(TemporalMode mode);
TemporalMode temporal_mode_from_string(const std::string& s);
const char* to_string(TemporalPlacement placement);
TemporalPlacement temporal_placement_from_string(const std::string& s);

struct DenoiserConfig {
  std::size_t latent_channels = 16;  // C'
  std::size_t latent_size = 8;       // h == w
  std::size_t frames = 6;            // F
  std::size_t diffusion_steps = 50;  // largest valid t
  std::size_t base_channels = 32;
  std::size_t depth = 2;
  std::size_t heads = 4;
  std::size_t label_dim = 32;
  std::size_t groups = 8;
  TemporalMode temporal_mode = TemporalMode::kMaskedKv;
  TemporalPlacement temporal_placement = TemporalPlacement::kMidOnly;
  bool temporal_positional = false;

  // Channel width at U-Net level l (0 = full resolution, depth = mid).
  std::size_t level_channels(std::size_t level) const {
    return level == 0 ? base_channels : 2 * base_channels;
  }
  std::size_t time_dim() const { return 4 * base_channels; }
  void validate() const;
};

// Per-slot labels (0 normal, 1 glaucoma); no_label slots use the null token.
struct LabelMask {
  std::vector<int> labels;
  std::vector<bool> no_label;

  static LabelMask unlabeled(std::size_t slots) {
    return LabelMask{std::vector<int>(slots, 0), std::vector<bool>(slots, true)};
  }
  std::size_t slots() const { return labels.size(); }
  void validate(std::size_t slots) const;
};

constexpr std::size_t kNullLabelToken = 2;

ParamStore<float> init_model(const DenoiserConfig& config, std::uint64_t seed);

// Closed-form parameter count of the architecture described by `config`.
std::size_t expected_parameter_count(const DenoiserConfig& config);

// Condition tokens [B*F, 1, label_dim].
template <typename T>
Var<T> embed_labels(Tape<T>& tape, const ParamStore<T>& params,
                    const std::vector<LabelMask>& labels);

// Attention weights captured for inspection, one tensor per attention call,
// each [sites*heads, queries, keys].
template <typename T>
using AttentionProbe = std::vector<Tensor<T>>;

// Temporal attention block over hidden [B*F, c, h, w]; frame_codes holds one
// F-long code list per sequence. Parameters live under `prefix`.
template <typename T>
Var<T> temporal_attention(Tape<T>& tape, const ParamStore<T>& params,
                          const std::string& prefix, const Var<T>& hidden,
                          const std::vector<std::vector<SlotCode>>& frame_codes,
                          const DenoiserConfig& config,
                          AttentionProbe<T>* probe = nullptr);

// Slot codes recovered from the M_hat channels of a denoiser input.
template <typename T>
std::vector<std::vector<SlotCode>> frame_codes_from_input(const Tensor<T>& z_hat,
                                                          const DenoiserConfig& config);

// eps_hat [B*F, C', h, w]. steps has one entry per sequence.
template <typename T>
Var<T> predict_noise(Tape<T>& tape, const ParamStore<T>& params,
                     const DenoiserConfig& config, const Var<T>& z_hat,
                     const std::vector<std::size_t>& steps,
                     const std::vector<LabelMask>& labels,
                     AttentionProbe<T>* temporal_probe = nullptr);

}  // namespace seqdiff

#endif  // SEQDIFF_DENOISER_HPP_
