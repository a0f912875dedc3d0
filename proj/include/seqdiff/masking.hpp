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

// Time-aligned slot masks and the conditioning tensors built from them.
//
// Slot codes are normative: Present = 1, Missing = 255, Hidden = 0. The
// denoiser input is the channel concatenation (Z_t, M_hat, Z_M), each block
// C' channels wide, in that order.

#ifndef SEQDIFF_MASKING_HPP_
#define SEQDIFF_MASKING_HPP_

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "seqdiff/tensor.hpp"

namespace seqdiff {

enum class SlotCode : std::uint8_t { kHidden = 0, kPresent = 1, kMissing = 255 };

inline bool is_valid_code(double v) { return v == 0.0 || v == 1.0 || v == 255.0; }

struct TimeAlignedMask {
  std::vector<SlotCode> codes;
  int window_start_year = 0;
  int years_per_slot = 1;

  std::size_t slots() const { return codes.size(); }
  std::size_t count(SlotCode code) const {
    std::size_t n = 0;
    for (SlotCode c : codes) n += c == code;
    return n;
  }
  int slot_year(std::size_t slot) const {
    return window_start_year + static_cast<int>(slot) * years_per_slot;
  }
  // Slot holding `year`, or nullopt when the year lies outside the window.
  std::optional<std::size_t> slot_of(int year) const {
    if (year < window_start_year) return std::nullopt;
    const auto slot = static_cast<std::size_t>((year - window_start_year) / years_per_slot);
    if (slot >= codes.size()) return std::nullopt;
    return slot;
  }
  std::optional<std::size_t> hidden_slot() const {
    for (std::size_t i = 0; i < codes.size(); ++i)
      if (codes[i] == SlotCode::kHidden) return i;
    return std::nullopt;
  }
  std::vector<std::uint8_t> known() const {
    std::vector<std::uint8_t> k(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i) k[i] = codes[i] == SlotCode::kPresent;
    return k;
  }
  std::vector<std::uint8_t> raw() const {
    return std::vector<std::uint8_t>(reinterpret_cast<const std::uint8_t*>(codes.data()),
                                     reinterpret_cast<const std::uint8_t*>(codes.data()) +
                                         codes.size());
  }
  friend bool operator==(const TimeAlignedMask&, const TimeAlignedMask&) = default;
};

// First year of the F * years_per_slot window that ends at `target_year`.
inline int window_start_for(int target_year, std::size_t slots, int years_per_slot) {
  return target_year - static_cast<int>(slots) * years_per_slot + 1;
}

inline TimeAlignedMask align(const std::vector<int>& years, int window_start_year,
                             std::size_t slots, int years_per_slot = 1) {
  if (slots == 0 || years_per_slot <= 0) {
    throw std::invalid_argument("align: need F >= 1 and years_per_slot >= 1");
  }
  TimeAlignedMask mask;
  mask.codes.assign(slots, SlotCode::kMissing);
  mask.window_start_year = window_start_year;
  mask.years_per_slot = years_per_slot;
  std::vector<int> owner(slots, 0);
  for (int year : years) {
    auto slot = mask.slot_of(year);
    if (!slot) {
      throw std::out_of_range("align: year " + std::to_string(year) +
                              " outside window starting " +
                              std::to_string(window_start_year));
    }
    if (mask.codes[*slot] == SlotCode::kPresent) {
      throw std::invalid_argument("align: years " + std::to_string(owner[*slot]) +
                                  " and " + std::to_string(year) +
                                  " collide in slot " + std::to_string(*slot));
    }
    mask.codes[*slot] = SlotCode::kPresent;
    owner[*slot] = year;
  }
  return mask;
}

// Hides one uniformly chosen Present slot.
template <typename Rng>
TimeAlignedMask hide_random_frame(const TimeAlignedMask& mask, Rng& rng) {
  std::vector<std::size_t> present;
  for (std::size_t i = 0; i < mask.slots(); ++i)
    if (mask.codes[i] == SlotCode::kPresent) present.push_back(i);
  if (present.size() < 2) {
    throw std::invalid_argument("hide_random_frame: need at least 2 Present slots, have " +
                                std::to_string(present.size()));
  }
  std::uniform_int_distribution<std::size_t> pick(0, present.size() - 1);
  TimeAlignedMask out = mask;
  out.codes[present[pick(rng)]] = SlotCode::kHidden;
  return out;
}

// Marks the slot to generate. Missing slots may be hidden too, which is how an
// unobserved year is requested at inference time.
inline TimeAlignedMask hide_target_slot(const TimeAlignedMask& mask, std::size_t slot) {
  if (slot >= mask.slots()) {
    throw std::out_of_range("hide_target_slot: slot " + std::to_string(slot) +
                            " out of range " + std::to_string(mask.slots()));
  }
  if (mask.codes[slot] == SlotCode::kHidden) return mask;
  if (mask.hidden_slot()) {
    throw std::invalid_argument("hide_target_slot: mask already has a Hidden slot");
  }
  TimeAlignedMask out = mask;
  out.codes[slot] = SlotCode::kHidden;
  return out;
}

// M_hat: every slot code replicated across its frame's C' x h x w block.
template <typename T>
Tensor<T> broadcast(const TimeAlignedMask& mask, const Shape& latent_shape) {
  if (latent_shape.size() != 4 || latent_shape[0] != mask.slots()) {
    throw ShapeError("broadcast: mask of " + std::to_string(mask.slots()) +
                     " slots vs latent shape " + shape_str(latent_shape));
  }
  Tensor<T> out(latent_shape);
  const std::size_t per_frame = out.size() / latent_shape[0];
  for (std::size_t f = 0; f < mask.slots(); ++f) {
    const T v = static_cast<T>(static_cast<std::uint8_t>(mask.codes[f]));
    std::fill_n(out.data().begin() + f * per_frame, per_frame, v);
  }
  return out;
}

// Z_M[i] = 0 if M_hat[i] == 0, Z_0[i] if M_hat[i] == 1, 255 otherwise.
template <typename T>
Tensor<T> truncate(const Tensor<T>& z0, const Tensor<T>& mask_hat) {
  if (z0.shape() != mask_hat.shape()) {
    throw ShapeError("truncate: latent " + shape_str(z0.shape()) + " vs mask " +
                     shape_str(mask_hat.shape()));
  }
  Tensor<T> out(z0.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T m = mask_hat[i];
    if (m == T(0)) {
      out[i] = T(0);
    } else if (m == T(1)) {
      out[i] = z0[i];
    } else if (m == T(255)) {
      out[i] = T(255);
    } else {
      throw std::invalid_argument("truncate: mask value " + std::to_string(m) +
                                  " is not a slot code");
    }
  }
  return out;
}

// Optional remap of the Missing sentinel 255 -> -1 (normalize_missing).
template <typename T>
void normalize_missing_sentinel(Tensor<T>& t) {
  for (auto& v : t.data())
    if (v == T(255)) v = T(-1);
}

template <typename T>
Tensor<T> assemble_input(const Tensor<T>& zt, const Tensor<T>& mask_hat,
                         const Tensor<T>& z_masked) {
  if (zt.rank() != 4 || zt.shape() != mask_hat.shape() ||
      zt.shape() != z_masked.shape()) {
    throw ShapeError("assemble_input: shapes " + shape_str(zt.shape()) + ", " +
                     shape_str(mask_hat.shape()) + ", " + shape_str(z_masked.shape()) +
                     " must agree");
  }
  const std::size_t F = zt.dim(0), C = zt.dim(1), plane = zt.dim(2) * zt.dim(3);
  const std::size_t block = C * plane;
  Tensor<T> out(Shape{F, 3 * C, zt.dim(2), zt.dim(3)});
  for (std::size_t f = 0; f < F; ++f) {
    auto dst = out.data().begin() + f * 3 * block;
    std::copy_n(zt.data().begin() + f * block, block, dst);
    std::copy_n(mask_hat.data().begin() + f * block, block, dst + block);
    std::copy_n(z_masked.data().begin() + f * block, block, dst + 2 * block);
  }
  return out;
}

template <typename T>
struct ConditioningBundle {
  Tensor<T> mask_hat;
  Tensor<T> z_masked;
  std::vector<double> loss_weights;  // per slot; 0 for Missing
};

// Builds M_hat, Z_M and the per-slot loss weights for a latent sequence.
template <typename T>
ConditioningBundle<T> make_conditioning(const Tensor<T>& z0, const TimeAlignedMask& mask,
                                        bool normalize_missing = false,
                                        double hidden_weight = 1.0) {
  ConditioningBundle<T> b;
  b.mask_hat = broadcast<T>(mask, z0.shape());
  b.z_masked = truncate(z0, b.mask_hat);
  if (normalize_missing) {
    normalize_missing_sentinel(b.mask_hat);
    normalize_missing_sentinel(b.z_masked);
  }
  b.loss_weights.resize(mask.slots());
  for (std::size_t f = 0; f < mask.slots(); ++f) {
    switch (mask.codes[f]) {
      case SlotCode::kMissing: b.loss_weights[f] = 0.0; break;
      case SlotCode::kHidden: b.loss_weights[f] = hidden_weight; break;
      case SlotCode::kPresent: b.loss_weights[f] = 1.0; break;
    }
  }
  return b;
}

}  // namespace seqdiff

#endif  // SEQDIFF_MASKING_HPP_
