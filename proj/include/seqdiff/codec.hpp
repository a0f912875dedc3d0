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

// Space-to-depth latent codec. Each k x k pixel block of a frame becomes k*k
// latent channels; the mapping is a permutation, so decode(encode(x)) == x
// bit for bit.
//
// Channel map: latent(f, c*k*k + dy*k + dx, i, j) = image(f, c, i*k+dy, j*k+dx)

#ifndef SEQDIFF_CODEC_HPP_
#define SEQDIFF_CODEC_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "seqdiff/tensor.hpp"

namespace seqdiff {

struct CodecConfig {
  std::size_t reduction = 4;  // k
  std::size_t channels = 1;   // C
  std::size_t height = 32;    // H
  std::size_t width = 32;     // W

  std::size_t latent_channels() const { return channels * reduction * reduction; }
  std::size_t latent_height() const { return height / reduction; }
  std::size_t latent_width() const { return width / reduction; }

  void validate() const {
    if (reduction == 0 || channels == 0) {
      throw std::invalid_argument("CodecConfig: reduction and channels must be positive");
    }
    if (height % reduction != 0 || width % reduction != 0) {
      throw std::invalid_argument(
          "CodecConfig: image " + std::to_string(height) + "x" +
          std::to_string(width) + " not divisible by reduction " +
          std::to_string(reduction));
    }
  }
};

// F slots of frames [F, C, H, W]; slots with present[f] == false carry no
// image and are zero in the latent.
struct ImageSequence {
  Tensor<float> frames;
  std::vector<bool> present;
  std::vector<int> years;
  std::vector<int> labels;

  std::size_t slots() const { return frames.empty() ? 0 : frames.dim(0); }
};

template <typename T>
Tensor<T> encode_frames(const Tensor<T>& frames, std::size_t k,
                        const std::vector<bool>& present = {}) {
  if (frames.rank() != 4) {
    throw ShapeError("encode: expected [F,C,H,W], got " + shape_str(frames.shape()));
  }
  const std::size_t F = frames.dim(0), C = frames.dim(1), H = frames.dim(2),
                    W = frames.dim(3);
  if (k == 0 || H % k != 0 || W % k != 0) {
    throw ShapeError("encode: frame " + std::to_string(H) + "x" +
                     std::to_string(W) + " not divisible by k=" + std::to_string(k));
  }
  if (!present.empty() && present.size() != F) {
    throw ShapeError("encode: presence mask length does not match frame count");
  }
  const std::size_t h = H / k, w = W / k;
  Tensor<T> out(Shape{F, C * k * k, h, w});
  for (std::size_t f = 0; f < F; ++f) {
    if (!present.empty() && !present[f]) continue;
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t dy = 0; dy < k; ++dy)
        for (std::size_t dx = 0; dx < k; ++dx)
          for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = 0; j < w; ++j)
              out.at(f, c * k * k + dy * k + dx, i, j) =
                  frames.at(f, c, i * k + dy, j * k + dx);
  }
  return out;
}

template <typename T>
Tensor<T> decode_frames(const Tensor<T>& latent, std::size_t k) {
  if (latent.rank() != 4) {
    throw ShapeError("decode: expected [F,C',h,w], got " + shape_str(latent.shape()));
  }
  const std::size_t F = latent.dim(0), Cl = latent.dim(1), h = latent.dim(2),
                    w = latent.dim(3);
  if (k == 0 || Cl % (k * k) != 0) {
    throw ShapeError("decode: " + std::to_string(Cl) +
                     " latent channels not divisible by k^2=" + std::to_string(k * k));
  }
  const std::size_t C = Cl / (k * k);
  Tensor<T> out(Shape{F, C, h * k, w * k});
  for (std::size_t f = 0; f < F; ++f)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t dy = 0; dy < k; ++dy)
        for (std::size_t dx = 0; dx < k; ++dx)
          for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = 0; j < w; ++j)
              out.at(f, c, i * k + dy, j * k + dx) =
                  latent.at(f, c * k * k + dy * k + dx, i, j);
  return out;
}

inline Tensor<float> encode(const ImageSequence& sequence, const CodecConfig& config) {
  config.validate();
  const auto& s = sequence.frames.shape();
  if (s.size() != 4 || s[1] != config.channels || s[2] != config.height ||
      s[3] != config.width) {
    throw ShapeError("encode: sequence frames " + shape_str(s) +
                     " do not match codec config");
  }
  for (float v : sequence.frames.data())
    if (!(v >= 0.0f && v <= 1.0f))
      throw std::domain_error("encode: pixel value outside [0,1]");
  return encode_frames(sequence.frames, config.reduction, sequence.present);
}

inline Tensor<float> decode(const Tensor<float>& latent, const CodecConfig& config) {
  if (latent.rank() == 4 && latent.dim(1) != config.latent_channels()) {
    throw ShapeError("decode: latent channels " + std::to_string(latent.dim(1)) +
                     " differ from codec's " + std::to_string(config.latent_channels()));
  }
  return decode_frames(latent, config.reduction);
}

}  // namespace seqdiff

#endif  // SEQDIFF_CODEC_HPP_
