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

#include "seqdiff/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace seqdiff {
namespace {

std::uint8_t to_byte(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

// Skips whitespace and '#' comments in a PNM header.
void skip_space(std::istream& in) {
  while (true) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

}  // namespace

Tensor<float> quantize8(const Tensor<float>& image) {
  Tensor<float> out(image.shape());
  for (std::size_t i = 0; i < image.size(); ++i) out[i] = to_byte(image[i]) / 255.0f;
  return out;
}

void write_pnm(const std::string& path, const Tensor<float>& image) {
  if (image.rank() != 3 || (image.dim(0) != 1 && image.dim(0) != 3)) {
    throw ShapeError("write_pnm: expected [1|3,H,W], got " + shape_str(image.shape()));
  }
  const std::size_t C = image.dim(0), H = image.dim(1), W = image.dim(2);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_pnm: cannot open " + path);
  out << (C == 1 ? "P5" : "P6") << '\n' << W << ' ' << H << "\n255\n";
  std::vector<char> bytes(C * H * W);
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x)
      for (std::size_t c = 0; c < C; ++c)
        bytes[(y * W + x) * C + c] = static_cast<char>(to_byte(image[(c * H + y) * W + x]));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write_pnm: write failed for " + path);
}

Tensor<float> read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_pnm: cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P6") {
    throw std::runtime_error("read_pnm: " + path + " is not a binary PGM/PPM");
  }
  std::size_t W = 0, H = 0, maxval = 0;
  skip_space(in);
  in >> W;
  skip_space(in);
  in >> H;
  skip_space(in);
  in >> maxval;
  in.get();
  if (!in || W == 0 || H == 0 || maxval != 255) {
    throw std::runtime_error("read_pnm: unsupported header in " + path);
  }
  const std::size_t C = magic == "P5" ? 1 : 3;
  std::vector<unsigned char> bytes(C * H * W);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!in) throw std::runtime_error("read_pnm: truncated pixel data in " + path);
  Tensor<float> image(Shape{C, H, W});
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x)
      for (std::size_t c = 0; c < C; ++c)
        image[(c * H + y) * W + x] = bytes[(y * W + x) * C + c] / 255.0f;
  return image;
}

}  // namespace seqdiff
