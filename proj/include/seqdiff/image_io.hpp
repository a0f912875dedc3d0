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

// Portable graymap/pixmap IO. Pixels are floats in [0,1] stored as 8-bit.

#ifndef SEQDIFF_IMAGE_IO_HPP_
#define SEQDIFF_IMAGE_IO_HPP_

#include <string>

#include "seqdiff/tensor.hpp"

namespace seqdiff {

// image: [C,H,W] with C == 1 (P5) or C == 3 (P6). Values are clamped and
// rounded to the nearest 1/255.
void write_pnm(const std::string& path, const Tensor<float>& image);
Tensor<float> read_pnm(const std::string& path);

// Rounds every value to the 8-bit grid used by write_pnm.
Tensor<float> quantize8(const Tensor<float>& image);

}  // namespace seqdiff

#endif  // SEQDIFF_IMAGE_IO_HPP_
