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

// Image-quality metrics, VCDR measurement and the frame classifier used for
// attribute matching.

#ifndef SEQDIFF_METRICS_HPP_
#define SEQDIFF_METRICS_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "seqdiff/autodiff.hpp"
#include "seqdiff/tensor.hpp"

namespace seqdiff {

inline constexpr double kPsnrCap = 99.0;

// Images of equal shape with values in [0,1].
double psnr(const Tensor<float>& a, const Tensor<float>& b);

// Mean SSIM over all valid window positions with a uniform window; images are
// [H,W] or [C,H,W] (channels averaged). C1 = 0.01^2, C2 = 0.03^2.
double ssim(const Tensor<float>& a, const Tensor<float>& b, std::size_t window = 7);

class UngradableFrame : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VcdrResult {
  double vcdr = 0.0;
  double disc_extent = 0.0;  // pixels, along the measured column
  double cup_extent = 0.0;
  double disc_area = 0.0;    // pixels in the disc component
  double threshold = 0.0;    // disc-size dependent glaucoma threshold
  bool glaucoma = false;
};

// Disc-size banded threshold: 0.69 (small), 0.72 (medium), 0.76 (large).
// Areas in pixels are mapped to mm^2 with a fixed scale per 32x32 canvas.
double vcdr_threshold(double disc_area_px, std::size_t image_size);

// Threshold segmentation of a [C,H,W] or [H,W] image (disc >= 0.5, cup >= 0.8
// after 3x3 smoothing, largest components) followed by sub-pixel vertical
// extents along the disc's central column.
VcdrResult vcdr(const Tensor<float>& image);

// ---- frame classifier ----------------------------------------------------

struct ClassifierConfig {
  std::size_t steps = 400;
  std::size_t batch = 32;
  double learning_rate = 2e-3;
  bool balanced_sampling = true;
  double accuracy_floor = 0.95;  // on balanced held-out accuracy; <= 0 disables
  std::uint64_t seed = 0;
};

struct ClassifierReport {
  double train_accuracy = 0.0;
  double heldout_accuracy = 0.0;  // balanced
  double final_loss = 0.0;
};

class AccuracyFloorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ParamStore<float> init_classifier(std::size_t channels, std::size_t image_size,
                                  std::uint64_t seed);

// images [N,C,H,W] -> logits [N,2].
template <typename T>
Var<T> classifier_logits(Tape<T>& tape, const ParamStore<T>& params, const Var<T>& images);

std::vector<int> classify(const ParamStore<float>& params, const Tensor<float>& images);

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);
// Mean of per-class recalls over the classes present in `truth`.
double balanced_accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);

// Trains on (train_images, train_labels); held-out accuracy is measured on
// the second pair. Throws AccuracyFloorError with diagnostics when the floor
// is enabled and missed.
ParamStore<float> train_classifier(const Tensor<float>& train_images,
                                   const std::vector<int>& train_labels,
                                   const Tensor<float>& heldout_images,
                                   const std::vector<int>& heldout_labels,
                                   const ClassifierConfig& config,
                                   ClassifierReport* report = nullptr);

// Fraction of frames whose predicted label equals the intended label.
double ams(const std::vector<int>& predicted, const std::vector<int>& intended);

}  // namespace seqdiff

#endif  // SEQDIFF_METRICS_HPP_
