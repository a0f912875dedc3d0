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

// Procedural fundus-like eye sequences with known disc/cup geometry.
//
// Intensity bands are disjoint: background [0.15, 0.35] with a linear
// gradient, vessels <= 0.1, disc [0.55, 0.75], cup [0.85, 1.0]. Disc and cup
// are concentric ellipses; the true VCDR of a frame is cup_ry / disc_ry.
// Pixel (x, y) covers [x, x+1) x [y, y+1); edges are anti-aliased by
// supersampling.

#ifndef SEQDIFF_FUNDUS_HPP_
#define SEQDIFF_FUNDUS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "seqdiff/tensor.hpp"

namespace seqdiff {

inline constexpr const char* kRendererVersion = "fundus-2";

struct FrameGeometry {
  double cx = 16.5, cy = 16.5;
  double disc_rx = 9.0, disc_ry = 10.5;
  double cup_rx = 4.0, cup_ry = 5.0;
};

struct Vessel {
  bool vertical = false;  // x = f(y) instead of y = f(x)
  double offset = 0.0, amplitude = 0.0, frequency = 0.0, phase = 0.0;
  double half_width = 0.6;
};

struct EyePhenotype {
  double cx = 16.5, cy = 16.5;
  double disc_rx = 9.0, disc_ry = 10.5;
  double cup_rx_scale = 0.8;  // cup_rx = r * cup_rx_scale * disc_rx
  double r0 = 0.4;
  bool time_variant = false;
  double rate = 0.0;  // ratio per year, time-variant only
  int year0 = 0;      // first visit year
  std::uint64_t jitter_seed = 0;
  double background = 0.25, gradient_x = 0.0, gradient_y = 0.0;
  double disc_level = 0.65, cup_level = 0.92, vessel_level = 0.08;
  std::vector<Vessel> vessels;

  // Cup-to-disc vertical ratio at `year`.
  double ratio_at(int year) const;
  FrameGeometry geometry_at(int year) const;
  // Throws if the disc (plus the background margin VCDR needs) leaves the
  // canvas or the cup is not strictly inside the disc.
  void validate(std::size_t size) const;
};

inline constexpr double kMaxRatio = 0.9;
inline constexpr double kInvariantJitter = 0.01;
// Vessels stay this many pixels outside the disc ellipse.
inline constexpr double kVesselMargin = 5.0;

// [C, size, size] raster in [0,1].
Tensor<float> render_geometry(const EyePhenotype& eye, const FrameGeometry& g,
                              std::size_t size, std::size_t channels = 1);

struct RenderedFrame {
  Tensor<float> image;
  double vcdr = 0.0;
};

RenderedFrame render_frame(const EyePhenotype& eye, int year, std::size_t size,
                           std::size_t channels = 1);

struct FundusConfig {
  std::size_t image_size = 32;
  std::size_t channels = 1;
  double tau = 0.7;
  std::size_t train_eyes = 64, val_eyes = 8, test_eyes = 16;
  double time_variant_fraction = 0.2;
  std::size_t min_visits = 6, max_visits = 10;
  int min_gap = 1, max_gap = 4;
  int first_year = 1990;
  std::uint64_t seed = 0;

  void validate() const;
};

struct FrameRecord {
  int year = 0;
  std::string file;  // relative to the dataset directory
  int label = 0;     // 1 = glaucoma
  double vcdr = 0.0;
};

struct SequenceRecord {
  std::string eye_id;
  std::string split;  // train | val | test
  EyePhenotype phenotype;
  std::vector<FrameRecord> frames;
};

struct DatasetManifest {
  std::size_t image_size = 32;
  std::size_t channels = 1;
  double tau = 0.7;
  std::string renderer_version = kRendererVersion;
  std::uint64_t seed = 0;
  std::vector<SequenceRecord> sequences;

  std::vector<const SequenceRecord*> split(const std::string& name) const;
  std::string to_json() const;
  static DatasetManifest from_json(const std::string& text);
  void save(const std::string& path) const;
  static DatasetManifest load(const std::string& path);
};

// Number of time-variant eyes in a split of n eyes.
std::size_t time_variant_count(std::size_t n, double fraction);

// Samples phenotypes and visit schedules; no files are touched.
DatasetManifest make_manifest(const FundusConfig& config);

// make_manifest + renders every frame under `directory` and writes
// manifest.json there.
DatasetManifest gen_dataset(const FundusConfig& config, const std::string& directory);

// One sequence loaded from disk: frames [n, C, H, W] in visit order.
struct LoadedSequence {
  const SequenceRecord* record = nullptr;
  Tensor<float> frames;
  std::vector<int> years;
  std::vector<int> labels;
  std::vector<double> vcdr;
};

std::vector<LoadedSequence> load_split(const DatasetManifest& manifest,
                                       const std::string& directory,
                                       const std::string& split);
// Sequences point into the manifest, so it has to outlive them.
std::vector<LoadedSequence> load_split(DatasetManifest&&, const std::string&,
                                       const std::string&) = delete;

}  // namespace seqdiff

#endif  // SEQDIFF_FUNDUS_HPP_
