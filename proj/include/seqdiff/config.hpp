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

// Run configuration. A single JSON document; every key has a default, and
// dotted overrides ("train.steps=200") are applied on top.

#ifndef SEQDIFF_CONFIG_HPP_
#define SEQDIFF_CONFIG_HPP_

#include <cstdint>
#include <optional>
#include <string>

#include "seqdiff/codec.hpp"
#include "seqdiff/denoiser.hpp"
#include "seqdiff/fundus.hpp"
#include "seqdiff/metrics.hpp"
#include "seqdiff/optimizer.hpp"
#include "seqdiff/scheduler.hpp"

namespace seqdiff {

struct TrainSettings {
  std::size_t steps = 3000;
  std::size_t batch_size = 4;
  std::size_t checkpoint_interval = 500;  // 0 = final checkpoint only
  double hidden_weight = 1.0;
  bool label_conditioning = true;
  bool normalize_missing = false;
};

struct GenerateSettings {
  bool replacement = true;  // re-impose noised known frames at every step
  std::size_t batch_size = 16;
};

struct EvalSettings {
  std::size_t ablation_min_seeds = 32;
  std::uint64_t seed = 1234;
};

struct AugmentSettings {
  std::size_t count = 32;          // generated glaucoma frames
  std::size_t keep_glaucoma = 4;   // real glaucoma frames kept in the imbalanced split
  int years_ahead = 2;             // target year after the last visit
};

struct RunConfig {
  std::string data_dir = "data";
  std::string run_dir = "run";
  std::optional<std::uint64_t> seed;

  FundusConfig dataset;
  std::size_t reduction = 4;
  std::size_t frames = 6;
  int years_per_slot = 1;
  std::size_t diffusion_steps = 50;
  double beta_start = 1e-4;
  double beta_end = 0.2;
  DenoiserConfig model;  // latent sizes and frame count are derived
  AdamConfig optimizer;
  TrainSettings train;
  GenerateSettings generate;
  ClassifierConfig classifier;
  EvalSettings eval;
  AugmentSettings augment;

  CodecConfig codec() const;
  DenoiserConfig denoiser() const;
  SchedulerParams schedule() const;

  // Throws std::invalid_argument naming the offending key.
  void validate(bool require_seed) const;

  std::string to_json() const;
  static RunConfig from_json(const std::string& text);
  static RunConfig load(const std::string& path);
  // key is a dotted path such as "train.steps"; value is parsed as JSON when
  // possible, otherwise taken as a string.
  void set(const std::string& key, const std::string& value);

  // Canonical JSON of everything that shapes a trained model; steps, paths
  // and the checkpoint interval are excluded so runs can be extended.
  std::string training_json() const;
  std::uint64_t training_hash() const;
};

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace seqdiff

#endif  // SEQDIFF_CONFIG_HPP_
