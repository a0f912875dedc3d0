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

// Training, sampling, evaluation and the two downstream experiments built on
// top of the model pieces.

#ifndef SEQDIFF_PIPELINE_HPP_
#define SEQDIFF_PIPELINE_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "seqdiff/checkpoint.hpp"
#include "seqdiff/codec.hpp"
#include "seqdiff/config.hpp"
#include "seqdiff/fundus.hpp"
#include "seqdiff/masking.hpp"

namespace seqdiff {

// F slots ending at `target_year`; visits after the target are ignored.
struct Window {
  ImageSequence images;
  TimeAlignedMask mask;
  std::size_t target_slot = 0;
};

Window make_window(const LoadedSequence& seq, int target_year, const RunConfig& config);

// Visits that can end a training window (>= 2 Present slots in the window).
std::vector<std::size_t> window_end_candidates(const LoadedSequence& seq, const RunConfig& config);

// ---- training ----------------------------------------------------------------

struct TrainOutcome {
  ParamStore<float> params;
  OptimizerState<float> optimizer;
  std::vector<std::pair<std::size_t, double>> losses;  // (step, loss)
};

// Runs steps (resume.step, config.train.steps]. When run_dir is non-empty,
// writes loss.csv, periodic ckpt_<step>.bin and the final model.bin there.
TrainOutcome train_model(const RunConfig& config, const std::vector<LoadedSequence>& train_set,
                         const std::string& run_dir, const Checkpoint* resume = nullptr);

Checkpoint training_checkpoint(const RunConfig& config, const TrainOutcome& outcome);

// Rebuilds the training config stored in a checkpoint.
RunConfig checkpoint_config(const Checkpoint& ckpt);

// ---- sampling ----------------------------------------------------------------

inline constexpr int kNoLabel = -1;

struct GenerationRequest {
  const LoadedSequence* sequence = nullptr;
  int target_year = 0;
  int label = kNoLabel;  // condition of the generated slot
  std::uint64_t seed = 0;
};

// Reverse chain t = T..1 for each request's target slot; returns decoded
// frames [C,H,W] clipped to [0,1].
std::vector<Tensor<float>> generate_frames(const ParamStore<float>& params, const RunConfig& config,
                                           const std::vector<GenerationRequest>& requests);

// eps-hat for a batch of assembled inputs [n*F, 3C', h, h]; returns [n*F, C', h, h].
using NoisePredictor = std::function<Tensor<float>(const Tensor<float>& z_hat,
                                                   const std::vector<std::size_t>& steps,
                                                   const std::vector<LabelMask>& labels)>;

// Same chain with the network swapped out (tests drive it with oracles).
std::vector<Tensor<float>> generate_frames(const NoisePredictor& predict, const RunConfig& config,
                                           const std::vector<GenerationRequest>& requests);

using FrameSource = std::function<std::vector<Tensor<float>>(const std::vector<GenerationRequest>&)>;

FrameSource model_source(const ParamStore<float>& params, const RunConfig& config);

// ---- evaluation ----------------------------------------------------------------

struct EvalRow {
  std::string eye_id;
  bool time_variant = false;
  int target_year = 0;
  int true_label = 0;
  double psnr_generated = 0, ssim_generated = 0;
  double psnr_copy_last = 0, ssim_copy_last = 0;
  double psnr_noise = 0, ssim_noise = 0;
  double vcdr_true = 0, vcdr_generated = 0, vcdr_copy_last = 0;  // NaN if ungradable
  int predicted_label = -1;  // classifier on the generated frame
};

struct EvalSummary {
  std::size_t rows = 0;
  double psnr_generated = 0, ssim_generated = 0;
  double psnr_copy_last = 0, ssim_copy_last = 0;
  double psnr_noise = 0, ssim_noise = 0;
  double ams = 0;
  double vcdr_generated = 0, vcdr_true = 0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  EvalSummary all;
  EvalSummary time_variant;

  std::string to_csv() const;
  std::string summary_json() const;
};

EvalSummary summarize(const std::vector<EvalRow>& rows);

// Hides the final visit of each sequence and scores `source`'s frame against
// it, next to the copy-last-frame and decoded-noise baselines.
EvalReport evaluate_run(const std::vector<LoadedSequence>& test, const FrameSource& source,
                        const ParamStore<float>* classifier, const RunConfig& config);

// ---- label ablation ----------------------------------------------------------

struct AblationRow {
  std::string model;
  double glaucoma_ams = 0, glaucoma_vcdr = 0;
  double normal_ams = 0, normal_vcdr = 0;
  std::size_t glaucoma_samples = 0, normal_samples = 0;
};

struct AblationTable {
  std::vector<AblationRow> rows;
  std::string to_csv() const;
};

// Throws if the two training configs differ in anything but label conditioning.
void check_ablation_pair(const RunConfig& with_label, const RunConfig& without_label);

// Groups test sequences by the label of their final visit and generates that
// visit conditioned on the group label, ceil(min_seeds / group size) seeds
// per sequence.
AblationTable ablate_label(const std::vector<std::pair<std::string, FrameSource>>& models,
                           const std::vector<LoadedSequence>& test,
                           const ParamStore<float>& classifier, const RunConfig& config);

// ---- augmentation ------------------------------------------------------------

struct AugmentReport {
  std::size_t base_normal = 0, base_glaucoma = 0, generated = 0;
  double accuracy_without = 0, accuracy_with = 0;  // balanced, on test frames
  std::vector<int> generated_labels;
};

// Imbalanced split: every normal training frame plus keep_glaucoma real
// glaucoma frames. The generated frames are glaucoma-conditioned
// extrapolations of converting training eyes, years_ahead past their last visit.
AugmentReport augment_experiment(const FrameSource& source, const RunConfig& config,
                                 const std::vector<LoadedSequence>& train,
                                 const std::vector<LoadedSequence>& test);

// All frames of `sequences` as [N,C,H,W] plus their labels.
Tensor<float> stack_frames(const std::vector<LoadedSequence>& sequences, std::vector<int>* labels);

}  // namespace seqdiff

#endif  // SEQDIFF_PIPELINE_HPP_
