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

// Binary checkpoint.
//
//   magic      8 bytes  "SQDFCKPT"
//   version    u32
//   config     u64      hash of the training config
//   step       u64
//   json_len   u32, then json_len bytes of config JSON
//   count      u32, then per record:
//     name_len u32, name bytes, rank u32, rank x u64 dims,
//     prod(dims) x f32 values
//
// All integers and floats are little-endian.

#ifndef SEQDIFF_CHECKPOINT_HPP_
#define SEQDIFF_CHECKPOINT_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "seqdiff/autodiff.hpp"
#include "seqdiff/optimizer.hpp"

namespace seqdiff {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t config_hash = 0;
  std::uint64_t step = 0;
  std::string config_json;
  std::vector<std::pair<std::string, Tensor<float>>> records;

  std::string serialize() const;
  static Checkpoint deserialize(const std::string& bytes);
  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

// Parameters in name order, then Adam moments as "adam.m/<name>" and
// "adam.v/<name>" when `state` is given.
Checkpoint make_checkpoint(const ParamStore<float>& params,
                           const OptimizerState<float>* state, std::uint64_t step,
                           std::uint64_t config_hash, const std::string& config_json);

// Splits records back into parameters and (if present) optimizer state.
ParamStore<float> checkpoint_params(const Checkpoint& ckpt);
OptimizerState<float> checkpoint_optimizer(const Checkpoint& ckpt);

}  // namespace seqdiff

#endif  // SEQDIFF_CHECKPOINT_HPP_
