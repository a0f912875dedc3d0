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

#include "seqdiff/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace seqdiff {
namespace {

constexpr char kMagic[8] = {'S', 'Q', 'D', 'F', 'C', 'K', 'P', 'T'};
const std::string kMomentM = "adam.m/";
const std::string kMomentV = "adam.v/";

template <typename U>
void put(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : b_(bytes) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      v |= static_cast<U>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw std::runtime_error("checkpoint: truncated file");
  }
  const std::string& b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string Checkpoint::serialize() const {
  std::string out(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, version);
  put<std::uint64_t>(out, config_hash);
  put<std::uint64_t>(out, step);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(config_json.size()));
  out += config_json;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(records.size()));
  for (const auto& [name, t] : records) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put<std::uint64_t>(out, d);
    for (float v : t.data()) put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

Checkpoint Checkpoint::deserialize(const std::string& bytes) {
  Reader r(bytes);
  if (r.bytes(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) {
    throw std::runtime_error("checkpoint: bad magic");
  }
  Checkpoint c;
  c.version = r.get<std::uint32_t>();
  if (c.version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported format version " + std::to_string(c.version));
  }
  c.config_hash = r.get<std::uint64_t>();
  c.step = r.get<std::uint64_t>();
  c.config_json = r.bytes(r.get<std::uint32_t>());
  const std::uint32_t count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.bytes(r.get<std::uint32_t>());
    const std::uint32_t rank = r.get<std::uint32_t>();
    if (rank > 8) throw std::runtime_error("checkpoint: implausible rank for " + name);
    Shape shape(rank);
    for (auto& d : shape) d = r.get<std::uint64_t>();
    Tensor<float> t(shape);
    for (auto& v : t.data()) v = std::bit_cast<float>(r.get<std::uint32_t>());
    c.records.emplace_back(std::move(name), std::move(t));
  }
  if (!r.done()) throw std::runtime_error("checkpoint: trailing bytes");
  return c;
}

void Checkpoint::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  const std::string bytes = serialize();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

Checkpoint make_checkpoint(const ParamStore<float>& params, const OptimizerState<float>* state,
                           std::uint64_t step, std::uint64_t config_hash,
                           const std::string& config_json) {
  Checkpoint c;
  c.config_hash = config_hash;
  c.step = step;
  c.config_json = config_json;
  for (const auto& [name, t] : params.tensors()) c.records.emplace_back(name, t);
  if (state) {
    for (const auto& [name, t] : state->first_moment) c.records.emplace_back(kMomentM + name, t);
    for (const auto& [name, t] : state->second_moment) c.records.emplace_back(kMomentV + name, t);
  }
  return c;
}

ParamStore<float> checkpoint_params(const Checkpoint& ckpt) {
  ParamStore<float> p;
  for (const auto& [name, t] : ckpt.records)
    if (name.rfind(kMomentM, 0) != 0 && name.rfind(kMomentV, 0) != 0) p.set(name, t);
  return p;
}

OptimizerState<float> checkpoint_optimizer(const Checkpoint& ckpt) {
  OptimizerState<float> s;
  s.step = ckpt.step;
  for (const auto& [name, t] : ckpt.records) {
    if (name.rfind(kMomentM, 0) == 0) s.first_moment[name.substr(kMomentM.size())] = t;
    if (name.rfind(kMomentV, 0) == 0) s.second_moment[name.substr(kMomentV.size())] = t;
  }
  return s;
}

}  // namespace seqdiff
