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

// Reverse-mode automatic differentiation over seqdiff::Tensor.
//
// A Tape records every operation whose inputs live on it, in creation order.
// Creation order is a topological order of the graph, so backward() walks the
// tape once in reverse. Values that do not live on a recording tape are
// constants and never receive gradients.

#ifndef SEQDIFF_AUTODIFF_HPP_
#define SEQDIFF_AUTODIFF_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "seqdiff/tensor.hpp"

namespace seqdiff {

enum class OpKind {
  kLeaf,
  kConstant,
  kAdd,
  kSub,
  kMul,
  kScale,
  kMatmul,
  kConv2d,
  kGroupNorm,
  kSoftmax,
  kSilu,
  kMean,
  kSum,
  kMse,
  kConcat,
  kReshape,
  kSlice,
  kEmbedding,
  kTimeFeatures,
  kExpand,
  kPermute,
  kIndexSelect,
  kIndexScatter,
  kUpsample,
  kCrossEntropy,
};

const char* op_name(OpKind kind);

// When enabled, every op rejects non-finite inputs.
void set_debug_checks(bool enabled);
bool debug_checks();

template <typename T>
class Tape;

template <typename T>
struct TapeNode {
  OpKind kind = OpKind::kConstant;
  Tensor<T> value;
  Tensor<T> grad;  // allocated on first use during backward
  std::vector<std::shared_ptr<TapeNode>> inputs;
  std::function<void(TapeNode&)> backward_fn;
  std::string name;  // leaves only
  Tape<T>* tape = nullptr;

  Tensor<T>& grad_buffer() {
    if (grad.empty() && !value.empty()) grad = Tensor<T>(value.shape());
    return grad;
  }
};

template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<TapeNode<T>> node) : node_(std::move(node)) {}

  static Var constant(Tensor<T> value) {
    auto node = std::make_shared<TapeNode<T>>();
    node->kind = OpKind::kConstant;
    node->value = std::move(value);
    return Var(std::move(node));
  }

  const Tensor<T>& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t dim(std::size_t i) const { return node_->value.dim(i); }
  Tape<T>* tape() const { return node_ ? node_->tape : nullptr; }
  bool recorded() const { return tape() != nullptr; }
  const std::shared_ptr<TapeNode<T>>& node() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  std::shared_ptr<TapeNode<T>> node_;
};

// Named parameter tensors, iterated in name order.
template <typename T>
class ParamStore {
 public:
  void set(const std::string& name, Tensor<T> value) {
    tensors_[name] = std::move(value);
  }
  bool contains(const std::string& name) const {
    return tensors_.count(name) != 0;
  }
  const Tensor<T>& at(const std::string& name) const;
  Tensor<T>& at(const std::string& name);
  std::size_t size() const { return tensors_.size(); }
  std::size_t element_count() const;
  std::vector<std::string> names() const;
  const std::map<std::string, Tensor<T>>& tensors() const { return tensors_; }
  std::map<std::string, Tensor<T>>& tensors() { return tensors_; }

  template <typename U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& [name, t] : tensors_) out.set(name, t.template cast<U>());
    return out;
  }

  friend bool operator==(const ParamStore& a, const ParamStore& b) {
    return a.tensors_ == b.tensors_;
  }

 private:
  std::map<std::string, Tensor<T>> tensors_;
};

template <typename T>
using Gradients = std::map<std::string, Tensor<T>>;

template <typename T>
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  std::size_t size() const { return nodes_.size(); }

  // Binds a parameter as a leaf. Repeated calls with the same name return
  // the same node so gradients accumulate in one place.
  Var<T> param(const ParamStore<T>& store, const std::string& name);
  // A named leaf that is not backed by a ParamStore (e.g. an input).
  Var<T> leaf(Tensor<T> value, const std::string& name);

  // Gradients for every named leaf on the tape, plus zero tensors for every
  // parameter of `params` that did not take part in the computation.
  Gradients<T> backward(const Var<T>& loss, const ParamStore<T>& params);
  Gradients<T> backward(const Var<T>& loss);

  // Internal: used by ops to append a node.
  Var<T> record(std::shared_ptr<TapeNode<T>> node);

 private:
  bool recording_;
  std::vector<std::shared_ptr<TapeNode<T>>> nodes_;
  std::map<std::string, Var<T>> leaves_;
};

namespace ad {

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> scale(const Var<T>& a, T factor);

// [m,k]x[k,n] or batched [b,m,k]x[b,k,n].
template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b);

// x:[N,C,H,W], w:[O,C,KH,KW], bias:[O] (may be empty Var); zero padding.
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& bias,
              std::size_t stride, std::size_t pad);

// x:[N,C,...], gamma/beta:[C].
template <typename T>
Var<T> group_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                  std::size_t groups, T eps = T(1e-5));

template <typename T>
Var<T> softmax(const Var<T>& x, std::size_t axis);

// Softmax over the last axis of x:[..., Q, K] where key positions with
// key_mask == 0 get exactly zero weight. key_mask has one K-long row per
// leading block of Q rows (size numel / Q).
template <typename T>
Var<T> masked_softmax(const Var<T>& x, const std::vector<std::uint8_t>& key_mask);

template <typename T>
Var<T> silu(const Var<T>& x);
template <typename T>
Var<T> mean(const Var<T>& x);
template <typename T>
Var<T> sum(const Var<T>& x);
template <typename T>
Var<T> mse(const Var<T>& a, const Var<T>& b);

template <typename T>
Var<T> concat(const std::vector<Var<T>>& parts, std::size_t axis);
template <typename T>
Var<T> slice(const Var<T>& x, std::size_t axis, std::size_t begin,
             std::size_t end);
template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape);
template <typename T>
Var<T> permute(const Var<T>& x, const std::vector<std::size_t>& perm);
// Repeats a size-1 axis `count` times.
template <typename T>
Var<T> expand(const Var<T>& x, std::size_t axis, std::size_t count);

// table:[V,d] -> [indices.size(), d].
template <typename T>
Var<T> embedding(const Var<T>& table, const std::vector<std::size_t>& indices);

// Sinusoidal features [steps.size(), dim]: first half sin, second half cos.
template <typename T>
Var<T> time_features(const std::vector<T>& steps, std::size_t dim);

template <typename T>
Var<T> index_select(const Var<T>& x, std::size_t axis,
                    const std::vector<std::size_t>& indices);
// Copy of `base` with slices `indices` along `axis` replaced by `values`.
template <typename T>
Var<T> index_scatter(const Var<T>& base, std::size_t axis,
                     const std::vector<std::size_t>& indices,
                     const Var<T>& values);

// Nearest-neighbour 2x upsampling of [N,C,H,W].
template <typename T>
Var<T> upsample2x(const Var<T>& x);

// Mean negative log-likelihood of integer labels under softmax(logits).
template <typename T>
Var<T> cross_entropy(const Var<T>& logits, const std::vector<std::size_t>& labels);

}  // namespace ad

struct GradCheckOptions {
  double eps = 1e-5;
  // 0 checks every element; otherwise a seeded subsample per parameter.
  std::size_t max_elements_per_param = 0;
  std::uint64_t seed = 0;
};

using LossFn = std::function<Var<double>(Tape<double>&,
                                         const ParamStore<double>&)>;

// max over checked elements of |analytic - numeric| / max(1, |numeric|).
double grad_check(const LossFn& loss_fn, const ParamStore<double>& params,
                  const GradCheckOptions& options = {});

}  // namespace seqdiff

#endif  // SEQDIFF_AUTODIFF_HPP_
