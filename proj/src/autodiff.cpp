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

#include "seqdiff/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "blas.hpp"

namespace seqdiff {

namespace {
std::atomic<bool> g_debug_checks{false};
}  // namespace

void set_debug_checks(bool enabled) { g_debug_checks = enabled; }
bool debug_checks() { return g_debug_checks; }

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kConstant: return "constant";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kConv2d: return "conv2d";
    case OpKind::kGroupNorm: return "group_norm";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kSilu: return "silu";
    case OpKind::kMean: return "mean";
    case OpKind::kSum: return "sum";
    case OpKind::kMse: return "mse";
    case OpKind::kConcat: return "concat";
    case OpKind::kReshape: return "reshape";
    case OpKind::kSlice: return "slice";
    case OpKind::kEmbedding: return "embedding";
    case OpKind::kTimeFeatures: return "time_features";
    case OpKind::kExpand: return "expand";
    case OpKind::kPermute: return "permute";
    case OpKind::kIndexSelect: return "index_select";
    case OpKind::kIndexScatter: return "index_scatter";
    case OpKind::kUpsample: return "upsample2x";
    case OpKind::kCrossEntropy: return "cross_entropy";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// ParamStore

template <typename T>
const Tensor<T>& ParamStore<T>::at(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) {
    throw std::out_of_range("ParamStore: no parameter named '" + name + "'");
  }
  return it->second;
}

template <typename T>
Tensor<T>& ParamStore<T>::at(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) {
    throw std::out_of_range("ParamStore: no parameter named '" + name + "'");
  }
  return it->second;
}

template <typename T>
std::size_t ParamStore<T>::element_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : tensors_) n += t.size();
  return n;
}

template <typename T>
std::vector<std::string> ParamStore<T>::names() const {
  std::vector<std::string> out;
  out.reserve(tensors_.size());
  for (const auto& [name, t] : tensors_) out.push_back(name);
  return out;
}

// ---------------------------------------------------------------------------
// Tape

template <typename T>
Var<T> Tape<T>::record(std::shared_ptr<TapeNode<T>> node) {
  node->tape = this;
  nodes_.push_back(node);
  return Var<T>(std::move(node));
}

template <typename T>
Var<T> Tape<T>::param(const ParamStore<T>& store, const std::string& name) {
  if (!recording_) return Var<T>::constant(store.at(name));
  if (auto it = leaves_.find(name); it != leaves_.end()) return it->second;
  return leaf(store.at(name), name);
}

template <typename T>
Var<T> Tape<T>::leaf(Tensor<T> value, const std::string& name) {
  if (!recording_) return Var<T>::constant(std::move(value));
  if (leaves_.count(name)) {
    throw std::invalid_argument("Tape: duplicate leaf name '" + name + "'");
  }
  auto node = std::make_shared<TapeNode<T>>();
  node->kind = OpKind::kLeaf;
  node->value = std::move(value);
  node->name = name;
  Var<T> v = record(std::move(node));
  leaves_.emplace(name, v);
  return v;
}

template <typename T>
Gradients<T> Tape<T>::backward(const Var<T>& loss) {
  return backward(loss, ParamStore<T>{});
}

template <typename T>
Gradients<T> Tape<T>::backward(const Var<T>& loss,
                               const ParamStore<T>& params) {
  if (nodes_.empty()) throw std::logic_error("backward: empty tape");
  if (!loss || loss.tape() != this) {
    throw std::logic_error("backward: loss was not recorded on this tape");
  }
  if (loss.value().size() != 1) {
    throw ShapeError("backward: loss must be a scalar, got shape " +
                     shape_str(loss.shape()));
  }
  for (auto& n : nodes_) n->grad = Tensor<T>();
  loss.node()->grad_buffer()[0] = T(1);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    TapeNode<T>& n = **it;
    if (n.grad.empty() || !n.backward_fn) continue;
    n.backward_fn(n);
  }
  Gradients<T> grads;
  for (const auto& [name, v] : leaves_) {
    const auto& node = v.node();
    grads[name] = node->grad.empty() ? Tensor<T>(node->value.shape())
                                     : node->grad;
  }
  for (const auto& [name, t] : params.tensors()) {
    if (!grads.count(name)) grads[name] = Tensor<T>(t.shape());
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Op plumbing

namespace {

template <typename T>
using Node = TapeNode<T>;
template <typename T>
using BackwardFn = std::function<void(Node<T>&)>;

template <typename T>
bool wants_grad(const Node<T>& n) {
  return n.tape != nullptr;
}

template <typename T>
Var<T> make_result(OpKind kind, Tensor<T> value,
                   const std::vector<const Var<T>*>& inputs, BackwardFn<T> fn) {
  Tape<T>* tape = nullptr;
  for (const Var<T>* v : inputs) {
    if (!v || !*v) continue;
    if (g_debug_checks && !v->value().all_finite()) {
      throw std::domain_error(std::string(op_name(kind)) +
                              ": non-finite input");
    }
    Tape<T>* t = v->tape();
    if (!t) continue;
    if (tape && tape != t) {
      throw std::logic_error(std::string(op_name(kind)) +
                             ": inputs recorded on different tapes");
    }
    tape = t;
  }
  auto node = std::make_shared<Node<T>>();
  node->kind = kind;
  node->value = std::move(value);
  if (!tape || !tape->recording()) return Var<T>(std::move(node));
  for (const Var<T>* v : inputs) {
    node->inputs.push_back(v && *v ? v->node() : nullptr);
  }
  node->backward_fn = std::move(fn);
  return tape->record(std::move(node));
}

template <typename T>
void require_same_shape(const char* op, const Var<T>& a, const Var<T>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

template <typename T>
void require_rank(const char* op, const Var<T>& a, std::size_t rank) {
  if (a.value().rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " +
                     std::to_string(rank) + ", got shape " +
                     shape_str(a.shape()));
  }
}

struct AxisSplit {
  std::size_t outer = 1, axis = 1, inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.axis = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

template <typename T>
void add_into(Tensor<T>& dst, const Tensor<T>& src, T factor = T(1)) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += factor * src[i];
}

}  // namespace

namespace ad {

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same_shape("add", a, b);
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.value()[i] + b.value()[i];
  return make_result<T>(OpKind::kAdd, std::move(out), {&a, &b},
                        [](Node<T>& n) {
                          for (auto& in : n.inputs)
                            if (wants_grad(*in)) add_into(in->grad_buffer(), n.grad);
                        });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  require_same_shape("sub", a, b);
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.value()[i] - b.value()[i];
  return make_result<T>(OpKind::kSub, std::move(out), {&a, &b},
                        [](Node<T>& n) {
                          if (wants_grad(*n.inputs[0]))
                            add_into(n.inputs[0]->grad_buffer(), n.grad);
                          if (wants_grad(*n.inputs[1]))
                            add_into(n.inputs[1]->grad_buffer(), n.grad, T(-1));
                        });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  require_same_shape("mul", a, b);
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.value()[i] * b.value()[i];
  return make_result<T>(OpKind::kMul, std::move(out), {&a, &b},
                        [](Node<T>& n) {
                          auto& a = *n.inputs[0];
                          auto& b = *n.inputs[1];
                          if (wants_grad(a)) {
                            auto& g = a.grad_buffer();
                            for (std::size_t i = 0; i < g.size(); ++i)
                              g[i] += n.grad[i] * b.value[i];
                          }
                          if (wants_grad(b)) {
                            auto& g = b.grad_buffer();
                            for (std::size_t i = 0; i < g.size(); ++i)
                              g[i] += n.grad[i] * a.value[i];
                          }
                        });
}

template <typename T>
Var<T> scale(const Var<T>& a, T factor) {
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * factor;
  return make_result<T>(OpKind::kScale, std::move(out), {&a},
                        [factor](Node<T>& n) {
                          if (wants_grad(*n.inputs[0]))
                            add_into(n.inputs[0]->grad_buffer(), n.grad, factor);
                        });
}

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  const std::size_t rank = a.value().rank();
  if ((rank != 2 && rank != 3) || b.value().rank() != rank) {
    throw ShapeError("matmul: expected two rank-2 or two rank-3 operands, got " +
                     shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  const std::size_t batch = rank == 3 ? a.dim(0) : 1;
  const std::size_t m = a.dim(rank - 2), k = a.dim(rank - 1);
  const std::size_t k2 = b.dim(rank - 2), n = b.dim(rank - 1);
  if (k != k2 || (rank == 3 && b.dim(0) != batch)) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) +
                     " and " + shape_str(b.shape()));
  }
  Shape out_shape = rank == 3 ? Shape{batch, m, n} : Shape{m, n};
  Tensor<T> out(out_shape);
  for (std::size_t i = 0; i < batch; ++i) {
    blas::gemm<T>(false, false, m, n, k, T(1), a.value().data().data() + i * m * k,
                  b.value().data().data() + i * k * n, T(0),
                  out.data().data() + i * m * n);
  }
  return make_result<T>(
      OpKind::kMatmul, std::move(out), {&a, &b},
      [batch, m, k, n](Node<T>& nd) {
        auto& a = *nd.inputs[0];
        auto& b = *nd.inputs[1];
        const T* g = nd.grad.data().data();
        if (wants_grad(a)) {
          T* ga = a.grad_buffer().data().data();
          for (std::size_t i = 0; i < batch; ++i)
            blas::gemm<T>(false, true, m, k, n, T(1), g + i * m * n,
                          b.value.data().data() + i * k * n, T(1), ga + i * m * k);
        }
        if (wants_grad(b)) {
          T* gb = b.grad_buffer().data().data();
          for (std::size_t i = 0; i < batch; ++i)
            blas::gemm<T>(true, false, k, n, m, T(1),
                          a.value.data().data() + i * m * k, g + i * m * n, T(1),
                          gb + i * k * n);
        }
      });
}

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& bias,
              std::size_t stride, std::size_t pad) {
  require_rank("conv2d", x, 4);
  require_rank("conv2d", w, 4);
  if (stride != 1 && stride != 2) {
    throw std::invalid_argument("conv2d: stride must be 1 or 2");
  }
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t O = w.dim(0), KH = w.dim(2), KW = w.dim(3);
  if (w.dim(1) != C) {
    throw ShapeError("conv2d: input " + shape_str(x.shape()) +
                     " incompatible with kernel " + shape_str(w.shape()));
  }
  if (H + 2 * pad < KH || W + 2 * pad < KW) {
    throw ShapeError("conv2d: kernel " + shape_str(w.shape()) +
                     " larger than padded input " + shape_str(x.shape()));
  }
  if (bias && bias.shape() != Shape{O}) {
    throw ShapeError("conv2d: bias shape " + shape_str(bias.shape()) +
                     " does not match " + std::to_string(O) + " filters");
  }
  const std::size_t Ho = (H + 2 * pad - KH) / stride + 1;
  const std::size_t Wo = (W + 2 * pad - KW) / stride + 1;
  const std::size_t P = Ho * Wo, CKK = C * KH * KW, NP = N * P;

  std::vector<T> col(CKK * NP, T(0));
  const T* xv = x.value().data().data();
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t ky = 0; ky < KH; ++ky)
      for (std::size_t kx = 0; kx < KW; ++kx) {
        T* row = col.data() + ((c * KH + ky) * KW + kx) * NP;
        for (std::size_t nn = 0; nn < N; ++nn) {
          const T* plane = xv + (nn * C + c) * H * W;
          for (std::size_t oy = 0; oy < Ho; ++oy) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                                      static_cast<std::ptrdiff_t>(pad);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
            T* dst = row + nn * P + oy * Wo;
            for (std::size_t ox = 0; ox < Wo; ++ox) {
              const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                        static_cast<std::ptrdiff_t>(pad);
              if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(W))
                dst[ox] = plane[iy * W + ix];
            }
          }
        }
      }

  std::vector<T> y2(O * NP);
  blas::gemm<T>(false, false, O, NP, CKK, T(1), w.value().data().data(),
                col.data(), T(0), y2.data());
  Tensor<T> out(Shape{N, O, Ho, Wo});
  for (std::size_t nn = 0; nn < N; ++nn)
    for (std::size_t o = 0; o < O; ++o) {
      const T b = bias ? bias.value()[o] : T(0);
      const T* src = y2.data() + o * NP + nn * P;
      T* dst = out.data().data() + (nn * O + o) * P;
      for (std::size_t p = 0; p < P; ++p) dst[p] = src[p] + b;
    }

  return make_result<T>(
      OpKind::kConv2d, std::move(out), {&x, &w, &bias},
      [col = std::move(col), N, C, H, W, O, KH, KW, Ho, Wo, P, CKK, NP, stride,
       pad](Node<T>& nd) {
        auto& xin = *nd.inputs[0];
        auto& win = *nd.inputs[1];
        const auto& bin = nd.inputs[2];
        std::vector<T> dy2(O * NP);
        const T* g = nd.grad.data().data();
        for (std::size_t nn = 0; nn < N; ++nn)
          for (std::size_t o = 0; o < O; ++o)
            std::copy_n(g + (nn * O + o) * P, P, dy2.data() + o * NP + nn * P);
        if (bin && wants_grad(*bin)) {
          auto& gb = bin->grad_buffer();
          for (std::size_t o = 0; o < O; ++o)
            gb[o] += pairwise_sum<T>(std::span<const T>(dy2.data() + o * NP, NP));
        }
        if (wants_grad(win)) {
          blas::gemm<T>(false, true, O, CKK, NP, T(1), dy2.data(), col.data(), T(1),
                        win.grad_buffer().data().data());
        }
        if (wants_grad(xin)) {
          std::vector<T> dcol(CKK * NP);
          blas::gemm<T>(true, false, CKK, NP, O, T(1), win.value.data().data(),
                        dy2.data(), T(0), dcol.data());
          T* gx = xin.grad_buffer().data().data();
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t ky = 0; ky < KH; ++ky)
              for (std::size_t kx = 0; kx < KW; ++kx) {
                const T* row = dcol.data() + ((c * KH + ky) * KW + kx) * NP;
                for (std::size_t nn = 0; nn < N; ++nn) {
                  T* plane = gx + (nn * C + c) * H * W;
                  for (std::size_t oy = 0; oy < Ho; ++oy) {
                    const std::ptrdiff_t iy =
                        static_cast<std::ptrdiff_t>(oy * stride + ky) -
                        static_cast<std::ptrdiff_t>(pad);
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
                    const T* src = row + nn * P + oy * Wo;
                    for (std::size_t ox = 0; ox < Wo; ++ox) {
                      const std::ptrdiff_t ix =
                          static_cast<std::ptrdiff_t>(ox * stride + kx) -
                          static_cast<std::ptrdiff_t>(pad);
                      if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(W))
                        plane[iy * W + ix] += src[ox];
                    }
                  }
                }
              }
        }
      });
}

template <typename T>
Var<T> group_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                  std::size_t groups, T eps) {
  if (x.value().rank() < 2) {
    throw ShapeError("group_norm: expected rank >= 2, got " + shape_str(x.shape()));
  }
  const std::size_t N = x.dim(0), C = x.dim(1);
  if (groups == 0 || C % groups != 0) {
    throw ShapeError("group_norm: " + std::to_string(groups) +
                     " groups do not divide " + std::to_string(C) + " channels");
  }
  if (gamma.shape() != Shape{C} || beta.shape() != Shape{C}) {
    throw ShapeError("group_norm: affine shapes " + shape_str(gamma.shape()) + "/" +
                     shape_str(beta.shape()) + " do not match channels of " +
                     shape_str(x.shape()));
  }
  const std::size_t L = x.value().size() / (N * C);
  const std::size_t cg = C / groups, m = cg * L;
  Tensor<T> xhat(x.shape());
  std::vector<T> inv_std(N * groups);
  Tensor<T> out(x.shape());
  const auto& xv = x.value();
  std::vector<T> tmp(m);
  for (std::size_t nn = 0; nn < N; ++nn)
    for (std::size_t g = 0; g < groups; ++g) {
      const std::size_t base = (nn * C + g * cg) * L;
      std::span<const T> block(xv.data().data() + base, m);
      const T mu = pairwise_sum<T>(block) / static_cast<T>(m);
      for (std::size_t i = 0; i < m; ++i) tmp[i] = (block[i] - mu) * (block[i] - mu);
      const T var = pairwise_sum<T>(tmp) / static_cast<T>(m);
      const T inv = T(1) / std::sqrt(var + eps);
      inv_std[nn * groups + g] = inv;
      for (std::size_t c = 0; c < cg; ++c) {
        const std::size_t ch = g * cg + c;
        for (std::size_t l = 0; l < L; ++l) {
          const std::size_t i = base + c * L + l;
          xhat[i] = (xv[i] - mu) * inv;
          out[i] = xhat[i] * gamma.value()[ch] + beta.value()[ch];
        }
      }
    }
  return make_result<T>(
      OpKind::kGroupNorm, std::move(out), {&x, &gamma, &beta},
      [xhat = std::move(xhat), inv_std = std::move(inv_std), N, C, L, cg,
       groups, m](Node<T>& nd) {
        auto& xin = *nd.inputs[0];
        auto& gin = *nd.inputs[1];
        auto& bin = *nd.inputs[2];
        const auto& gy = nd.grad;
        if (wants_grad(gin) || wants_grad(bin)) {
          std::vector<T> dg(C, T(0)), db(C, T(0));
          for (std::size_t nn = 0; nn < N; ++nn)
            for (std::size_t c = 0; c < C; ++c)
              for (std::size_t l = 0; l < L; ++l) {
                const std::size_t i = (nn * C + c) * L + l;
                dg[c] += gy[i] * xhat[i];
                db[c] += gy[i];
              }
          if (wants_grad(gin)) {
            auto& g = gin.grad_buffer();
            for (std::size_t c = 0; c < C; ++c) g[c] += dg[c];
          }
          if (wants_grad(bin)) {
            auto& g = bin.grad_buffer();
            for (std::size_t c = 0; c < C; ++c) g[c] += db[c];
          }
        }
        if (!wants_grad(xin)) return;
        auto& gx = xin.grad_buffer();
        std::vector<T> dxhat(m), prod(m);
        for (std::size_t nn = 0; nn < N; ++nn)
          for (std::size_t g = 0; g < groups; ++g) {
            const std::size_t base = (nn * C + g * cg) * L;
            for (std::size_t c = 0; c < cg; ++c)
              for (std::size_t l = 0; l < L; ++l) {
                const std::size_t j = c * L + l;
                dxhat[j] = gy[base + j] * gin.value[g * cg + c];
                prod[j] = dxhat[j] * xhat[base + j];
              }
            const T mean_d = pairwise_sum<T>(dxhat) / static_cast<T>(m);
            const T mean_dx = pairwise_sum<T>(prod) / static_cast<T>(m);
            const T inv = inv_std[nn * groups + g];
            for (std::size_t j = 0; j < m; ++j)
              gx[base + j] += inv * (dxhat[j] - mean_d - xhat[base + j] * mean_dx);
          }
      });
}

namespace {

template <typename T>
void softmax_backward_rows(Node<T>& nd, AxisSplit s) {
  auto& xin = *nd.inputs[0];
  if (!wants_grad(xin)) return;
  auto& gx = xin.grad_buffer();
  const auto& y = nd.value;
  const auto& gy = nd.grad;
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.axis * s.inner + in;
      T dot = T(0);
      for (std::size_t a = 0; a < s.axis; ++a) {
        const std::size_t i = base + a * s.inner;
        dot += gy[i] * y[i];
      }
      for (std::size_t a = 0; a < s.axis; ++a) {
        const std::size_t i = base + a * s.inner;
        gx[i] += y[i] * (gy[i] - dot);
      }
    }
}

}  // namespace

template <typename T>
Var<T> softmax(const Var<T>& x, std::size_t axis) {
  if (axis >= x.value().rank()) {
    throw ShapeError("softmax: axis " + std::to_string(axis) +
                     " out of range for " + shape_str(x.shape()));
  }
  const AxisSplit s = split_at(x.shape(), axis);
  Tensor<T> out(x.shape());
  const auto& xv = x.value();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.axis * s.inner + in;
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t a = 0; a < s.axis; ++a) mx = std::max(mx, xv[base + a * s.inner]);
      T total = T(0);
      for (std::size_t a = 0; a < s.axis; ++a) {
        const std::size_t i = base + a * s.inner;
        out[i] = std::exp(xv[i] - mx);
        total += out[i];
      }
      for (std::size_t a = 0; a < s.axis; ++a) out[base + a * s.inner] /= total;
    }
  return make_result<T>(OpKind::kSoftmax, std::move(out), {&x},
                        [s](Node<T>& nd) { softmax_backward_rows(nd, s); });
}

template <typename T>
Var<T> masked_softmax(const Var<T>& x, const std::vector<std::uint8_t>& key_mask) {
  const std::size_t rank = x.value().rank();
  if (rank < 2) {
    throw ShapeError("masked_softmax: expected rank >= 2, got " + shape_str(x.shape()));
  }
  const std::size_t K = x.dim(rank - 1), Q = x.dim(rank - 2);
  const std::size_t blocks = x.value().size() / (Q * K);
  if (key_mask.size() != blocks * K) {
    throw ShapeError("masked_softmax: key mask of length " +
                     std::to_string(key_mask.size()) + " does not match " +
                     shape_str(x.shape()));
  }
  Tensor<T> out(x.shape());
  const auto& xv = x.value();
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::uint8_t* mask = key_mask.data() + b * K;
    if (std::none_of(mask, mask + K, [](std::uint8_t m) { return m != 0; })) {
      throw std::invalid_argument("masked_softmax: every key is masked in block " +
                                  std::to_string(b));
    }
    for (std::size_t q = 0; q < Q; ++q) {
      const std::size_t base = (b * Q + q) * K;
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t k = 0; k < K; ++k)
        if (mask[k]) mx = std::max(mx, xv[base + k]);
      T total = T(0);
      for (std::size_t k = 0; k < K; ++k) {
        out[base + k] = mask[k] ? std::exp(xv[base + k] - mx) : T(0);
        total += out[base + k];
      }
      for (std::size_t k = 0; k < K; ++k) out[base + k] /= total;
    }
  }
  const AxisSplit s{blocks * Q, K, 1};
  return make_result<T>(OpKind::kSoftmax, std::move(out), {&x},
                        [s](Node<T>& nd) { softmax_backward_rows(nd, s); });
}

template <typename T>
Var<T> silu(const Var<T>& x) {
  Tensor<T> out(x.shape());
  const auto& xv = x.value();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = xv[i] / (T(1) + std::exp(-xv[i]));
  return make_result<T>(OpKind::kSilu, std::move(out), {&x}, [](Node<T>& nd) {
    auto& xin = *nd.inputs[0];
    if (!wants_grad(xin)) return;
    auto& gx = xin.grad_buffer();
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const T v = xin.value[i];
      const T sig = T(1) / (T(1) + std::exp(-v));
      gx[i] += nd.grad[i] * sig * (T(1) + v * (T(1) - sig));
    }
  });
}

template <typename T>
Var<T> sum(const Var<T>& x) {
  Tensor<T> out = Tensor<T>::scalar(x.value().sum());
  return make_result<T>(OpKind::kSum, std::move(out), {&x}, [](Node<T>& nd) {
    auto& xin = *nd.inputs[0];
    if (!wants_grad(xin)) return;
    auto& gx = xin.grad_buffer();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += nd.grad[0];
  });
}

template <typename T>
Var<T> mean(const Var<T>& x) {
  const T n = static_cast<T>(x.value().size());
  Tensor<T> out = Tensor<T>::scalar(x.value().sum() / n);
  return make_result<T>(OpKind::kMean, std::move(out), {&x}, [n](Node<T>& nd) {
    auto& xin = *nd.inputs[0];
    if (!wants_grad(xin)) return;
    auto& gx = xin.grad_buffer();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += nd.grad[0] / n;
  });
}

template <typename T>
Var<T> mse(const Var<T>& a, const Var<T>& b) {
  require_same_shape("mse", a, b);
  std::vector<T> sq(a.value().size());
  for (std::size_t i = 0; i < sq.size(); ++i) {
    const T d = a.value()[i] - b.value()[i];
    sq[i] = d * d;
  }
  const T n = static_cast<T>(sq.size());
  Tensor<T> out = Tensor<T>::scalar(pairwise_sum<T>(sq) / n);
  return make_result<T>(OpKind::kMse, std::move(out), {&a, &b}, [n](Node<T>& nd) {
    auto& ain = *nd.inputs[0];
    auto& bin = *nd.inputs[1];
    const T g = nd.grad[0] * T(2) / n;
    if (wants_grad(ain)) {
      auto& ga = ain.grad_buffer();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g * (ain.value[i] - bin.value[i]);
    }
    if (wants_grad(bin)) {
      auto& gb = bin.grad_buffer();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= g * (ain.value[i] - bin.value[i]);
    }
  });
}

template <typename T>
Var<T> concat(const std::vector<Var<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no operands");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) {
    throw ShapeError("concat: axis " + std::to_string(axis) +
                     " out of range for " + shape_str(first));
  }
  Shape out_shape = first;
  out_shape[axis] = 0;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i)
      if (i != axis && s[i] != first[i]) ok = false;
    if (!ok) {
      throw ShapeError("concat: operand " + shape_str(s) +
                       " incompatible with " + shape_str(first) + " on axis " +
                       std::to_string(axis));
    }
    out_shape[axis] += s[axis];
    widths.push_back(s[axis]);
  }
  const AxisSplit os = split_at(out_shape, axis);
  Tensor<T> out(out_shape);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const std::size_t chunk = widths[k] * os.inner;
    const T* src = parts[k].value().data().data();
    for (std::size_t o = 0; o < os.outer; ++o)
      std::copy_n(src + o * chunk, chunk,
                  out.data().data() + o * os.axis * os.inner + offset);
    offset += chunk;
  }
  std::vector<const Var<T>*> inputs;
  for (const auto& p : parts) inputs.push_back(&p);
  return make_result<T>(
      OpKind::kConcat, std::move(out), inputs, [os, widths](Node<T>& nd) {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < nd.inputs.size(); ++k) {
          const std::size_t chunk = widths[k] * os.inner;
          auto& in = *nd.inputs[k];
          if (wants_grad(in)) {
            T* g = in.grad_buffer().data().data();
            for (std::size_t o = 0; o < os.outer; ++o) {
              const T* src = nd.grad.data().data() + o * os.axis * os.inner + offset;
              for (std::size_t i = 0; i < chunk; ++i) g[o * chunk + i] += src[i];
            }
          }
          offset += chunk;
        }
      });
}

template <typename T>
Var<T> slice(const Var<T>& x, std::size_t axis, std::size_t begin,
             std::size_t end) {
  if (axis >= x.value().rank() || begin >= end || end > x.dim(axis)) {
    throw ShapeError("slice: range [" + std::to_string(begin) + "," +
                     std::to_string(end) + ") on axis " + std::to_string(axis) +
                     " invalid for " + shape_str(x.shape()));
  }
  const AxisSplit s = split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape[axis] = end - begin;
  Tensor<T> out(out_shape);
  const std::size_t chunk = (end - begin) * s.inner;
  for (std::size_t o = 0; o < s.outer; ++o)
    std::copy_n(x.value().data().data() + (o * s.axis + begin) * s.inner, chunk,
                out.data().data() + o * chunk);
  return make_result<T>(OpKind::kSlice, std::move(out), {&x},
                        [s, begin, chunk](Node<T>& nd) {
                          auto& xin = *nd.inputs[0];
                          if (!wants_grad(xin)) return;
                          T* g = xin.grad_buffer().data().data();
                          for (std::size_t o = 0; o < s.outer; ++o) {
                            T* dst = g + (o * s.axis + begin) * s.inner;
                            const T* src = nd.grad.data().data() + o * chunk;
                            for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
                          }
                        });
}

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape) {
  if (shape_numel(shape) != x.value().size()) {
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " +
                     shape_str(shape));
  }
  Tensor<T> out = x.value().reshaped(std::move(shape));
  return make_result<T>(OpKind::kReshape, std::move(out), {&x}, [](Node<T>& nd) {
    auto& xin = *nd.inputs[0];
    if (!wants_grad(xin)) return;
    auto& g = xin.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += nd.grad[i];
  });
}

namespace {

// For every output element, the linear index of its source in the input.
std::vector<std::size_t> permutation_sources(const Shape& in,
                                             const std::vector<std::size_t>& perm) {
  const std::size_t r = in.size();
  std::vector<std::size_t> in_stride(r, 1);
  for (std::size_t i = r; i-- > 1;) in_stride[i - 1] = in_stride[i] * in[i];
  Shape out(r);
  for (std::size_t i = 0; i < r; ++i) out[i] = in[perm[i]];
  const std::size_t total = shape_numel(in);
  std::vector<std::size_t> src(total);
  std::vector<std::size_t> idx(r, 0);
  for (std::size_t lin = 0; lin < total; ++lin) {
    std::size_t s = 0;
    for (std::size_t i = 0; i < r; ++i) s += idx[i] * in_stride[perm[i]];
    src[lin] = s;
    for (std::size_t i = r; i-- > 0;) {
      if (++idx[i] < out[i]) break;
      idx[i] = 0;
    }
  }
  return src;
}

}  // namespace

template <typename T>
Var<T> permute(const Var<T>& x, const std::vector<std::size_t>& perm) {
  const std::size_t r = x.value().rank();
  std::vector<std::size_t> sorted = perm;
  std::sort(sorted.begin(), sorted.end());
  bool valid = perm.size() == r;
  for (std::size_t i = 0; valid && i < r; ++i) valid = sorted[i] == i;
  if (!valid) {
    throw ShapeError("permute: invalid permutation for " + shape_str(x.shape()));
  }
  Shape out_shape(r);
  for (std::size_t i = 0; i < r; ++i) out_shape[i] = x.dim(perm[i]);
  auto src = permutation_sources(x.shape(), perm);
  Tensor<T> out(out_shape);
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = x.value()[src[i]];
  return make_result<T>(OpKind::kPermute, std::move(out), {&x},
                        [src = std::move(src)](Node<T>& nd) {
                          auto& xin = *nd.inputs[0];
                          if (!wants_grad(xin)) return;
                          auto& g = xin.grad_buffer();
                          for (std::size_t i = 0; i < src.size(); ++i)
                            g[src[i]] += nd.grad[i];
                        });
}

template <typename T>
Var<T> expand(const Var<T>& x, std::size_t axis, std::size_t count) {
  if (axis >= x.value().rank() || x.dim(axis) != 1 || count == 0) {
    throw ShapeError("expand: axis " + std::to_string(axis) +
                     " of " + shape_str(x.shape()) + " is not a size-1 axis");
  }
  const AxisSplit s = split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape[axis] = count;
  Tensor<T> out(out_shape);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t c = 0; c < count; ++c)
      std::copy_n(x.value().data().data() + o * s.inner, s.inner,
                  out.data().data() + (o * count + c) * s.inner);
  return make_result<T>(OpKind::kExpand, std::move(out), {&x},
                        [s, count](Node<T>& nd) {
                          auto& xin = *nd.inputs[0];
                          if (!wants_grad(xin)) return;
                          auto& g = xin.grad_buffer();
                          for (std::size_t o = 0; o < s.outer; ++o)
                            for (std::size_t c = 0; c < count; ++c)
                              for (std::size_t i = 0; i < s.inner; ++i)
                                g[o * s.inner + i] +=
                                    nd.grad[(o * count + c) * s.inner + i];
                        });
}

template <typename T>
Var<T> embedding(const Var<T>& table, const std::vector<std::size_t>& indices) {
  require_rank("embedding", table, 2);
  const std::size_t V = table.dim(0), d = table.dim(1);
  Tensor<T> out(Shape{indices.size(), d});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= V) {
      throw ShapeError("embedding: index " + std::to_string(indices[i]) +
                       " out of range for table " + shape_str(table.shape()));
    }
    std::copy_n(table.value().data().data() + indices[i] * d, d,
                out.data().data() + i * d);
  }
  return make_result<T>(OpKind::kEmbedding, std::move(out), {&table},
                        [indices, d](Node<T>& nd) {
                          auto& tin = *nd.inputs[0];
                          if (!wants_grad(tin)) return;
                          auto& g = tin.grad_buffer();
                          for (std::size_t i = 0; i < indices.size(); ++i)
                            for (std::size_t j = 0; j < d; ++j)
                              g[indices[i] * d + j] += nd.grad[i * d + j];
                        });
}

template <typename T>
Var<T> time_features(const std::vector<T>& steps, std::size_t dim) {
  if (dim < 2 || dim % 2 != 0) {
    throw std::invalid_argument("time_features: dim must be even and >= 2");
  }
  const std::size_t half = dim / 2;
  Tensor<T> out(Shape{steps.size(), dim});
  for (std::size_t n = 0; n < steps.size(); ++n)
    for (std::size_t i = 0; i < half; ++i) {
      const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) /
                                   static_cast<double>(half));
      const double arg = static_cast<double>(steps[n]) * freq;
      out[n * dim + i] = static_cast<T>(std::sin(arg));
      out[n * dim + half + i] = static_cast<T>(std::cos(arg));
    }
  return make_result<T>(OpKind::kTimeFeatures, std::move(out), {}, nullptr);
}

namespace {

void check_indices(const char* op, const std::vector<std::size_t>& indices,
                   std::size_t limit, bool unique) {
  std::set<std::size_t> seen;
  for (std::size_t i : indices) {
    if (i >= limit) {
      throw ShapeError(std::string(op) + ": index " + std::to_string(i) +
                       " out of range " + std::to_string(limit));
    }
    if (unique && !seen.insert(i).second) {
      throw std::invalid_argument(std::string(op) + ": duplicate index " +
                                  std::to_string(i));
    }
  }
}

}  // namespace

template <typename T>
Var<T> index_select(const Var<T>& x, std::size_t axis,
                    const std::vector<std::size_t>& indices) {
  if (axis >= x.value().rank()) {
    throw ShapeError("index_select: axis out of range for " + shape_str(x.shape()));
  }
  if (indices.empty()) throw ShapeError("index_select: empty index list");
  check_indices("index_select", indices, x.dim(axis), false);
  const AxisSplit s = split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape[axis] = indices.size();
  Tensor<T> out(out_shape);
  const std::size_t K = indices.size();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t k = 0; k < K; ++k)
      std::copy_n(x.value().data().data() + (o * s.axis + indices[k]) * s.inner,
                  s.inner, out.data().data() + (o * K + k) * s.inner);
  return make_result<T>(OpKind::kIndexSelect, std::move(out), {&x},
                        [s, indices, K](Node<T>& nd) {
                          auto& xin = *nd.inputs[0];
                          if (!wants_grad(xin)) return;
                          auto& g = xin.grad_buffer();
                          for (std::size_t o = 0; o < s.outer; ++o)
                            for (std::size_t k = 0; k < K; ++k)
                              for (std::size_t i = 0; i < s.inner; ++i)
                                g[(o * s.axis + indices[k]) * s.inner + i] +=
                                    nd.grad[(o * K + k) * s.inner + i];
                        });
}

template <typename T>
Var<T> index_scatter(const Var<T>& base, std::size_t axis,
                     const std::vector<std::size_t>& indices, const Var<T>& values) {
  if (axis >= base.value().rank()) {
    throw ShapeError("index_scatter: axis out of range for " + shape_str(base.shape()));
  }
  check_indices("index_scatter", indices, base.dim(axis), true);
  Shape expect = base.shape();
  expect[axis] = indices.size();
  if (values.shape() != expect) {
    throw ShapeError("index_scatter: values " + shape_str(values.shape()) +
                     " do not match " + shape_str(expect));
  }
  const AxisSplit s = split_at(base.shape(), axis);
  const std::size_t K = indices.size();
  Tensor<T> out = base.value();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t k = 0; k < K; ++k)
      std::copy_n(values.value().data().data() + (o * K + k) * s.inner, s.inner,
                  out.data().data() + (o * s.axis + indices[k]) * s.inner);
  return make_result<T>(
      OpKind::kIndexScatter, std::move(out), {&base, &values},
      [s, indices, K](Node<T>& nd) {
        auto& bin = *nd.inputs[0];
        auto& vin = *nd.inputs[1];
        std::vector<std::uint8_t> replaced(s.axis, 0);
        for (std::size_t i : indices) replaced[i] = 1;
        if (wants_grad(bin)) {
          auto& g = bin.grad_buffer();
          for (std::size_t o = 0; o < s.outer; ++o)
            for (std::size_t a = 0; a < s.axis; ++a) {
              if (replaced[a]) continue;
              for (std::size_t i = 0; i < s.inner; ++i) {
                const std::size_t j = (o * s.axis + a) * s.inner + i;
                g[j] += nd.grad[j];
              }
            }
        }
        if (wants_grad(vin)) {
          auto& g = vin.grad_buffer();
          for (std::size_t o = 0; o < s.outer; ++o)
            for (std::size_t k = 0; k < K; ++k)
              for (std::size_t i = 0; i < s.inner; ++i)
                g[(o * K + k) * s.inner + i] +=
                    nd.grad[(o * s.axis + indices[k]) * s.inner + i];
        }
      });
}

template <typename T>
Var<T> upsample2x(const Var<T>& x) {
  require_rank("upsample2x", x, 4);
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Tensor<T> out(Shape{N, C, 2 * H, 2 * W});
  for (std::size_t p = 0; p < N * C; ++p)
    for (std::size_t y = 0; y < 2 * H; ++y)
      for (std::size_t xx = 0; xx < 2 * W; ++xx)
        out[(p * 2 * H + y) * 2 * W + xx] = x.value()[(p * H + y / 2) * W + xx / 2];
  return make_result<T>(OpKind::kUpsample, std::move(out), {&x},
                        [N, C, H, W](Node<T>& nd) {
                          auto& xin = *nd.inputs[0];
                          if (!wants_grad(xin)) return;
                          auto& g = xin.grad_buffer();
                          for (std::size_t p = 0; p < N * C; ++p)
                            for (std::size_t y = 0; y < 2 * H; ++y)
                              for (std::size_t xx = 0; xx < 2 * W; ++xx)
                                g[(p * H + y / 2) * W + xx / 2] +=
                                    nd.grad[(p * 2 * H + y) * 2 * W + xx];
                        });
}

template <typename T>
Var<T> cross_entropy(const Var<T>& logits, const std::vector<std::size_t>& labels) {
  require_rank("cross_entropy", logits, 2);
  const std::size_t N = logits.dim(0), K = logits.dim(1);
  if (labels.size() != N) {
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) +
                     " labels for logits " + shape_str(logits.shape()));
  }
  std::vector<T> probs(N * K), losses(N);
  for (std::size_t n = 0; n < N; ++n) {
    if (labels[n] >= K) throw ShapeError("cross_entropy: label out of range");
    const T* row = logits.value().data().data() + n * K;
    const T mx = *std::max_element(row, row + K);
    T total = T(0);
    for (std::size_t k = 0; k < K; ++k) total += std::exp(row[k] - mx);
    for (std::size_t k = 0; k < K; ++k) probs[n * K + k] = std::exp(row[k] - mx) / total;
    losses[n] = std::log(total) + mx - row[labels[n]];
  }
  Tensor<T> out = Tensor<T>::scalar(pairwise_sum<T>(losses) / static_cast<T>(N));
  return make_result<T>(OpKind::kCrossEntropy, std::move(out), {&logits},
                        [probs = std::move(probs), labels, N, K](Node<T>& nd) {
                          auto& lin = *nd.inputs[0];
                          if (!wants_grad(lin)) return;
                          auto& g = lin.grad_buffer();
                          const T scale = nd.grad[0] / static_cast<T>(N);
                          for (std::size_t n = 0; n < N; ++n)
                            for (std::size_t k = 0; k < K; ++k)
                              g[n * K + k] += scale * (probs[n * K + k] -
                                                       (k == labels[n] ? T(1) : T(0)));
                        });
}

}  // namespace ad

// ---------------------------------------------------------------------------
// Gradient checking

double grad_check(const LossFn& loss_fn, const ParamStore<double>& params,
                  const GradCheckOptions& options) {
  if (!(options.eps > 0.0 && options.eps <= 1e-3)) {
    throw std::invalid_argument("grad_check: eps must lie in (0, 1e-3]");
  }
  Gradients<double> analytic;
  {
    Tape<double> tape;
    Var<double> loss = loss_fn(tape, params);
    analytic = tape.backward(loss, params);
  }
  ParamStore<double> work = params;
  auto evaluate = [&]() {
    Tape<double> tape(false);
    return loss_fn(tape, work).value()[0];
  };
  std::mt19937_64 rng(options.seed);
  double worst = 0.0;
  for (auto& [name, tensor] : work.tensors()) {
    std::vector<std::size_t> idx(tensor.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (options.max_elements_per_param && idx.size() > options.max_elements_per_param) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(options.max_elements_per_param);
    }
    const Tensor<double>& g = analytic.at(name);
    for (std::size_t i : idx) {
      const double orig = tensor[i];
      tensor[i] = orig + options.eps;
      const double up = evaluate();
      tensor[i] = orig - options.eps;
      const double down = evaluate();
      tensor[i] = orig;
      const double numeric = (up - down) / (2.0 * options.eps);
      const double rel = std::abs(g[i] - numeric) / std::max(1.0, std::abs(numeric));
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Instantiations

#define SEQDIFF_INSTANTIATE(T)                                                   \
  template class ParamStore<T>;                                                  \
  template class Tape<T>;                                                        \
  namespace ad {                                                                 \
  template Var<T> add(const Var<T>&, const Var<T>&);                             \
  template Var<T> sub(const Var<T>&, const Var<T>&);                             \
  template Var<T> mul(const Var<T>&, const Var<T>&);                             \
  template Var<T> scale(const Var<T>&, T);                                       \
  template Var<T> matmul(const Var<T>&, const Var<T>&);                          \
  template Var<T> conv2d(const Var<T>&, const Var<T>&, const Var<T>&,            \
                         std::size_t, std::size_t);                              \
  template Var<T> group_norm(const Var<T>&, const Var<T>&, const Var<T>&,        \
                             std::size_t, T);                                    \
  template Var<T> softmax(const Var<T>&, std::size_t);                           \
  template Var<T> masked_softmax(const Var<T>&, const std::vector<std::uint8_t>&); \
  template Var<T> silu(const Var<T>&);                                           \
  template Var<T> mean(const Var<T>&);                                           \
  template Var<T> sum(const Var<T>&);                                            \
  template Var<T> mse(const Var<T>&, const Var<T>&);                             \
  template Var<T> concat(const std::vector<Var<T>>&, std::size_t);               \
  template Var<T> slice(const Var<T>&, std::size_t, std::size_t, std::size_t);   \
  template Var<T> reshape(const Var<T>&, Shape);                                 \
  template Var<T> permute(const Var<T>&, const std::vector<std::size_t>&);       \
  template Var<T> expand(const Var<T>&, std::size_t, std::size_t);               \
  template Var<T> embedding(const Var<T>&, const std::vector<std::size_t>&);     \
  template Var<T> time_features(const std::vector<T>&, std::size_t);             \
  template Var<T> index_select(const Var<T>&, std::size_t,                       \
                               const std::vector<std::size_t>&);                 \
  template Var<T> index_scatter(const Var<T>&, std::size_t,                      \
                                const std::vector<std::size_t>&, const Var<T>&); \
  template Var<T> upsample2x(const Var<T>&);                                     \
  template Var<T> cross_entropy(const Var<T>&, const std::vector<std::size_t>&); \
  }

SEQDIFF_INSTANTIATE(float)
SEQDIFF_INSTANTIATE(double)

#undef SEQDIFF_INSTANTIATE

}  // namespace seqdiff
