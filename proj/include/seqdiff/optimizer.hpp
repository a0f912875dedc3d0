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

#ifndef SEQDIFF_OPTIMIZER_HPP_
#define SEQDIFF_OPTIMIZER_HPP_

#include <cmath>
#include <cstdint>
#include <map>
#include <string>

#include "seqdiff/autodiff.hpp"

namespace seqdiff {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct OptimizerState {
  std::map<std::string, Tensor<T>> first_moment;
  std::map<std::string, Tensor<T>> second_moment;
  std::uint64_t step = 0;
};

// One bias-corrected Adam update of every parameter in `params`.
template <typename T>
void adam_step(ParamStore<T>& params, const Gradients<T>& grads,
               OptimizerState<T>& state, const AdamConfig& config) {
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (auto& [name, param] : params.tensors()) {
    auto git = grads.find(name);
    if (git == grads.end()) {
      throw std::invalid_argument("adam_step: no gradient for '" + name + "'");
    }
    const Tensor<T>& g = git->second;
    if (g.shape() != param.shape()) {
      throw ShapeError("adam_step: gradient " + shape_str(g.shape()) +
                       " does not match parameter '" + name + "' " +
                       shape_str(param.shape()));
    }
    auto& m = state.first_moment[name];
    auto& v = state.second_moment[name];
    if (m.empty()) m = Tensor<T>(param.shape());
    if (v.empty()) v = Tensor<T>(param.shape());
    if (m.shape() != param.shape() || v.shape() != param.shape()) {
      throw ShapeError("adam_step: moment shape mismatch for '" + name + "'");
    }
    const T b1 = static_cast<T>(config.beta1), b2 = static_cast<T>(config.beta2);
    const T lr = static_cast<T>(config.learning_rate);
    const T c1 = static_cast<T>(correction1), c2 = static_cast<T>(correction2);
    const T eps = static_cast<T>(config.epsilon);
    for (std::size_t i = 0; i < param.size(); ++i) {
      m[i] = b1 * m[i] + (T(1) - b1) * g[i];
      v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
      const T m_hat = m[i] / c1;
      const T v_hat = v[i] / c2;
      param[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

}  // namespace seqdiff

#endif  // SEQDIFF_OPTIMIZER_HPP_
