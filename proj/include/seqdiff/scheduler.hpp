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

// DDPM noise schedule, forward noising, reverse posterior step and the
// masked noise-prediction loss.

#ifndef SEQDIFF_SCHEDULER_HPP_
#define SEQDIFF_SCHEDULER_HPP_

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "seqdiff/autodiff.hpp"
#include "seqdiff/tensor.hpp"

namespace seqdiff {

// Tables are indexed by step t in [1, T]; index 0 holds the t = 0 boundary
// (beta = 0, alpha_bar = 1).
struct SchedulerParams {
  std::size_t steps = 0;
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;
  std::vector<double> posterior_variance;

  // Accepts any betas in [0, 1); zero betas give a noiseless chain.
  static SchedulerParams from_betas(const std::vector<double>& betas) {
    if (betas.empty()) throw std::invalid_argument("schedule: T must be >= 1");
    SchedulerParams p;
    p.steps = betas.size();
    p.beta.assign(p.steps + 1, 0.0);
    p.alpha.assign(p.steps + 1, 1.0);
    p.alpha_bar.assign(p.steps + 1, 1.0);
    p.posterior_variance.assign(p.steps + 1, 0.0);
    for (std::size_t t = 1; t <= p.steps; ++t) {
      const double b = betas[t - 1];
      if (!(b >= 0.0 && b < 1.0)) {
        throw std::invalid_argument("schedule: beta_" + std::to_string(t) +
                                    " outside [0,1)");
      }
      p.beta[t] = b;
      p.alpha[t] = 1.0 - b;
      p.alpha_bar[t] = p.alpha_bar[t - 1] * (1.0 - b);
      const double denom = 1.0 - p.alpha_bar[t];
      // sigma_1 = 0: the last reverse step adds no noise.
      p.posterior_variance[t] =
          (t == 1 || denom == 0.0) ? 0.0 : b * (1.0 - p.alpha_bar[t - 1]) / denom;
    }
    return p;
  }

  void check_step(std::size_t t, const char* op) const {
    if (t < 1 || t > steps) {
      throw std::out_of_range(std::string(op) + ": step " + std::to_string(t) +
                              " outside [1," + std::to_string(steps) + "]");
    }
  }
};

// Linear beta schedule from beta_start to beta_end over T steps.
inline SchedulerParams make_schedule(std::size_t steps, double beta_start,
                                     double beta_end) {
  if (steps < 1) throw std::invalid_argument("make_schedule: T must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw std::invalid_argument(
        "make_schedule: need 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> betas(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
    betas[i] = beta_start + frac * (beta_end - beta_start);
  }
  return SchedulerParams::from_betas(betas);
}

// Z_t = sqrt(alpha_bar_t) Z_0 + sqrt(1 - alpha_bar_t) eps.
template <typename T>
Tensor<T> q_sample(const Tensor<T>& z0, std::size_t t, const Tensor<T>& noise,
                   const SchedulerParams& params) {
  params.check_step(t, "q_sample");
  if (z0.shape() != noise.shape()) {
    throw ShapeError("q_sample: latent " + shape_str(z0.shape()) + " vs noise " +
                     shape_str(noise.shape()));
  }
  const T a = static_cast<T>(std::sqrt(params.alpha_bar[t]));
  const T s = static_cast<T>(std::sqrt(1.0 - params.alpha_bar[t]));
  Tensor<T> out(z0.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * z0[i] + s * noise[i];
  return out;
}

// One Markov transition q(Z_t | Z_{t-1}).
template <typename T>
Tensor<T> q_step(const Tensor<T>& prev, std::size_t t, const Tensor<T>& noise,
                 const SchedulerParams& params) {
  params.check_step(t, "q_step");
  if (prev.shape() != noise.shape()) {
    throw ShapeError("q_step: shape mismatch " + shape_str(prev.shape()) + " vs " +
                     shape_str(noise.shape()));
  }
  const T a = static_cast<T>(std::sqrt(1.0 - params.beta[t]));
  const T s = static_cast<T>(std::sqrt(params.beta[t]));
  Tensor<T> out(prev.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * prev[i] + s * noise[i];
  return out;
}

// Z_{t-1} = (Z_t - beta_t / sqrt(1 - alpha_bar_t) * eps_hat) / sqrt(alpha_t)
//           + sigma_t z.
template <typename T>
Tensor<T> reverse_step(const Tensor<T>& zt, const Tensor<T>& eps_hat, std::size_t t,
                       const Tensor<T>& z, const SchedulerParams& params) {
  params.check_step(t, "reverse_step");
  if (zt.shape() != eps_hat.shape()) {
    throw ShapeError("reverse_step: latent " + shape_str(zt.shape()) +
                     " vs prediction " + shape_str(eps_hat.shape()));
  }
  const double one_minus_ab = 1.0 - params.alpha_bar[t];
  const double coef = one_minus_ab > 0.0 ? params.beta[t] / std::sqrt(one_minus_ab) : 0.0;
  const double inv_sqrt_alpha = 1.0 / std::sqrt(params.alpha[t]);
  const double sigma = std::sqrt(params.posterior_variance[t]);
  const bool use_noise = sigma > 0.0;
  if (use_noise && z.shape() != zt.shape()) {
    throw ShapeError("reverse_step: noise " + shape_str(z.shape()) + " vs latent " +
                     shape_str(zt.shape()));
  }
  Tensor<T> out(zt.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double mu = (static_cast<double>(zt[i]) - coef * static_cast<double>(eps_hat[i])) *
                inv_sqrt_alpha;
    if (use_noise) mu += sigma * static_cast<double>(z[i]);
    out[i] = static_cast<T>(mu);
  }
  return out;
}

// Weighted mean of (eps - eps_hat)^2 over frames [F, ...]. frame_weights[f]
// is 0 for excluded frames; with 0/1 weights this is the plain mean over the
// included elements.
template <typename T>
double training_loss(const Tensor<T>& eps, const Tensor<T>& eps_hat,
                     const std::vector<double>& frame_weights) {
  if (eps.shape() != eps_hat.shape()) {
    throw ShapeError("training_loss: " + shape_str(eps.shape()) + " vs " +
                     shape_str(eps_hat.shape()));
  }
  if (eps.rank() == 0 || frame_weights.size() != eps.dim(0)) {
    throw ShapeError("training_loss: loss mask length does not match frames of " +
                     shape_str(eps.shape()));
  }
  const std::size_t per_frame = eps.size() / eps.dim(0);
  double total = 0.0, weight = 0.0;
  for (std::size_t f = 0; f < frame_weights.size(); ++f) {
    if (frame_weights[f] == 0.0) continue;
    std::vector<double> sq(per_frame);
    for (std::size_t i = 0; i < per_frame; ++i) {
      const double d = static_cast<double>(eps[f * per_frame + i]) -
                       static_cast<double>(eps_hat[f * per_frame + i]);
      sq[i] = d * d;
    }
    total += frame_weights[f] * pairwise_sum<double>(sq);
    weight += frame_weights[f] * static_cast<double>(per_frame);
  }
  if (weight == 0.0) throw std::invalid_argument("training_loss: empty loss mask");
  return total / weight;
}

// Differentiable form of training_loss; eps is a constant target.
template <typename T>
Var<T> training_loss(const Tensor<T>& eps, const Var<T>& eps_hat,
                     const std::vector<double>& frame_weights) {
  if (eps.shape() != eps_hat.shape()) {
    throw ShapeError("training_loss: " + shape_str(eps.shape()) + " vs " +
                     shape_str(eps_hat.shape()));
  }
  if (eps.rank() == 0 || frame_weights.size() != eps.dim(0)) {
    throw ShapeError("training_loss: loss mask length does not match frames of " +
                     shape_str(eps.shape()));
  }
  const std::size_t per_frame = eps.size() / eps.dim(0);
  double weight = 0.0;
  Tensor<T> w(eps.shape());
  for (std::size_t f = 0; f < frame_weights.size(); ++f) {
    weight += frame_weights[f] * static_cast<double>(per_frame);
    for (std::size_t i = 0; i < per_frame; ++i)
      w[f * per_frame + i] = static_cast<T>(frame_weights[f]);
  }
  if (weight == 0.0) throw std::invalid_argument("training_loss: empty loss mask");
  auto diff = ad::sub(eps_hat, Var<T>::constant(eps));
  auto weighted = ad::mul(ad::mul(diff, diff), Var<T>::constant(std::move(w)));
  return ad::scale(ad::sum(weighted), static_cast<T>(1.0 / weight));
}

}  // namespace seqdiff

#endif  // SEQDIFF_SCHEDULER_HPP_
