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

#include "seqdiff/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <sstream>

#include "seqdiff/optimizer.hpp"

namespace seqdiff {

double psnr(const Tensor<float>& a, const Tensor<float>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("psnr: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  std::vector<double> sq(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    sq[i] = d * d;
  }
  const double mse = pairwise_sum<double>(sq) / static_cast<double>(sq.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

namespace {

// Channel-mean grayscale plane of a [H,W] or [C,H,W] image.
std::vector<double> gray_plane(const Tensor<float>& img, std::size_t& H, std::size_t& W) {
  if (img.rank() == 2) {
    H = img.dim(0);
    W = img.dim(1);
    return std::vector<double>(img.data().begin(), img.data().end());
  }
  if (img.rank() != 3) throw ShapeError("expected [H,W] or [C,H,W], got " + shape_str(img.shape()));
  const std::size_t C = img.dim(0);
  H = img.dim(1);
  W = img.dim(2);
  std::vector<double> g(H * W, 0.0);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t i = 0; i < H * W; ++i) g[i] += img[c * H * W + i];
  for (auto& v : g) v /= static_cast<double>(C);
  return g;
}

double ssim_plane(const double* a, const double* b, std::size_t H, std::size_t W,
                  std::size_t win) {
  constexpr double kC1 = 0.01 * 0.01, kC2 = 0.03 * 0.03;
  const double n = static_cast<double>(win * win);
  std::vector<double> local;
  for (std::size_t y = 0; y + win <= H; ++y) {
    for (std::size_t x = 0; x + win <= W; ++x) {
      double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      for (std::size_t dy = 0; dy < win; ++dy)
        for (std::size_t dx = 0; dx < win; ++dx) {
          const double va = a[(y + dy) * W + x + dx], vb = b[(y + dy) * W + x + dx];
          sa += va;
          sb += vb;
          saa += va * va;
          sbb += vb * vb;
          sab += va * vb;
        }
      const double ma = sa / n, mb = sb / n;
      const double va = saa / n - ma * ma, vb = sbb / n - mb * mb, cab = sab / n - ma * mb;
      local.push_back(((2 * ma * mb + kC1) * (2 * cab + kC2)) /
                      ((ma * ma + mb * mb + kC1) * (va + vb + kC2)));
    }
  }
  return pairwise_sum<double>(local) / static_cast<double>(local.size());
}

}  // namespace

double ssim(const Tensor<float>& a, const Tensor<float>& b, std::size_t window) {
  if (a.shape() != b.shape()) {
    throw ShapeError("ssim: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  if (window == 0 || window % 2 == 0) throw std::invalid_argument("ssim: window must be odd");
  if (a.rank() != 2 && a.rank() != 3) throw ShapeError("ssim: expected [H,W] or [C,H,W]");
  const std::size_t C = a.rank() == 3 ? a.dim(0) : 1;
  const std::size_t H = a.dim(a.rank() - 2), W = a.dim(a.rank() - 1);
  if (H < window || W < window) {
    throw std::invalid_argument("ssim: image " + std::to_string(H) + "x" + std::to_string(W) +
                                " smaller than window " + std::to_string(window));
  }
  std::vector<double> da(a.data().begin(), a.data().end()), db(b.data().begin(), b.data().end());
  double total = 0.0;
  for (std::size_t c = 0; c < C; ++c)
    total += ssim_plane(da.data() + c * H * W, db.data() + c * H * W, H, W, window);
  return total / static_cast<double>(C);
}

double vcdr_threshold(double disc_area_px, std::size_t image_size) {
  // A typical synthetic disc (~300 px on a 32x32 canvas) maps to a medium disc.
  const double px_per_mm2 = 130.0 * (image_size / 32.0) * (image_size / 32.0);
  const double mm2 = disc_area_px / px_per_mm2;
  if (mm2 < 2.0) return 0.69;
  if (mm2 <= 2.7) return 0.72;
  return 0.76;
}

namespace {

// Largest 4-connected component of `on`, as a mask.
std::vector<std::uint8_t> largest_component(const std::vector<std::uint8_t>& on, std::size_t H,
                                            std::size_t W) {
  std::vector<int> label(H * W, -1);
  std::vector<std::size_t> sizes;
  for (std::size_t start = 0; start < H * W; ++start) {
    if (!on[start] || label[start] >= 0) continue;
    const int id = static_cast<int>(sizes.size());
    std::size_t count = 0;
    std::deque<std::size_t> queue{start};
    label[start] = id;
    while (!queue.empty()) {
      const std::size_t p = queue.front();
      queue.pop_front();
      ++count;
      const std::size_t y = p / W, x = p % W;
      const std::size_t nbrs[4] = {y > 0 ? p - W : p, y + 1 < H ? p + W : p,
                                   x > 0 ? p - 1 : p, x + 1 < W ? p + 1 : p};
      for (std::size_t q : nbrs) {
        if (q != p && on[q] && label[q] < 0) {
          label[q] = id;
          queue.push_back(q);
        }
      }
    }
    sizes.push_back(count);
  }
  std::vector<std::uint8_t> mask(H * W, 0);
  if (sizes.empty()) return mask;
  const int best = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  for (std::size_t i = 0; i < H * W; ++i) mask[i] = label[i] == best;
  return mask;
}

// Densest value: centre of the 0.01-wide interval holding the most samples,
// refined to the mean of those samples.
double dominant_level(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t best_lo = 0, best_n = 0;
  for (std::size_t lo = 0, hi = 0; lo < v.size(); ++lo) {
    while (hi < v.size() && v[hi] - v[lo] <= 0.01) ++hi;
    if (hi - lo > best_n) {
      best_n = hi - lo;
      best_lo = lo;
    }
  }
  double s = 0.0;
  for (std::size_t i = best_lo; i < best_lo + best_n; ++i) s += v[i];
  return s / static_cast<double>(best_n);
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

VcdrResult vcdr(const Tensor<float>& image) {
  std::size_t H = 0, W = 0;
  const std::vector<double> g = gray_plane(image, H, W);
  auto at = [&](std::ptrdiff_t y, std::ptrdiff_t x) {
    y = std::clamp<std::ptrdiff_t>(y, 0, static_cast<std::ptrdiff_t>(H) - 1);
    x = std::clamp<std::ptrdiff_t>(x, 0, static_cast<std::ptrdiff_t>(W) - 1);
    return g[static_cast<std::size_t>(y) * W + static_cast<std::size_t>(x)];
  };
  std::vector<double> smooth(H * W);
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x) {
      double s = 0.0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          s += at(static_cast<std::ptrdiff_t>(y) + dy, static_cast<std::ptrdiff_t>(x) + dx);
      smooth[y * W + x] = s / 9.0;
    }
  std::vector<std::uint8_t> on(H * W);
  for (std::size_t i = 0; i < H * W; ++i) on[i] = smooth[i] >= 0.5;
  const auto disc = largest_component(on, H, W);
  std::size_t disc_count = 0;
  double sum_x = 0.0;
  for (std::size_t i = 0; i < H * W; ++i)
    if (disc[i]) {
      ++disc_count;
      sum_x += static_cast<double>(i % W) + 0.5;
    }
  if (disc_count == 0) throw UngradableFrame("vcdr: no optic disc component (ungradable frame)");
  for (std::size_t i = 0; i < H * W; ++i) on[i] = disc[i] && smooth[i] >= 0.8;
  const auto cup = largest_component(on, H, W);

  std::vector<double> cup_values, rim_values;
  for (std::size_t i = 0; i < H * W; ++i) {
    if (cup[i] && g[i] >= 0.8) cup_values.push_back(g[i]);
    if (disc[i] && g[i] >= 0.5 && g[i] < 0.8) rim_values.push_back(g[i]);
  }
  const bool has_cup = !cup_values.empty();
  const double cup_level = has_cup ? dominant_level(cup_values) : 1.0;
  // No visible rim means the cup fills the disc.
  const double disc_level = rim_values.size() >= 3 ? dominant_level(rim_values) : cup_level;

  const std::size_t col = static_cast<std::size_t>(std::floor(sum_x / disc_count));
  std::ptrdiff_t top = -1, bottom = -1;
  for (std::size_t y = 0; y < H; ++y)
    if (disc[y * W + col]) {
      if (top < 0) top = static_cast<std::ptrdiff_t>(y);
      bottom = static_cast<std::ptrdiff_t>(y);
    }
  if (top < 0) throw UngradableFrame("vcdr: disc column is empty");

  // Background level on each side, extrapolated linearly from two rows
  // outside the disc.
  auto background = [&](std::ptrdiff_t near_row, std::ptrdiff_t far_row) {
    const double a = at(near_row, static_cast<std::ptrdiff_t>(col));
    const double b = at(far_row, static_cast<std::ptrdiff_t>(col));
    const double slope = std::clamp(a - b, -0.02, 0.02);
    const double dir = near_row > far_row ? 1.0 : -1.0;
    return [a, slope, dir, near_row](std::ptrdiff_t y) {
      return a + slope * dir * static_cast<double>(y - near_row);
    };
  };
  const auto bg_top = background(top - 3, top - 4);
  const auto bg_bottom = background(bottom + 3, bottom + 4);
  const double middle = 0.5 * static_cast<double>(top + bottom);

  double disc_len = 0.0, cup_len = 0.0;
  for (std::ptrdiff_t y = std::max<std::ptrdiff_t>(0, top - 2);
       y <= std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(H) - 1, bottom + 2); ++y) {
    const double v = at(y, static_cast<std::ptrdiff_t>(col));
    const double bg = static_cast<double>(y) <= middle ? bg_top(y) : bg_bottom(y);
    double a;
    if (v >= disc_level) {
      a = 1.0;
    } else {
      a = disc_level - bg > 1e-6 ? clamp01((v - bg) / (disc_level - bg)) : 0.0;
    }
    disc_len += a;
    if (!has_cup) continue;
    if (cup_level - disc_level > 1e-6) {
      cup_len += clamp01((v - disc_level) / (cup_level - disc_level));
    } else {
      cup_len += a;
    }
  }
  VcdrResult r;
  r.disc_extent = disc_len;
  r.cup_extent = cup_len;
  r.vcdr = disc_len > 0.0 ? cup_len / disc_len : 0.0;
  r.disc_area = static_cast<double>(disc_count);
  r.threshold = vcdr_threshold(r.disc_area, std::max(H, W));
  r.glaucoma = r.vcdr > r.threshold;
  return r;
}

// ---- classifier -------------------------------------------------------------

ParamStore<float> init_classifier(std::size_t channels, std::size_t image_size,
                                  std::uint64_t seed) {
  if (image_size % 4 != 0) throw std::invalid_argument("classifier: image size must be divisible by 4");
  std::mt19937_64 rng(seed);
  ParamStore<float> p;
  auto he = [&](const std::string& name, Shape shape, std::size_t fan_in) {
    Tensor<float> t(std::move(shape));
    std::normal_distribution<double> d(0.0, std::sqrt(2.0 / fan_in));
    for (auto& v : t.data()) v = static_cast<float>(d(rng));
    p.set(name, std::move(t));
  };
  const std::size_t q = image_size / 4;
  he("c1.w", {8, channels, 3, 3}, channels * 9);
  p.set("c1.b", Tensor<float>(Shape{8}));
  he("c2.w", {16, 8, 3, 3}, 72);
  p.set("c2.b", Tensor<float>(Shape{16}));
  he("fc.w", {16 * q * q, 2}, 16 * q * q);
  p.set("fc.b", Tensor<float>(Shape{2}));
  return p;
}

template <typename T>
Var<T> classifier_logits(Tape<T>& tape, const ParamStore<T>& params, const Var<T>& images) {
  if (images.value().rank() != 4) {
    throw ShapeError("classifier: expected [N,C,H,W], got " + shape_str(images.shape()));
  }
  const std::size_t N = images.dim(0);
  auto h = ad::silu(ad::conv2d(images, tape.param(params, "c1.w"), tape.param(params, "c1.b"), 2, 1));
  h = ad::silu(ad::conv2d(h, tape.param(params, "c2.w"), tape.param(params, "c2.b"), 2, 1));
  const std::size_t flat = h.value().size() / N;
  h = ad::matmul(ad::reshape(h, Shape{N, flat}), tape.param(params, "fc.w"));
  auto b = ad::expand(ad::reshape(tape.param(params, "fc.b"), Shape{1, 2}), 0, N);
  return ad::add(h, b);
}

template Var<float> classifier_logits(Tape<float>&, const ParamStore<float>&, const Var<float>&);
template Var<double> classifier_logits(Tape<double>&, const ParamStore<double>&,
                                       const Var<double>&);

namespace {

Tensor<float> gather(const Tensor<float>& images, const std::vector<std::size_t>& idx) {
  const std::size_t per = images.size() / images.dim(0);
  Shape s = images.shape();
  s[0] = idx.size();
  Tensor<float> out(s);
  for (std::size_t i = 0; i < idx.size(); ++i)
    std::copy_n(images.data().begin() + idx[i] * per, per, out.data().begin() + i * per);
  return out;
}

}  // namespace

std::vector<int> classify(const ParamStore<float>& params, const Tensor<float>& images) {
  constexpr std::size_t kChunk = 256;
  std::vector<int> out;
  const std::size_t N = images.rank() == 4 ? images.dim(0) : 0;
  for (std::size_t begin = 0; begin < N; begin += kChunk) {
    std::vector<std::size_t> idx;
    for (std::size_t i = begin; i < std::min(N, begin + kChunk); ++i) idx.push_back(i);
    Tape<float> tape(false);
    const auto logits = classifier_logits(tape, params, Var<float>::constant(gather(images, idx)));
    for (std::size_t i = 0; i < idx.size(); ++i)
      out.push_back(logits.value()[2 * i + 1] > logits.value()[2 * i] ? 1 : 0);
  }
  return out;
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size() || truth.empty()) {
    throw std::invalid_argument("accuracy: need equal, nonempty label lists");
  }
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += predicted[i] == truth[i];
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

double balanced_accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size() || truth.empty()) {
    throw std::invalid_argument("balanced_accuracy: need equal, nonempty label lists");
  }
  double total = 0.0;
  int classes = 0;
  for (int c = 0; c <= 1; ++c) {
    std::size_t n = 0, hit = 0;
    for (std::size_t i = 0; i < truth.size(); ++i)
      if (truth[i] == c) {
        ++n;
        hit += predicted[i] == c;
      }
    if (n == 0) continue;
    total += static_cast<double>(hit) / static_cast<double>(n);
    ++classes;
  }
  return total / classes;
}

ParamStore<float> train_classifier(const Tensor<float>& train_images,
                                   const std::vector<int>& train_labels,
                                   const Tensor<float>& heldout_images,
                                   const std::vector<int>& heldout_labels,
                                   const ClassifierConfig& config, ClassifierReport* report) {
  if (train_images.rank() != 4 || train_images.dim(0) != train_labels.size() ||
      train_labels.empty()) {
    throw ShapeError("train_classifier: images " + shape_str(train_images.shape()) + " vs " +
                     std::to_string(train_labels.size()) + " labels");
  }
  if (train_images.dim(2) != train_images.dim(3)) {
    throw ShapeError("train_classifier: images must be square");
  }
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < train_labels.size(); ++i) {
    if (train_labels[i] != 0 && train_labels[i] != 1) {
      throw std::invalid_argument("train_classifier: labels must be 0 or 1");
    }
    by_class[train_labels[i]].push_back(i);
  }
  auto params = init_classifier(train_images.dim(1), train_images.dim(2), config.seed);
  OptimizerState<float> state;
  AdamConfig adam;
  adam.learning_rate = config.learning_rate;
  std::mt19937_64 rng(config.seed ^ 0xC1A55u);
  const bool balanced = config.balanced_sampling && !by_class[0].empty() && !by_class[1].empty();
  double last_loss = 0.0;
  for (std::size_t step = 0; step < config.steps; ++step) {
    std::vector<std::size_t> idx;
    std::vector<std::size_t> labels;
    for (std::size_t b = 0; b < config.batch; ++b) {
      std::size_t i;
      if (balanced) {
        const auto& pool = by_class[b % 2];
        i = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
      } else {
        i = std::uniform_int_distribution<std::size_t>(0, train_labels.size() - 1)(rng);
      }
      idx.push_back(i);
      labels.push_back(static_cast<std::size_t>(train_labels[i]));
    }
    Tape<float> tape;
    auto logits = classifier_logits(tape, params, Var<float>::constant(gather(train_images, idx)));
    auto loss = ad::cross_entropy(logits, labels);
    last_loss = loss.value()[0];
    if (!std::isfinite(last_loss)) throw std::runtime_error("train_classifier: non-finite loss");
    adam_step(params, tape.backward(loss, params), state, adam);
  }
  ClassifierReport r;
  r.final_loss = last_loss;
  r.train_accuracy = balanced_accuracy(classify(params, train_images), train_labels);
  if (!heldout_labels.empty()) {
    r.heldout_accuracy = balanced_accuracy(classify(params, heldout_images), heldout_labels);
  }
  if (report) *report = r;
  if (config.accuracy_floor > 0.0 && r.heldout_accuracy < config.accuracy_floor) {
    std::ostringstream os;
    os << "train_classifier: held-out balanced accuracy " << r.heldout_accuracy
       << " below floor " << config.accuracy_floor << " (train " << r.train_accuracy
       << ", final loss " << r.final_loss << ", " << config.steps << " steps)";
    throw AccuracyFloorError(os.str());
  }
  return params;
}

double ams(const std::vector<int>& predicted, const std::vector<int>& intended) {
  if (predicted.size() != intended.size() || intended.empty()) {
    throw std::invalid_argument("ams: need equal, nonempty label lists");
  }
  return accuracy(predicted, intended);
}

}  // namespace seqdiff
