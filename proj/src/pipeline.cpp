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

#include "seqdiff/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>
#include "seqdiff/denoiser.hpp"
#include "seqdiff/metrics.hpp"
#include "seqdiff/scheduler.hpp"

namespace seqdiff {

namespace fs = std::filesystem;

Window make_window(const LoadedSequence& seq, int target_year, const RunConfig& config) {
  const std::size_t F = config.frames;
  const int start = window_start_for(target_year, F, config.years_per_slot);
  std::vector<std::size_t> visits;
  std::vector<int> years;
  for (std::size_t i = 0; i < seq.years.size(); ++i) {
    if (seq.years[i] >= start && seq.years[i] <= target_year) {
      visits.push_back(i);
      years.push_back(seq.years[i]);
    }
  }
  Window w;
  w.mask = align(years, start, F, config.years_per_slot);
  w.target_slot = *w.mask.slot_of(target_year);
  const Shape& s = seq.frames.shape();
  const std::size_t per = s[1] * s[2] * s[3];
  w.images.frames = Tensor<float>(Shape{F, s[1], s[2], s[3]});
  w.images.present.assign(F, false);
  w.images.labels.assign(F, 0);
  for (std::size_t f = 0; f < F; ++f) w.images.years.push_back(w.mask.slot_year(f));
  for (std::size_t i : visits) {
    const std::size_t slot = *w.mask.slot_of(seq.years[i]);
    std::copy_n(seq.frames.data().begin() + i * per, per, w.images.frames.data().begin() + slot * per);
    w.images.present[slot] = true;
    w.images.labels[slot] = seq.labels[i];
  }
  return w;
}

std::vector<std::size_t> window_end_candidates(const LoadedSequence& seq, const RunConfig& config) {
  const int span = static_cast<int>(config.frames) * config.years_per_slot;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < seq.years.size(); ++i) {
    std::size_t inside = 0;
    for (std::size_t j = 0; j <= i; ++j) inside += seq.years[j] > seq.years[i] - span;
    if (inside >= 2) out.push_back(i);
  }
  return out;
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string loss_csv(const std::vector<std::pair<std::size_t, double>>& losses) {
  std::string s = "step,loss\n";
  char buf[64];
  for (const auto& [step, loss] : losses) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g\n", step, loss);
    s += buf;
  }
  return s;
}

std::vector<std::pair<std::size_t, double>> read_loss_csv(const fs::path& path, std::size_t upto) {
  std::vector<std::pair<std::size_t, double>> rows;
  std::ifstream in(path);
  if (!in) return rows;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    const std::size_t step = std::stoull(line.substr(0, comma));
    if (step <= upto) rows.emplace_back(step, std::stod(line.substr(comma + 1)));
  }
  return rows;
}

// Config JSON stored in checkpoints: paths are not part of a model.
std::string portable_config_json(RunConfig config) {
  config.data_dir.clear();
  config.run_dir.clear();
  return config.to_json();
}

void fill_normal(Tensor<float>& t, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& v : t.data()) v = static_cast<float>(n(rng));
}

LabelMask slot_labels(const Window& w, const TimeAlignedMask& mask, bool conditioning) {
  LabelMask m;
  m.labels = w.images.labels;
  m.no_label.assign(mask.slots(), true);
  for (std::size_t f = 0; f < mask.slots(); ++f)
    m.no_label[f] = !conditioning || mask.codes[f] == SlotCode::kMissing;
  return m;
}

}  // namespace

Checkpoint training_checkpoint(const RunConfig& config, const TrainOutcome& outcome) {
  return make_checkpoint(outcome.params, &outcome.optimizer, outcome.optimizer.step,
                         config.training_hash(), portable_config_json(config));
}

RunConfig checkpoint_config(const Checkpoint& ckpt) {
  RunConfig c = RunConfig::from_json(ckpt.config_json);
  if (c.training_hash() != ckpt.config_hash) {
    throw std::runtime_error("checkpoint: embedded config does not match its hash");
  }
  return c;
}

TrainOutcome train_model(const RunConfig& config, const std::vector<LoadedSequence>& train_set,
                         const std::string& run_dir, const Checkpoint* resume) {
  config.validate(true);
  const DenoiserConfig dcfg = config.denoiser();
  const SchedulerParams sched = config.schedule();
  const CodecConfig codec = config.codec();
  const std::size_t F = config.frames, B = config.train.batch_size;
  const std::size_t Cl = dcfg.latent_channels, h = dcfg.latent_size;

  std::vector<std::pair<const LoadedSequence*, std::vector<std::size_t>>> pool;
  for (const auto& seq : train_set) {
    auto ends = window_end_candidates(seq, config);
    if (!ends.empty()) pool.emplace_back(&seq, std::move(ends));
  }
  if (pool.empty()) throw std::invalid_argument("train: no sequence has two visits in one window");

  TrainOutcome out;
  std::size_t start = 0;
  if (resume) {
    if (resume->config_hash != config.training_hash()) {
      throw std::invalid_argument("train: resume checkpoint was written under a different config");
    }
    out.params = checkpoint_params(*resume);
    out.optimizer = checkpoint_optimizer(*resume);
    start = resume->step;
    if (start > config.train.steps) {
      throw std::invalid_argument("train: checkpoint step " + std::to_string(start) +
                                  " is past train.steps");
    }
    if (!run_dir.empty()) out.losses = read_loss_csv(fs::path(run_dir) / "loss.csv", start);
  } else {
    out.params = init_model(dcfg, *config.seed);
  }
  if (!run_dir.empty()) {
    fs::create_directories(run_dir);
    write_text(fs::path(run_dir) / "config.json", portable_config_json(config));
  }

  const std::uint64_t seed = *config.seed;
  for (std::size_t step = start + 1; step <= config.train.steps; ++step) {
    std::seed_seq seq_seed{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                           static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32)};
    std::mt19937_64 rng(seq_seed);
    Tensor<float> z_hat(Shape{B * F, 3 * Cl, h, h});
    Tensor<float> eps_all(Shape{B * F, Cl, h, h});
    std::vector<double> weights;
    std::vector<std::size_t> steps;
    std::vector<LabelMask> labels;
    for (std::size_t b = 0; b < B; ++b) {
      const auto& [seq, ends] =
          pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
      const std::size_t end = ends[std::uniform_int_distribution<std::size_t>(0, ends.size() - 1)(rng)];
      const Window win = make_window(*seq, seq->years[end], config);
      const TimeAlignedMask mask = hide_random_frame(win.mask, rng);
      const Tensor<float> z0 = encode(win.images, codec);
      const std::size_t t = std::uniform_int_distribution<std::size_t>(1, sched.steps)(rng);
      Tensor<float> eps(z0.shape());
      fill_normal(eps, rng);
      const auto cond = make_conditioning(z0, mask, config.train.normalize_missing,
                                          config.train.hidden_weight);
      const Tensor<float> zh = assemble_input(q_sample(z0, t, eps, sched), cond.mask_hat, cond.z_masked);
      std::copy(zh.data().begin(), zh.data().end(), z_hat.data().begin() + b * zh.size());
      std::copy(eps.data().begin(), eps.data().end(), eps_all.data().begin() + b * eps.size());
      weights.insert(weights.end(), cond.loss_weights.begin(), cond.loss_weights.end());
      steps.push_back(t);
      labels.push_back(slot_labels(win, mask, config.train.label_conditioning));
    }
    Tape<float> tape;
    const auto eps_hat = predict_noise(tape, out.params, dcfg, Var<float>::constant(z_hat), steps, labels);
    const auto loss = training_loss(eps_all, eps_hat, weights);
    const double value = loss.value()[0];
    if (!std::isfinite(value)) {
      std::ostringstream os;
      os << "train: non-finite loss at step " << step << " (t =";
      for (std::size_t t : steps) os << ' ' << t;
      os << ", lr " << config.optimizer.learning_rate << ")";
      throw std::runtime_error(os.str());
    }
    adam_step(out.params, tape.backward(loss, out.params), out.optimizer, config.optimizer);
    out.losses.emplace_back(step, value);
    if (!run_dir.empty() && config.train.checkpoint_interval > 0 &&
        step % config.train.checkpoint_interval == 0) {
      char name[64];
      std::snprintf(name, sizeof name, "ckpt_%06zu.bin", step);
      training_checkpoint(config, out).save((fs::path(run_dir) / name).string());
      write_text(fs::path(run_dir) / "loss.csv", loss_csv(out.losses));
    }
  }
  if (!run_dir.empty()) {
    training_checkpoint(config, out).save((fs::path(run_dir) / "model.bin").string());
    write_text(fs::path(run_dir) / "loss.csv", loss_csv(out.losses));
  }
  return out;
}

std::vector<Tensor<float>> generate_frames(const ParamStore<float>& params, const RunConfig& config,
                                           const std::vector<GenerationRequest>& requests) {
  const DenoiserConfig dcfg = config.denoiser();
  return generate_frames(
      [&](const Tensor<float>& z_hat, const std::vector<std::size_t>& steps,
          const std::vector<LabelMask>& labels) {
        Tape<float> tape(false);
        return predict_noise(tape, params, dcfg, Var<float>::constant(z_hat), steps, labels).value();
      },
      config, requests);
}

std::vector<Tensor<float>> generate_frames(const NoisePredictor& predict, const RunConfig& config,
                                           const std::vector<GenerationRequest>& requests) {
  const DenoiserConfig dcfg = config.denoiser();
  const SchedulerParams sched = config.schedule();
  const CodecConfig codec = config.codec();
  const std::size_t F = config.frames, Cl = dcfg.latent_channels, h = dcfg.latent_size;
  const std::size_t per_frame = Cl * h * h;
  const bool conditioning = config.train.label_conditioning;

  struct Chain {
    Window win;
    TimeAlignedMask mask;
    Tensor<float> z0, z;
    ConditioningBundle<float> cond;
    LabelMask labels;
    std::mt19937_64 rng;
  };

  std::vector<Tensor<float>> out;
  for (std::size_t begin = 0; begin < requests.size(); begin += config.generate.batch_size) {
    const std::size_t n = std::min(config.generate.batch_size, requests.size() - begin);
    std::vector<Chain> chains;
    for (std::size_t r = begin; r < begin + n; ++r) {
      const auto& req = requests[r];
      if (!req.sequence) throw std::invalid_argument("generate: request without a sequence");
      Chain c;
      c.win = make_window(*req.sequence, req.target_year, config);
      const std::size_t slot = c.win.target_slot;
      c.win.images.present[slot] = false;  // the target frame never enters the chain
      c.mask = hide_target_slot(c.win.mask, slot);
      if (c.mask.count(SlotCode::kPresent) == 0) {
        throw std::invalid_argument("generate: no known visit in the window ending " +
                                    std::to_string(req.target_year) + " for " +
                                    req.sequence->record->eye_id);
      }
      c.z0 = encode(c.win.images, codec);
      c.cond = make_conditioning(c.z0, c.mask, config.train.normalize_missing,
                                 config.train.hidden_weight);
      c.labels = slot_labels(c.win, c.mask, conditioning);
      if (req.label == kNoLabel) {
        c.labels.no_label[slot] = true;
      } else {
        if (req.label != 0 && req.label != 1) throw std::invalid_argument("generate: label must be 0 or 1");
        c.labels.labels[slot] = req.label;
        c.labels.no_label[slot] = !conditioning;
      }
      c.rng.seed(req.seed);
      c.z = Tensor<float>(c.z0.shape());
      fill_normal(c.z, c.rng);
      chains.push_back(std::move(c));
    }
    std::vector<LabelMask> labels;
    for (const auto& c : chains) labels.push_back(c.labels);
    for (std::size_t t = sched.steps; t >= 1; --t) {
      Tensor<float> z_hat(Shape{n * F, 3 * Cl, h, h});
      for (std::size_t r = 0; r < n; ++r) {
        Chain& c = chains[r];
        if (config.generate.replacement) {
          Tensor<float> noise(c.z0.shape());
          fill_normal(noise, c.rng);
          const Tensor<float> known = q_sample(c.z0, t, noise, sched);
          for (std::size_t f = 0; f < F; ++f) {
            if (c.mask.codes[f] == SlotCode::kHidden) continue;
            std::copy_n(known.data().begin() + f * per_frame, per_frame,
                        c.z.data().begin() + f * per_frame);
          }
        }
        const Tensor<float> zh = assemble_input(c.z, c.cond.mask_hat, c.cond.z_masked);
        std::copy(zh.data().begin(), zh.data().end(), z_hat.data().begin() + r * zh.size());
      }
      const Tensor<float> eps_hat = predict(z_hat, std::vector<std::size_t>(n, t), labels);
      if (eps_hat.shape() != Shape{n * F, Cl, h, h}) {
        throw ShapeError("generate: noise predictor returned " + shape_str(eps_hat.shape()));
      }
      for (std::size_t r = 0; r < n; ++r) {
        Chain& c = chains[r];
        Tensor<float> eps(c.z.shape());
        std::copy_n(eps_hat.data().begin() + r * eps.size(), eps.size(), eps.data().begin());
        Tensor<float> noise(c.z.shape());
        if (t > 1) fill_normal(noise, c.rng);
        c.z = reverse_step(c.z, eps, t, noise, sched);
      }
    }
    for (const auto& c : chains) {
      Tensor<float> latent(Shape{1, Cl, h, h});
      std::copy_n(c.z.data().begin() + c.win.target_slot * per_frame, per_frame, latent.data().begin());
      Tensor<float> img = decode(latent, codec);
      for (auto& v : img.data()) v = std::clamp(v, 0.0f, 1.0f);
      out.push_back(img.reshaped(Shape{img.dim(1), img.dim(2), img.dim(3)}));
    }
  }
  return out;
}

FrameSource model_source(const ParamStore<float>& params, const RunConfig& config) {
  return [&params, config](const std::vector<GenerationRequest>& requests) {
    return generate_frames(params, config, requests);
  };
}

Tensor<float> stack_frames(const std::vector<LoadedSequence>& sequences, std::vector<int>* labels) {
  std::size_t n = 0;
  Shape s;
  for (const auto& q : sequences) {
    n += q.years.size();
    s = q.frames.shape();
  }
  if (n == 0) return Tensor<float>();
  s[0] = n;
  Tensor<float> out(s);
  std::size_t offset = 0;
  for (const auto& q : sequences) {
    std::copy(q.frames.data().begin(), q.frames.data().end(), out.data().begin() + offset);
    offset += q.frames.size();
    if (labels) labels->insert(labels->end(), q.labels.begin(), q.labels.end());
  }
  return out;
}

namespace {

Tensor<float> frame_of(const LoadedSequence& seq, std::size_t i) {
  const Shape& s = seq.frames.shape();
  const std::size_t per = s[1] * s[2] * s[3];
  Tensor<float> out(Shape{s[1], s[2], s[3]});
  std::copy_n(seq.frames.data().begin() + i * per, per, out.data().begin());
  return out;
}

Tensor<float> stack(const std::vector<Tensor<float>>& frames) {
  if (frames.empty()) return Tensor<float>();
  Shape s{frames.size()};
  s.insert(s.end(), frames[0].shape().begin(), frames[0].shape().end());
  Tensor<float> out(s);
  for (std::size_t i = 0; i < frames.size(); ++i)
    std::copy(frames[i].data().begin(), frames[i].data().end(),
              out.data().begin() + i * frames[i].size());
  return out;
}

double vcdr_or_nan(const Tensor<float>& image) {
  try {
    return vcdr(image).vcdr;
  } catch (const UngradableFrame&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

double mean_finite(const std::vector<double>& v) {
  double s = 0.0;
  std::size_t n = 0;
  for (double x : v)
    if (std::isfinite(x)) {
      s += x;
      ++n;
    }
  return n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

std::uint64_t sequence_seed(std::uint64_t base, const std::string& eye_id, std::uint64_t k) {
  return base ^ fnv1a64(eye_id) ^ (k * 0x9E3779B97F4A7C15ull);
}

}  // namespace

EvalSummary summarize(const std::vector<EvalRow>& rows) {
  EvalSummary s;
  s.rows = rows.size();
  if (rows.empty()) return s;
  auto mean = [&](auto field) {
    std::vector<double> v;
    for (const auto& r : rows) v.push_back(field(r));
    return mean_finite(v);
  };
  s.psnr_generated = mean([](const EvalRow& r) { return r.psnr_generated; });
  s.ssim_generated = mean([](const EvalRow& r) { return r.ssim_generated; });
  s.psnr_copy_last = mean([](const EvalRow& r) { return r.psnr_copy_last; });
  s.ssim_copy_last = mean([](const EvalRow& r) { return r.ssim_copy_last; });
  s.psnr_noise = mean([](const EvalRow& r) { return r.psnr_noise; });
  s.ssim_noise = mean([](const EvalRow& r) { return r.ssim_noise; });
  s.vcdr_generated = mean([](const EvalRow& r) { return r.vcdr_generated; });
  s.vcdr_true = mean([](const EvalRow& r) { return r.vcdr_true; });
  s.ams = mean([](const EvalRow& r) {
    return r.predicted_label < 0 ? std::numeric_limits<double>::quiet_NaN()
                                 : static_cast<double>(r.predicted_label == r.true_label);
  });
  return s;
}

EvalReport evaluate_run(const std::vector<LoadedSequence>& test, const FrameSource& source,
                        const ParamStore<float>* classifier, const RunConfig& config) {
  const CodecConfig codec = config.codec();
  std::vector<GenerationRequest> requests;
  std::vector<const LoadedSequence*> used;
  for (const auto& seq : test) {
    if (seq.years.size() < 2) continue;
    requests.push_back({&seq, seq.years.back(), seq.labels.back(),
                        sequence_seed(config.eval.seed, seq.record->eye_id, 0)});
    used.push_back(&seq);
  }
  if (requests.empty()) throw std::invalid_argument("evaluate: no test sequence with two visits");
  const std::vector<Tensor<float>> generated = source(requests);
  if (generated.size() != requests.size()) throw std::runtime_error("evaluate: source returned wrong count");
  std::vector<int> predicted(requests.size(), -1);
  if (classifier) predicted = classify(*classifier, stack(generated));

  EvalReport report;
  for (std::size_t i = 0; i < used.size(); ++i) {
    const LoadedSequence& seq = *used[i];
    const std::size_t last = seq.years.size() - 1;
    const Tensor<float> truth = frame_of(seq, last), copy = frame_of(seq, last - 1);
    std::mt19937_64 rng(sequence_seed(config.eval.seed, seq.record->eye_id, 1));
    Tensor<float> latent(Shape{1, codec.latent_channels(), codec.latent_height(), codec.latent_width()});
    fill_normal(latent, rng);
    Tensor<float> noise = decode(latent, codec);
    for (auto& v : noise.data()) v = std::clamp(v, 0.0f, 1.0f);
    noise = noise.reshaped(truth.shape());

    EvalRow row;
    row.eye_id = seq.record->eye_id;
    row.time_variant = seq.record->phenotype.time_variant;
    row.target_year = seq.years[last];
    row.true_label = seq.labels[last];
    row.psnr_generated = psnr(generated[i], truth);
    row.ssim_generated = ssim(generated[i], truth);
    row.psnr_copy_last = psnr(copy, truth);
    row.ssim_copy_last = ssim(copy, truth);
    row.psnr_noise = psnr(noise, truth);
    row.ssim_noise = ssim(noise, truth);
    row.vcdr_true = seq.vcdr[last];
    row.vcdr_generated = vcdr_or_nan(generated[i]);
    row.vcdr_copy_last = vcdr_or_nan(copy);
    row.predicted_label = predicted[i];
    report.rows.push_back(row);
  }
  report.all = summarize(report.rows);
  std::vector<EvalRow> tv;
  for (const auto& r : report.rows)
    if (r.time_variant) tv.push_back(r);
  report.time_variant = summarize(tv);
  return report;
}

std::string EvalReport::to_csv() const {
  std::string s =
      "eye_id,time_variant,target_year,true_label,psnr_generated,ssim_generated,"
      "psnr_copy_last,ssim_copy_last,psnr_noise,ssim_noise,vcdr_true,vcdr_generated,"
      "vcdr_copy_last,predicted_label\n";
  for (const auto& r : rows) {
    s += r.eye_id + "," + std::to_string(r.time_variant ? 1 : 0) + "," +
         std::to_string(r.target_year) + "," + std::to_string(r.true_label) + "," +
         fmt(r.psnr_generated) + "," + fmt(r.ssim_generated) + "," + fmt(r.psnr_copy_last) + "," +
         fmt(r.ssim_copy_last) + "," + fmt(r.psnr_noise) + "," + fmt(r.ssim_noise) + "," +
         fmt(r.vcdr_true) + "," + fmt(r.vcdr_generated) + "," + fmt(r.vcdr_copy_last) + "," +
         std::to_string(r.predicted_label) + "\n";
  }
  return s;
}

namespace {

nlohmann::json summary_to_json(const EvalSummary& s) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  return {{"rows", s.rows},
          {"psnr_generated", num(s.psnr_generated)},
          {"ssim_generated", num(s.ssim_generated)},
          {"psnr_copy_last", num(s.psnr_copy_last)},
          {"ssim_copy_last", num(s.ssim_copy_last)},
          {"psnr_noise", num(s.psnr_noise)},
          {"ssim_noise", num(s.ssim_noise)},
          {"ams", num(s.ams)},
          {"vcdr_generated", num(s.vcdr_generated)},
          {"vcdr_true", num(s.vcdr_true)}};
}

}  // namespace

std::string EvalReport::summary_json() const {
  nlohmann::json j = {{"all", summary_to_json(all)}, {"time_variant", summary_to_json(time_variant)}};
  return j.dump(2) + "\n";
}

void check_ablation_pair(const RunConfig& with_label, const RunConfig& without_label) {
  RunConfig a = with_label, b = without_label;
  a.train.label_conditioning = b.train.label_conditioning = true;
  if (a.training_json() != b.training_json() || a.train.steps != b.train.steps) {
    throw std::invalid_argument("ablate-label: checkpoints differ beyond label conditioning");
  }
}

AblationTable ablate_label(const std::vector<std::pair<std::string, FrameSource>>& models,
                           const std::vector<LoadedSequence>& test,
                           const ParamStore<float>& classifier, const RunConfig& config) {
  std::vector<GenerationRequest> groups[2];
  for (int label = 0; label <= 1; ++label) {
    std::vector<const LoadedSequence*> members;
    for (const auto& seq : test)
      if (seq.years.size() >= 2 && seq.labels.back() == label) members.push_back(&seq);
    if (members.empty()) {
      throw std::invalid_argument(std::string("ablate-label: no test sequence ends ") +
                                  (label ? "glaucomatous" : "normal"));
    }
    const std::size_t seeds =
        (config.eval.ablation_min_seeds + members.size() - 1) / members.size();
    for (const auto* seq : members)
      for (std::size_t s = 0; s < std::max<std::size_t>(seeds, 1); ++s)
        groups[label].push_back({seq, seq->years.back(), label,
                                 sequence_seed(config.eval.seed, seq->record->eye_id, 100 + s)});
  }
  AblationTable table;
  for (const auto& [name, source] : models) {
    AblationRow row;
    row.model = name;
    for (int label = 0; label <= 1; ++label) {
      const auto frames = source(groups[label]);
      const auto predicted = classify(classifier, stack(frames));
      std::vector<double> ratios;
      for (const auto& f : frames) ratios.push_back(vcdr_or_nan(f));
      const double a = ams(predicted, std::vector<int>(frames.size(), label));
      const double v = mean_finite(ratios);
      (label ? row.glaucoma_ams : row.normal_ams) = a;
      (label ? row.glaucoma_vcdr : row.normal_vcdr) = v;
      (label ? row.glaucoma_samples : row.normal_samples) = frames.size();
    }
    table.rows.push_back(row);
  }
  return table;
}

std::string AblationTable::to_csv() const {
  std::string s = "model,glaucoma_ams,glaucoma_vcdr,glaucoma_samples,normal_ams,normal_vcdr,normal_samples\n";
  for (const auto& r : rows) {
    s += r.model + "," + fmt(r.glaucoma_ams) + "," + fmt(r.glaucoma_vcdr) + "," +
         std::to_string(r.glaucoma_samples) + "," + fmt(r.normal_ams) + "," + fmt(r.normal_vcdr) +
         "," + std::to_string(r.normal_samples) + "\n";
  }
  return s;
}

AugmentReport augment_experiment(const FrameSource& source, const RunConfig& config,
                                 const std::vector<LoadedSequence>& train,
                                 const std::vector<LoadedSequence>& test) {
  AugmentReport rep;
  std::vector<Tensor<float>> base;
  std::vector<int> base_labels;
  // converting eyes, extrapolated past their last visit, supply the new
  // glaucoma frames
  std::vector<const LoadedSequence*> converting;
  for (const auto& seq : train) {
    bool any_glaucoma = false;
    for (std::size_t i = 0; i < seq.years.size(); ++i) {
      any_glaucoma = any_glaucoma || seq.labels[i] == 1;
      if (seq.labels[i] == 1 && rep.base_glaucoma >= config.augment.keep_glaucoma) continue;
      base.push_back(frame_of(seq, i));
      base_labels.push_back(seq.labels[i]);
      (seq.labels[i] ? rep.base_glaucoma : rep.base_normal) += 1;
    }
    if (any_glaucoma) converting.push_back(&seq);
  }
  std::vector<GenerationRequest> requests;
  if (config.augment.count > 0 && converting.empty()) {
    throw std::invalid_argument("augment: no converting training sequence to extrapolate");
  }
  for (std::size_t i = 0; i < config.augment.count; ++i) {
    const LoadedSequence* seq = converting[i % converting.size()];
    requests.push_back({seq, seq->years.back() + config.augment.years_ahead, 1,
                        sequence_seed(config.eval.seed, seq->record->eye_id, 500 + i)});
  }
  const auto generated = requests.empty() ? std::vector<Tensor<float>>{} : source(requests);
  rep.generated = generated.size();
  rep.generated_labels.assign(generated.size(), 1);

  std::vector<int> test_labels;
  const Tensor<float> test_x = stack_frames(test, &test_labels);
  ClassifierConfig cc = config.classifier;
  cc.balanced_sampling = false;
  cc.accuracy_floor = 0.0;
  const auto without = train_classifier(stack(base), base_labels, test_x, test_labels, cc);
  rep.accuracy_without = balanced_accuracy(classify(without, test_x), test_labels);
  std::vector<Tensor<float>> augmented = base;
  augmented.insert(augmented.end(), generated.begin(), generated.end());
  std::vector<int> augmented_labels = base_labels;
  augmented_labels.insert(augmented_labels.end(), rep.generated_labels.begin(),
                          rep.generated_labels.end());
  const auto with = train_classifier(stack(augmented), augmented_labels, test_x, test_labels, cc);
  rep.accuracy_with = balanced_accuracy(classify(with, test_x), test_labels);
  return rep;
}

}  // namespace seqdiff
