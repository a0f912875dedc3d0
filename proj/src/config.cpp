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

#include "seqdiff/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace seqdiff {

using nlohmann::json;

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

CodecConfig RunConfig::codec() const {
  return CodecConfig{reduction, dataset.channels, dataset.image_size, dataset.image_size};
}

DenoiserConfig RunConfig::denoiser() const {
  DenoiserConfig d = model;
  const CodecConfig c = codec();
  d.latent_channels = c.latent_channels();
  d.latent_size = c.latent_height();
  d.frames = frames;
  d.diffusion_steps = diffusion_steps;
  return d;
}

SchedulerParams RunConfig::schedule() const {
  return make_schedule(diffusion_steps, beta_start, beta_end);
}

void RunConfig::validate(bool require_seed) const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw std::invalid_argument("config: " + key + ": " + why);
  };
  if (require_seed && !seed) fail("seed", "required for this command");
  dataset.validate();
  try {
    codec().validate();
  } catch (const std::exception& e) {
    fail("reduction", e.what());
  }
  if (frames < 2) fail("frames", "need at least 2 slots");
  if (years_per_slot < 1) fail("years_per_slot", "must be >= 1");
  try {
    schedule();
  } catch (const std::exception& e) {
    fail("scheduler", e.what());
  }
  try {
    denoiser().validate();
  } catch (const std::exception& e) {
    fail("model", e.what());
  }
  if (!(optimizer.learning_rate > 0)) fail("optimizer.learning_rate", "must be positive");
  if (train.batch_size == 0) fail("train.batch_size", "must be >= 1");
  if (!(train.hidden_weight >= 0)) fail("train.hidden_weight", "must be >= 0");
  if (generate.batch_size == 0) fail("generate.batch_size", "must be >= 1");
  if (classifier.batch == 0) fail("classifier.batch", "must be >= 1");
  if (augment.years_ahead < 1) fail("augment.years_ahead", "must be >= 1");
}

namespace {

json model_json(const DenoiserConfig& m) {
  return {{"base_channels", m.base_channels},
          {"depth", m.depth},
          {"heads", m.heads},
          {"label_dim", m.label_dim},
          {"groups", m.groups},
          {"temporal_mode", to_string(m.temporal_mode)},
          {"temporal_placement", to_string(m.temporal_placement)},
          {"temporal_positional", m.temporal_positional}};
}

json dataset_json(const FundusConfig& d) {
  return {{"image_size", d.image_size},
          {"channels", d.channels},
          {"tau", d.tau},
          {"train_eyes", d.train_eyes},
          {"val_eyes", d.val_eyes},
          {"test_eyes", d.test_eyes},
          {"time_variant_fraction", d.time_variant_fraction},
          {"min_visits", d.min_visits},
          {"max_visits", d.max_visits},
          {"min_gap", d.min_gap},
          {"max_gap", d.max_gap},
          {"first_year", d.first_year}};
}

json full_json(const RunConfig& c) {
  return {
      {"data_dir", c.data_dir},
      {"run_dir", c.run_dir},
      {"seed", c.seed ? json(*c.seed) : json(nullptr)},
      {"dataset", dataset_json(c.dataset)},
      {"codec", {{"reduction", c.reduction}}},
      {"frames", c.frames},
      {"years_per_slot", c.years_per_slot},
      {"scheduler",
       {{"steps", c.diffusion_steps}, {"beta_start", c.beta_start}, {"beta_end", c.beta_end}}},
      {"model", model_json(c.model)},
      {"optimizer",
       {{"learning_rate", c.optimizer.learning_rate},
        {"beta1", c.optimizer.beta1},
        {"beta2", c.optimizer.beta2},
        {"epsilon", c.optimizer.epsilon}}},
      {"train",
       {{"steps", c.train.steps},
        {"batch_size", c.train.batch_size},
        {"checkpoint_interval", c.train.checkpoint_interval},
        {"hidden_weight", c.train.hidden_weight},
        {"label_conditioning", c.train.label_conditioning},
        {"normalize_missing", c.train.normalize_missing}}},
      {"generate",
       {{"replacement", c.generate.replacement}, {"batch_size", c.generate.batch_size}}},
      {"classifier",
       {{"steps", c.classifier.steps},
        {"batch", c.classifier.batch},
        {"learning_rate", c.classifier.learning_rate},
        {"balanced_sampling", c.classifier.balanced_sampling},
        {"accuracy_floor", c.classifier.accuracy_floor},
        {"seed", c.classifier.seed}}},
      {"eval", {{"ablation_min_seeds", c.eval.ablation_min_seeds}, {"seed", c.eval.seed}}},
      {"augment",
       {{"count", c.augment.count},
        {"keep_glaucoma", c.augment.keep_glaucoma},
        {"years_ahead", c.augment.years_ahead}}},
  };
}

void check_known_keys(const json& user, const json& reference, const std::string& path) {
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!reference.contains(it.key())) throw std::invalid_argument("config: unknown key " + key);
    const json& ref = reference.at(it.key());
    if (ref.is_object()) {
      if (!it.value().is_object()) throw std::invalid_argument("config: " + key + " must be an object");
      check_known_keys(it.value(), ref, key);
    }
  }
}

RunConfig from_merged(const json& j) {
  RunConfig c;
  try {
    c.data_dir = j.at("data_dir");
    c.run_dir = j.at("run_dir");
    if (!j.at("seed").is_null()) c.seed = j.at("seed").get<std::uint64_t>();
    const json& d = j.at("dataset");
    c.dataset.image_size = d.at("image_size");
    c.dataset.channels = d.at("channels");
    c.dataset.tau = d.at("tau");
    c.dataset.train_eyes = d.at("train_eyes");
    c.dataset.val_eyes = d.at("val_eyes");
    c.dataset.test_eyes = d.at("test_eyes");
    c.dataset.time_variant_fraction = d.at("time_variant_fraction");
    c.dataset.min_visits = d.at("min_visits");
    c.dataset.max_visits = d.at("max_visits");
    c.dataset.min_gap = d.at("min_gap");
    c.dataset.max_gap = d.at("max_gap");
    c.dataset.first_year = d.at("first_year");
    c.dataset.seed = c.seed.value_or(0);
    c.reduction = j.at("codec").at("reduction");
    c.frames = j.at("frames");
    c.years_per_slot = j.at("years_per_slot");
    c.diffusion_steps = j.at("scheduler").at("steps");
    c.beta_start = j.at("scheduler").at("beta_start");
    c.beta_end = j.at("scheduler").at("beta_end");
    const json& m = j.at("model");
    c.model.base_channels = m.at("base_channels");
    c.model.depth = m.at("depth");
    c.model.heads = m.at("heads");
    c.model.label_dim = m.at("label_dim");
    c.model.groups = m.at("groups");
    c.model.temporal_mode = temporal_mode_from_string(m.at("temporal_mode"));
    c.model.temporal_placement = temporal_placement_from_string(m.at("temporal_placement"));
    c.model.temporal_positional = m.at("temporal_positional");
    const json& o = j.at("optimizer");
    c.optimizer.learning_rate = o.at("learning_rate");
    c.optimizer.beta1 = o.at("beta1");
    c.optimizer.beta2 = o.at("beta2");
    c.optimizer.epsilon = o.at("epsilon");
    const json& t = j.at("train");
    c.train.steps = t.at("steps");
    c.train.batch_size = t.at("batch_size");
    c.train.checkpoint_interval = t.at("checkpoint_interval");
    c.train.hidden_weight = t.at("hidden_weight");
    c.train.label_conditioning = t.at("label_conditioning");
    c.train.normalize_missing = t.at("normalize_missing");
    c.generate.replacement = j.at("generate").at("replacement");
    c.generate.batch_size = j.at("generate").at("batch_size");
    const json& k = j.at("classifier");
    c.classifier.steps = k.at("steps");
    c.classifier.batch = k.at("batch");
    c.classifier.learning_rate = k.at("learning_rate");
    c.classifier.balanced_sampling = k.at("balanced_sampling");
    c.classifier.accuracy_floor = k.at("accuracy_floor");
    c.classifier.seed = k.at("seed");
    c.eval.ablation_min_seeds = j.at("eval").at("ablation_min_seeds");
    c.eval.seed = j.at("eval").at("seed");
    c.augment.count = j.at("augment").at("count");
    c.augment.keep_glaucoma = j.at("augment").at("keep_glaucoma");
    c.augment.years_ahead = j.at("augment").at("years_ahead");
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return c;
}

}  // namespace

std::string RunConfig::to_json() const { return full_json(*this).dump(2) + "\n"; }

RunConfig RunConfig::from_json(const std::string& text) {
  json user;
  try {
    user = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: parse error: ") + e.what());
  }
  if (!user.is_object()) throw std::invalid_argument("config: top level must be an object");
  json merged = full_json(RunConfig{});
  check_known_keys(user, merged, "");
  merged.merge_patch(user);
  return from_merged(merged);
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void RunConfig::set(const std::string& key, const std::string& value) {
  json j = full_json(*this);
  json* node = &j;
  std::stringstream ss(key);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (!node->is_object() || !node->contains(part)) {
      throw std::invalid_argument("config: unknown key " + key);
    }
    node = &(*node)[part];
  }
  if (node->is_object()) throw std::invalid_argument("config: " + key + " is a section");
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::exception&) {
    parsed = value;
  }
  *node = parsed;
  *this = from_merged(j);
}

std::string RunConfig::training_json() const {
  const json full = full_json(*this);
  json t = full.at("train");
  t.erase("steps");
  t.erase("checkpoint_interval");
  json j = {{"seed", full.at("seed")},
            {"image_size", dataset.image_size},
            {"channels", dataset.channels},
            {"codec", full.at("codec")},
            {"frames", frames},
            {"years_per_slot", years_per_slot},
            {"scheduler", full.at("scheduler")},
            {"model", full.at("model")},
            {"optimizer", full.at("optimizer")},
            {"train", t}};
  return j.dump();
}

std::uint64_t RunConfig::training_hash() const { return fnv1a64(training_json()); }

}  // namespace seqdiff
