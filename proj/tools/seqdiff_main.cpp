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

// seqdiff command line: dataset generation, training, sampling and the
// evaluation experiments. Every command validates its config and inputs
// before writing anything.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>
#include "seqdiff/checkpoint.hpp"
#include "seqdiff/config.hpp"
#include "seqdiff/fundus.hpp"
#include "seqdiff/image_io.hpp"
#include "seqdiff/metrics.hpp"
#include "seqdiff/pipeline.hpp"

namespace fs = std::filesystem;
using namespace seqdiff;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  std::string data_dir, run_dir;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON config file");
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("--set", c.overrides, "override a config key, e.g. train.steps=200");
  cmd->add_option("--data-dir", c.data_dir, "dataset directory");
  cmd->add_option("--run-dir", c.run_dir, "run output directory");
}

RunConfig load_config(const Common& c, bool require_seed) {
  RunConfig config = c.config_path.empty() ? RunConfig{} : RunConfig::load(c.config_path);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    }
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed) {
    config.seed = c.seed;
    config.dataset.seed = *c.seed;
  }
  if (!c.data_dir.empty()) config.data_dir = c.data_dir;
  if (!c.run_dir.empty()) config.run_dir = c.run_dir;
  config.validate(require_seed);
  return config;
}

// Model sections come from the checkpoint; paths and the sampling,
// evaluation and experiment sections from the caller.
RunConfig model_config(const RunConfig& user, const Checkpoint& ckpt) {
  RunConfig m = checkpoint_config(ckpt);
  m.data_dir = user.data_dir;
  m.run_dir = user.run_dir;
  m.generate = user.generate;
  m.eval = user.eval;
  m.classifier = user.classifier;
  m.augment = user.augment;
  return m;
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw std::invalid_argument(what + " not found: " + path);
}

std::string or_default(const std::string& value, const fs::path& fallback) {
  return value.empty() ? fallback.string() : value;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

DatasetManifest load_manifest(const RunConfig& config) {
  const fs::path path = fs::path(config.data_dir) / "manifest.json";
  require_file(path.string(), "dataset manifest");
  return DatasetManifest::load(path.string());
}

std::string classifier_json(const RunConfig& c) {
  nlohmann::json j = {{"channels", c.dataset.channels},
                      {"image_size", c.dataset.image_size},
                      {"steps", c.classifier.steps},
                      {"batch", c.classifier.batch},
                      {"learning_rate", c.classifier.learning_rate},
                      {"balanced_sampling", c.classifier.balanced_sampling},
                      {"seed", c.classifier.seed}};
  return j.dump();
}

ParamStore<float> load_classifier(const std::string& path) {
  require_file(path, "classifier checkpoint");
  return checkpoint_params(Checkpoint::load(path));
}

int cmd_make_data(const Common& common) {
  RunConfig config = load_config(common, false);
  config.dataset.validate();
  const auto manifest = gen_dataset(config.dataset, config.data_dir);
  std::cout << "wrote " << manifest.sequences.size() << " sequences to " << config.data_dir << "\n";
  return 0;
}

int cmd_train(const Common& common, const std::string& resume_path) {
  const RunConfig config = load_config(common, true);
  const auto manifest = load_manifest(config);
  std::optional<Checkpoint> resume;
  if (!resume_path.empty()) {
    require_file(resume_path, "resume checkpoint");
    resume = Checkpoint::load(resume_path);
  }
  const auto train = load_split(manifest, config.data_dir, "train");
  const auto out = train_model(config, train, config.run_dir, resume ? &*resume : nullptr);
  if (!out.losses.empty()) {
    std::printf("step %zu loss %.6f\n", out.losses.back().first, out.losses.back().second);
  }
  return 0;
}

int cmd_train_classifier(const Common& common) {
  const RunConfig config = load_config(common, false);
  const auto manifest = load_manifest(config);
  std::vector<int> train_labels, val_labels;
  const auto train_x = stack_frames(load_split(manifest, config.data_dir, "train"), &train_labels);
  const auto val_x = stack_frames(load_split(manifest, config.data_dir, "val"), &val_labels);
  ClassifierReport report;
  const auto params =
      train_classifier(train_x, train_labels, val_x, val_labels, config.classifier, &report);
  const std::string json = classifier_json(config);
  fs::create_directories(config.run_dir);
  make_checkpoint(params, nullptr, config.classifier.steps, fnv1a64(json), json)
      .save((fs::path(config.run_dir) / "classifier.bin").string());
  nlohmann::json rep = {{"train_accuracy", report.train_accuracy},
                        {"heldout_balanced_accuracy", report.heldout_accuracy},
                        {"final_loss", report.final_loss}};
  write_text(fs::path(config.run_dir) / "classifier.json", rep.dump(2) + "\n");
  std::printf("held-out balanced accuracy %.4f\n", report.heldout_accuracy);
  return 0;
}

struct GenerateArgs {
  std::string checkpoint, eye, split = "test", label = "none", out;
  int year = 0;
};

int cmd_generate(const Common& common, const GenerateArgs& args) {
  const RunConfig user = load_config(common, true);
  int label = kNoLabel;
  if (args.label == "glaucoma") {
    label = 1;
  } else if (args.label == "normal") {
    label = 0;
  } else if (args.label != "none") {
    throw std::invalid_argument("--label must be normal, glaucoma or none");
  }
  const std::string ckpt_path = or_default(args.checkpoint, fs::path(user.run_dir) / "model.bin");
  require_file(ckpt_path, "checkpoint");
  const Checkpoint ckpt = Checkpoint::load(ckpt_path);
  const RunConfig config = model_config(user, ckpt);
  const auto manifest = load_manifest(config);
  const auto sequences = load_split(manifest, config.data_dir, args.split);
  const LoadedSequence* seq = nullptr;
  for (const auto& s : sequences)
    if (s.record->eye_id == args.eye) seq = &s;
  if (!seq) throw std::invalid_argument("no eye '" + args.eye + "' in split " + args.split);

  const auto frames = generate_frames(checkpoint_params(ckpt), config,
                                      {{seq, args.year, label, *user.seed}});
  const fs::path out = or_default(
      args.out, fs::path(config.run_dir) / "generated" /
                    (args.eye + "_" + std::to_string(args.year) + ".pgm"));
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_pnm(out.string(), frames[0]);
  nlohmann::json prov = {{"checkpoint", ckpt_path},
                         {"config_hash", ckpt.config_hash},
                         {"checkpoint_step", ckpt.step},
                         {"eye_id", args.eye},
                         {"target_year", args.year},
                         {"label", args.label},
                         {"seed", *user.seed},
                         {"chain_length", config.diffusion_steps},
                         {"replacement", config.generate.replacement}};
  fs::path prov_path = out;
  prov_path.replace_extension(".json");
  write_text(prov_path, prov.dump(2) + "\n");
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

int cmd_evaluate(const Common& common, const std::string& ckpt_arg, const std::string& clf_arg) {
  const RunConfig user = load_config(common, false);
  const std::string ckpt_path = or_default(ckpt_arg, fs::path(user.run_dir) / "model.bin");
  require_file(ckpt_path, "checkpoint");
  std::string clf_path = clf_arg;
  if (clf_path.empty() && fs::exists(fs::path(user.run_dir) / "classifier.bin")) {
    clf_path = (fs::path(user.run_dir) / "classifier.bin").string();
  }
  std::optional<ParamStore<float>> classifier;
  if (!clf_path.empty()) classifier = load_classifier(clf_path);
  const Checkpoint ckpt = Checkpoint::load(ckpt_path);
  const RunConfig config = model_config(user, ckpt);
  const auto manifest = load_manifest(config);
  const auto test = load_split(manifest, config.data_dir, "test");
  const auto params = checkpoint_params(ckpt);
  const auto report =
      evaluate_run(test, model_source(params, config), classifier ? &*classifier : nullptr, config);
  write_text(fs::path(config.run_dir) / "eval.csv", report.to_csv());
  write_text(fs::path(config.run_dir) / "eval_summary.json", report.summary_json());
  std::cout << report.summary_json();
  return 0;
}

int cmd_ablate(const Common& common, const std::string& with_path, const std::string& without_path,
               const std::string& clf_arg) {
  const RunConfig user = load_config(common, false);
  require_file(with_path, "--with checkpoint");
  require_file(without_path, "--without checkpoint");
  const auto classifier =
      load_classifier(or_default(clf_arg, fs::path(user.run_dir) / "classifier.bin"));
  const Checkpoint with_ckpt = Checkpoint::load(with_path);
  const Checkpoint without_ckpt = Checkpoint::load(without_path);
  const RunConfig with_cfg = model_config(user, with_ckpt);
  const RunConfig without_cfg = model_config(user, without_ckpt);
  check_ablation_pair(with_cfg, without_cfg);
  const auto manifest = load_manifest(with_cfg);
  const auto test = load_split(manifest, with_cfg.data_dir, "test");
  const auto with_params = checkpoint_params(with_ckpt);
  const auto without_params = checkpoint_params(without_ckpt);
  const auto table = ablate_label({{"with_label", model_source(with_params, with_cfg)},
                                   {"without_label", model_source(without_params, without_cfg)}},
                                  test, classifier, with_cfg);
  write_text(fs::path(user.run_dir) / "ablation.csv", table.to_csv());
  std::cout << table.to_csv();
  return 0;
}

int cmd_augment(const Common& common, const std::string& ckpt_arg) {
  const RunConfig user = load_config(common, false);
  const std::string ckpt_path = or_default(ckpt_arg, fs::path(user.run_dir) / "model.bin");
  require_file(ckpt_path, "checkpoint");
  const Checkpoint ckpt = Checkpoint::load(ckpt_path);
  const RunConfig config = model_config(user, ckpt);
  const auto manifest = load_manifest(config);
  const auto train = load_split(manifest, config.data_dir, "train");
  const auto test = load_split(manifest, config.data_dir, "test");
  const auto params = checkpoint_params(ckpt);
  const auto rep = augment_experiment(model_source(params, config), config, train, test);
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "base_normal,base_glaucoma,generated,accuracy_without,accuracy_with,delta\n"
                "%zu,%zu,%zu,%.6f,%.6f,%.6f\n",
                rep.base_normal, rep.base_glaucoma, rep.generated, rep.accuracy_without,
                rep.accuracy_with, rep.accuracy_with - rep.accuracy_without);
  write_text(fs::path(config.run_dir) / "augment.csv", buf);
  std::cout << buf;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"seqdiff: diffusion extrapolation of longitudinal image sequences"};
  app.require_subcommand(1);

  Common make_data, train, train_clf, generate, evaluate, ablate, augment;
  auto* c_make = app.add_subcommand("make-data", "render the synthetic fundus dataset");
  add_common(c_make, make_data);

  std::string resume;
  auto* c_train = app.add_subcommand("train", "train the sequence denoiser");
  add_common(c_train, train);
  c_train->add_option("--resume", resume, "checkpoint to continue from");

  auto* c_clf = app.add_subcommand("train-classifier", "train the frame classifier");
  add_common(c_clf, train_clf);

  GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate", "generate one future frame");
  add_common(c_gen, generate);
  c_gen->add_option("--checkpoint", gen.checkpoint, "model checkpoint (default <run-dir>/model.bin)");
  c_gen->add_option("--eye", gen.eye, "eye id, e.g. test-003")->required();
  c_gen->add_option("--year", gen.year, "target year")->required();
  c_gen->add_option("--split", gen.split, "dataset split holding the eye");
  c_gen->add_option("--label", gen.label, "normal | glaucoma | none");
  c_gen->add_option("--out", gen.out, "output PGM path");

  std::string eval_ckpt, eval_clf;
  auto* c_eval = app.add_subcommand("evaluate", "score generated frames on the test split");
  add_common(c_eval, evaluate);
  c_eval->add_option("--checkpoint", eval_ckpt, "model checkpoint");
  c_eval->add_option("--classifier", eval_clf, "classifier checkpoint");

  std::string with_path, without_path, ablate_clf;
  auto* c_abl = app.add_subcommand("ablate-label", "compare models with and without labels");
  add_common(c_abl, ablate);
  c_abl->add_option("--with", with_path, "checkpoint trained with label conditioning")->required();
  c_abl->add_option("--without", without_path, "checkpoint trained without it")->required();
  c_abl->add_option("--classifier", ablate_clf, "classifier checkpoint");

  std::string aug_ckpt;
  auto* c_aug = app.add_subcommand("augment", "classifier accuracy with generated glaucoma frames");
  add_common(c_aug, augment);
  c_aug->add_option("--checkpoint", aug_ckpt, "model checkpoint");

  CLI11_PARSE(app, argc, argv);
  try {
    if (c_make->parsed()) return cmd_make_data(make_data);
    if (c_train->parsed()) return cmd_train(train, resume);
    if (c_clf->parsed()) return cmd_train_classifier(train_clf);
    if (c_gen->parsed()) return cmd_generate(generate, gen);
    if (c_eval->parsed()) return cmd_evaluate(evaluate, eval_ckpt, eval_clf);
    if (c_abl->parsed()) return cmd_ablate(ablate, with_path, without_path, ablate_clf);
    if (c_aug->parsed()) return cmd_augment(augment, aug_ckpt);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
