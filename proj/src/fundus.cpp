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

#include "seqdiff/fundus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>
#include "seqdiff/image_io.hpp"

namespace seqdiff {

using nlohmann::json;

double EyePhenotype::ratio_at(int year) const {
  if (time_variant) return std::min(r0 + rate * (year - year0), kMaxRatio);
  // Per-visit jitter, reproducible from (eye, year).
  std::mt19937_64 rng(jitter_seed ^ (static_cast<std::uint64_t>(year) * 0x9E3779B97F4A7C15ull));
  std::uniform_real_distribution<double> u(-kInvariantJitter, kInvariantJitter);
  return r0 + u(rng);
}

FrameGeometry EyePhenotype::geometry_at(int year) const {
  const double r = ratio_at(year);
  return FrameGeometry{cx, cy, disc_rx, disc_ry, r * cup_rx_scale * disc_rx, r * disc_ry};
}

void EyePhenotype::validate(std::size_t size) const {
  const double s = static_cast<double>(size), margin = 4.0;
  if (disc_rx <= 0 || disc_ry <= 0) throw std::invalid_argument("phenotype: empty disc");
  if (cx - disc_rx < margin || cx + disc_rx > s - margin || cy - disc_ry < margin ||
      cy + disc_ry > s - margin) {
    throw std::invalid_argument("phenotype: disc leaves the canvas margin");
  }
  if (!(cup_rx_scale > 0 && cup_rx_scale <= 1) || !(r0 >= 0 && r0 < 1)) {
    throw std::invalid_argument("phenotype: cup not strictly inside the disc");
  }
}

namespace {

struct VesselTable {
  // Centre line and slope sampled on the supersampling grid.
  std::vector<double> pos, norm;
  bool vertical;
  double half_width;
};

}  // namespace

Tensor<float> render_geometry(const EyePhenotype& eye, const FrameGeometry& g,
                              std::size_t size, std::size_t channels) {
  constexpr std::size_t kSub = 16;
  const std::size_t n = size * kSub;
  std::vector<VesselTable> tables;
  for (const auto& v : eye.vessels) {
    VesselTable t{std::vector<double>(n), std::vector<double>(n), v.vertical, v.half_width};
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (i + 0.5) / kSub;
      const double arg = v.frequency * u + v.phase;
      t.pos[i] = v.offset + v.amplitude * std::sin(arg);
      const double slope = v.amplitude * v.frequency * std::cos(arg);
      t.norm[i] = std::sqrt(1.0 + slope * slope);
    }
    tables.push_back(std::move(t));
  }
  const double mrx = g.disc_rx + kVesselMargin, mry = g.disc_ry + kVesselMargin;
  auto inside = [](double dx, double dy, double rx, double ry) {
    return rx > 0 && ry > 0 && (dx / rx) * (dx / rx) + (dy / ry) * (dy / ry) <= 1.0;
  };

  Tensor<float> image(Shape{channels, size, size});
  for (std::size_t py = 0; py < size; ++py) {
    for (std::size_t px = 0; px < size; ++px) {
      double acc = 0.0;
      for (std::size_t sy = 0; sy < kSub; ++sy) {
        const std::size_t iy = py * kSub + sy;
        const double y = (iy + 0.5) / kSub, dy = y - g.cy;
        for (std::size_t sx = 0; sx < kSub; ++sx) {
          const std::size_t ix = px * kSub + sx;
          const double x = (ix + 0.5) / kSub, dx = x - g.cx;
          if (inside(dx, dy, g.cup_rx, g.cup_ry)) {
            acc += eye.cup_level;
          } else if (inside(dx, dy, g.disc_rx, g.disc_ry)) {
            acc += eye.disc_level;
          } else {
            bool vessel = false;
            if (!inside(dx, dy, mrx, mry)) {
              for (const auto& t : tables) {
                const std::size_t i = t.vertical ? iy : ix;
                const double d = std::abs((t.vertical ? x : y) - t.pos[i]) / t.norm[i];
                if (d < t.half_width) {
                  vessel = true;
                  break;
                }
              }
            }
            acc += vessel ? eye.vessel_level
                          : eye.background + eye.gradient_x * (x / size - 0.5) +
                                eye.gradient_y * (y / size - 0.5);
          }
        }
      }
      const float v = static_cast<float>(acc / (kSub * kSub));
      for (std::size_t c = 0; c < channels; ++c) image[(c * size + py) * size + px] = v;
    }
  }
  return image;
}

RenderedFrame render_frame(const EyePhenotype& eye, int year, std::size_t size,
                           std::size_t channels) {
  const FrameGeometry g = eye.geometry_at(year);
  return {render_geometry(eye, g, size, channels), g.cup_ry / g.disc_ry};
}

void FundusConfig::validate() const {
  if (image_size < 16) throw std::invalid_argument("fundus: image size must be >= 16");
  if (channels != 1 && channels != 3) throw std::invalid_argument("fundus: channels must be 1 or 3");
  if (!(tau > 0.55 && tau < kMaxRatio)) {
    throw std::invalid_argument("fundus: tau must lie in (0.55, 0.9)");
  }
  if (min_visits < 6 || max_visits < min_visits) {
    throw std::invalid_argument("fundus: need 6 <= min_visits <= max_visits");
  }
  if (min_gap < 1 || max_gap < min_gap) {
    throw std::invalid_argument("fundus: need 1 <= min_gap <= max_gap");
  }
  if (!(time_variant_fraction >= 0 && time_variant_fraction <= 1)) {
    throw std::invalid_argument("fundus: time-variant fraction outside [0,1]");
  }
  if (train_eyes + val_eyes + test_eyes == 0) throw std::invalid_argument("fundus: no eyes");
}

std::size_t time_variant_count(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(n) * fraction));
}

namespace {

EyePhenotype sample_phenotype(std::mt19937_64& rng, const FundusConfig& c, bool variant,
                              int first_year, int last_year) {
  auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  const double s = c.image_size / 32.0;
  EyePhenotype e;
  const int half = static_cast<int>(c.image_size / 2);
  e.cx = half - std::uniform_int_distribution<int>(0, 1)(rng) + 0.5;
  e.cy = half - std::uniform_int_distribution<int>(0, 1)(rng) + 0.5;
  // disc_ry * (1 - kMaxRatio) >= 1 px keeps the top rim at least a pixel thick.
  e.disc_ry = u(10.3, 11.0) * s;
  e.disc_rx = u(8.5, 9.8) * s;
  e.cup_rx_scale = 0.8;
  e.time_variant = variant;
  e.year0 = first_year;
  e.jitter_seed = rng();
  e.background = u(0.22, 0.28);
  e.gradient_x = u(-0.06, 0.06);
  e.gradient_y = u(-0.06, 0.06);
  e.disc_level = u(0.58, 0.72);
  e.cup_level = u(0.88, 0.98);
  e.vessel_level = u(0.05, 0.1);
  const double size = static_cast<double>(c.image_size);
  for (int k = 0; k < 4; ++k) {
    Vessel v;
    v.vertical = k >= 2;
    v.offset = (k % 2 == 0) ? u(1.5, 4.0) * s : size - u(1.5, 4.0) * s;
    v.amplitude = u(0.5, 2.0) * s;
    v.frequency = u(0.15, 0.4) / s;
    v.phase = u(0.0, 2.0 * std::numbers::pi);
    v.half_width = u(0.4, 0.7) * s;
    e.vessels.push_back(v);
  }
  if (variant) {
    // Crosses tau between 55% and 85% of the visit span; first visit normal,
    // last visit glaucomatous.
    e.r0 = u(0.42, 0.55);
    const double cross = u(0.55, 0.85);
    e.rate = (c.tau - e.r0) / (cross * (last_year - first_year));
  } else {
    e.r0 = u(0.3, 0.55);
  }
  e.validate(c.image_size);
  return e;
}

std::string image_name(const std::string& eye_id, int year, std::size_t channels) {
  return "images/" + eye_id + "_" + std::to_string(year) + (channels == 1 ? ".pgm" : ".ppm");
}

json vessel_json(const Vessel& v) {
  return {{"vertical", v.vertical}, {"offset", v.offset},   {"amplitude", v.amplitude},
          {"frequency", v.frequency}, {"phase", v.phase}, {"half_width", v.half_width}};
}

json phenotype_json(const EyePhenotype& e) {
  json vessels = json::array();
  for (const auto& v : e.vessels) vessels.push_back(vessel_json(v));
  return {{"cx", e.cx},
          {"cy", e.cy},
          {"disc_rx", e.disc_rx},
          {"disc_ry", e.disc_ry},
          {"cup_rx_scale", e.cup_rx_scale},
          {"r0", e.r0},
          {"time_variant", e.time_variant},
          {"rate", e.rate},
          {"year0", e.year0},
          {"jitter_seed", e.jitter_seed},
          {"background", e.background},
          {"gradient_x", e.gradient_x},
          {"gradient_y", e.gradient_y},
          {"disc_level", e.disc_level},
          {"cup_level", e.cup_level},
          {"vessel_level", e.vessel_level},
          {"vessels", vessels}};
}

EyePhenotype phenotype_from_json(const json& j) {
  EyePhenotype e;
  e.cx = j.at("cx");
  e.cy = j.at("cy");
  e.disc_rx = j.at("disc_rx");
  e.disc_ry = j.at("disc_ry");
  e.cup_rx_scale = j.at("cup_rx_scale");
  e.r0 = j.at("r0");
  e.time_variant = j.at("time_variant");
  e.rate = j.at("rate");
  e.year0 = j.at("year0");
  e.jitter_seed = j.at("jitter_seed");
  e.background = j.at("background");
  e.gradient_x = j.at("gradient_x");
  e.gradient_y = j.at("gradient_y");
  e.disc_level = j.at("disc_level");
  e.cup_level = j.at("cup_level");
  e.vessel_level = j.at("vessel_level");
  for (const auto& v : j.at("vessels")) {
    e.vessels.push_back(Vessel{v.at("vertical"), v.at("offset"), v.at("amplitude"),
                               v.at("frequency"), v.at("phase"), v.at("half_width")});
  }
  return e;
}

}  // namespace

DatasetManifest make_manifest(const FundusConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  DatasetManifest m;
  m.image_size = config.image_size;
  m.channels = config.channels;
  m.tau = config.tau;
  m.seed = config.seed;
  const std::pair<const char*, std::size_t> splits[] = {
      {"train", config.train_eyes}, {"val", config.val_eyes}, {"test", config.test_eyes}};
  for (const auto& [name, count] : splits) {
    std::vector<bool> variant(count, false);
    std::fill_n(variant.begin(), time_variant_count(count, config.time_variant_fraction), true);
    std::shuffle(variant.begin(), variant.end(), rng);
    for (std::size_t i = 0; i < count; ++i) {
      SequenceRecord seq;
      char id[32];
      std::snprintf(id, sizeof id, "%s-%03zu", name, i);
      seq.eye_id = id;
      seq.split = name;
      const auto visits = std::uniform_int_distribution<std::size_t>(config.min_visits,
                                                                     config.max_visits)(rng);
      std::vector<int> years{config.first_year + std::uniform_int_distribution<int>(0, 5)(rng)};
      while (years.size() < visits) {
        years.push_back(years.back() +
                        std::uniform_int_distribution<int>(config.min_gap, config.max_gap)(rng));
      }
      seq.phenotype = sample_phenotype(rng, config, variant[i], years.front(), years.back());
      for (int year : years) {
        const double r = seq.phenotype.geometry_at(year).cup_ry / seq.phenotype.disc_ry;
        seq.frames.push_back(
            FrameRecord{year, image_name(seq.eye_id, year, config.channels), r > config.tau, r});
      }
      m.sequences.push_back(std::move(seq));
    }
  }
  return m;
}

DatasetManifest gen_dataset(const FundusConfig& config, const std::string& directory) {
  DatasetManifest m = make_manifest(config);
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(directory) / "images");
  for (const auto& seq : m.sequences) {
    for (const auto& f : seq.frames) {
      const auto frame = render_frame(seq.phenotype, f.year, m.image_size, m.channels);
      write_pnm((fs::path(directory) / f.file).string(), frame.image);
    }
  }
  m.save((fs::path(directory) / "manifest.json").string());
  return m;
}

std::vector<const SequenceRecord*> DatasetManifest::split(const std::string& name) const {
  std::vector<const SequenceRecord*> out;
  for (const auto& s : sequences)
    if (s.split == name) out.push_back(&s);
  return out;
}

std::string DatasetManifest::to_json() const {
  json seqs = json::array();
  for (const auto& s : sequences) {
    json frames = json::array();
    for (const auto& f : s.frames) {
      frames.push_back({{"year", f.year}, {"file", f.file}, {"label", f.label}, {"vcdr", f.vcdr}});
    }
    seqs.push_back({{"eye_id", s.eye_id},
                    {"split", s.split},
                    {"phenotype", phenotype_json(s.phenotype)},
                    {"frames", frames}});
  }
  json j = {{"image_size", image_size}, {"channels", channels},
            {"tau", tau},               {"renderer_version", renderer_version},
            {"seed", seed},             {"sequences", seqs}};
  return j.dump(2) + "\n";
}

DatasetManifest DatasetManifest::from_json(const std::string& text) {
  const json j = json::parse(text);
  DatasetManifest m;
  m.image_size = j.at("image_size");
  m.channels = j.at("channels");
  m.tau = j.at("tau");
  m.renderer_version = j.at("renderer_version");
  m.seed = j.at("seed");
  for (const auto& s : j.at("sequences")) {
    SequenceRecord seq;
    seq.eye_id = s.at("eye_id");
    seq.split = s.at("split");
    seq.phenotype = phenotype_from_json(s.at("phenotype"));
    int prev = 0;
    for (const auto& f : s.at("frames")) {
      FrameRecord r{f.at("year"), f.at("file"), f.at("label"), f.at("vcdr")};
      if (!seq.frames.empty() && r.year <= prev) {
        throw std::invalid_argument("manifest: years of " + seq.eye_id +
                                    " are not strictly increasing");
      }
      prev = r.year;
      seq.frames.push_back(std::move(r));
    }
    m.sequences.push_back(std::move(seq));
  }
  return m;
}

void DatasetManifest::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("manifest: cannot write " + path);
  out << to_json();
}

DatasetManifest DatasetManifest::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("manifest: cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::vector<LoadedSequence> load_split(const DatasetManifest& manifest,
                                       const std::string& directory,
                                       const std::string& split) {
  namespace fs = std::filesystem;
  std::vector<LoadedSequence> out;
  const std::size_t C = manifest.channels, S = manifest.image_size;
  for (const SequenceRecord* rec : manifest.split(split)) {
    LoadedSequence seq;
    seq.record = rec;
    seq.frames = Tensor<float>(Shape{rec->frames.size(), C, S, S});
    for (std::size_t i = 0; i < rec->frames.size(); ++i) {
      const auto& f = rec->frames[i];
      const Tensor<float> img = read_pnm((fs::path(directory) / f.file).string());
      if (img.shape() != Shape{C, S, S}) {
        throw ShapeError("load_split: " + f.file + " has shape " + shape_str(img.shape()));
      }
      std::copy(img.data().begin(), img.data().end(), seq.frames.data().begin() + i * img.size());
      seq.years.push_back(f.year);
      seq.labels.push_back(f.label);
      seq.vcdr.push_back(f.vcdr);
    }
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace seqdiff
