// Copyright 2026 The GDR Lab Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "gdr/errors.hpp"
#include "gdr/store.hpp"
#include "gdr/synth.hpp"

namespace gdr {

struct ScenePreset {
  std::string name;
  AttributeVocabulary vocab;
  SceneOptions options;
  int min_objects = 1;
  int max_objects = 4;
  int num_slots = 5;
  bool single_object = false;
  int frames = 12;
};

/// fig1: 2 colors x 3 shapes; desk: 6 x 6; transfer: desk vocabulary with
/// unseen background textures and a shifted object-count distribution;
/// single: one desk object per scene.
inline ScenePreset scene_preset(const std::string& name, int resolution = 64) {
  ScenePreset p;
  p.name = name;
  p.options.resolution = resolution;
  if (name == "fig1") {
    p.vocab = AttributeVocabulary::fig1();
    p.min_objects = 2;
    p.max_objects = 4;
  } else if (name == "desk") {
    p.vocab = AttributeVocabulary::desk();
  } else if (name == "transfer") {
    p.vocab = AttributeVocabulary::desk();
    p.options.backgrounds = {BackgroundStyle::kChecker, BackgroundStyle::kDots};
    p.min_objects = 3;
    p.max_objects = 4;
  } else if (name == "single") {
    p.vocab = AttributeVocabulary::desk();
    p.min_objects = 1;
    p.max_objects = 1;
    p.num_slots = 2;
    p.single_object = true;
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return p;
}

/// Independent per-record seed (SplitMix64 of base seed and index).
inline std::uint64_t record_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline Dataset generate_dataset(const ScenePreset& preset, std::size_t count, bool video, std::uint64_t seed) {
  Dataset d;
  d.info.preset = preset.name;
  d.info.video = video;
  d.info.single_object = preset.single_object;
  d.info.has_boxes = true;
  d.info.num_slots = preset.num_slots;
  d.info.resolution = preset.options.resolution;
  d.info.num_attributes = static_cast<int>(preset.vocab.num_attributes());
  d.records.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::mt19937_64 rng(record_seed(seed, i));
    std::uniform_int_distribution<int> objects(preset.min_objects, preset.max_objects);
    const int n = objects(rng);
    d.records.push_back(video ? generate_video(preset.vocab, n, preset.frames, preset.options, rng)
                              : generate_scene(preset.vocab, n, preset.options, rng));
  }
  return d;
}

}  // namespace gdr
