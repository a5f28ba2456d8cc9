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

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "gdr/presets.hpp"
#include "gdr/store.hpp"
#include "gdr/synth.hpp"

namespace {

namespace fs = std::filesystem;

std::string temp_path(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "gdr_unit";
  fs::create_directories(dir);
  const auto p = dir / name;
  fs::remove(p);
  return p.string();
}

TEST(Synth, BackgroundOnlyScene) {
  std::mt19937_64 rng(1);
  const auto rec = gdr::generate_scene(gdr::AttributeVocabulary::fig1(), 0, gdr::SceneOptions{}, rng);
  EXPECT_EQ(rec.num_objects, 0);
  EXPECT_TRUE(std::all_of(rec.mask.begin(), rec.mask.end(), [](auto v) { return v == 0; }));
}

TEST(Synth, MasksBoxesAndLabelsAreConsistent) {
  const auto vocab = gdr::AttributeVocabulary::desk();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const auto rec = gdr::generate_scene(vocab, 4, gdr::SceneOptions{}, rng);
    ASSERT_EQ(rec.labels.size(), 4u);
    const int res = rec.width;
    for (int k = 0; k < 4; ++k) {
      int n = 0;
      double sx = 0, sy = 0;
      int x0 = res, y0 = res, x1 = -1, y1 = -1;
      for (int y = 0; y < res; ++y) {
        for (int x = 0; x < res; ++x) {
          if (rec.mask[static_cast<std::size_t>(y * res + x)] != k + 1) continue;
          ++n;
          sx += x;
          sy += y;
          x0 = std::min(x0, x);
          y0 = std::min(y0, y);
          x1 = std::max(x1, x);
          y1 = std::max(y1, y);
        }
      }
      ASSERT_GT(n, 0);
      const float* box = rec.boxes.data() + 4 * k;
      EXPECT_FLOAT_EQ(box[0], static_cast<float>(x0) / res);
      EXPECT_FLOAT_EQ(box[1], static_cast<float>(y0) / res);
      EXPECT_FLOAT_EQ(box[2], static_cast<float>(x1 + 1) / res);
      EXPECT_FLOAT_EQ(box[3], static_cast<float>(y1 + 1) / res);
      // colour at a pixel of the object nearest its centroid
      const int cx = static_cast<int>(sx / n), cy = static_cast<int>(sy / n);
      int best = -1;
      double best_d = 1e9;
      for (int y = 0; y < res; ++y)
        for (int x = 0; x < res; ++x) {
          if (rec.mask[static_cast<std::size_t>(y * res + x)] != k + 1) continue;
          const double d = (x - cx) * (x - cx) + (y - cy) * (y - cy);
          if (d < best_d) {
            best_d = d;
            best = y * res + x;
          }
        }
      const auto& rgb = vocab.colors[static_cast<std::size_t>(rec.labels[static_cast<std::size_t>(k)].color)];
      for (int c = 0; c < 3; ++c) {
        EXPECT_LE(std::abs(int(rec.image[3 * static_cast<std::size_t>(best) + c]) - int(rgb[c])), 16);
      }
    }
    for (auto v : rec.mask) EXPECT_LE(v, 4);
  }
}

TEST(Synth, DeterministicUnderSeed) {
  const auto p = gdr::scene_preset("desk");
  EXPECT_EQ(gdr::generate_dataset(p, 5, false, 9).records, gdr::generate_dataset(p, 5, false, 9).records);
  EXPECT_NE(gdr::generate_dataset(p, 5, false, 9).records, gdr::generate_dataset(p, 5, false, 10).records);
}

TEST(Synth, PlacementFailureIsReported) {
  gdr::SceneOptions opt;
  opt.min_scale = opt.max_scale = 0.6;
  opt.max_retries = 20;
  std::mt19937_64 rng(0);
  EXPECT_THROW(gdr::generate_scene(gdr::AttributeVocabulary::desk(), 4, opt, rng), gdr::GenerationError);
}

TEST(Synth, AttributeMarginalsAreUniform) {
  const auto vocab = gdr::AttributeVocabulary::fig1();
  std::vector<int> colors(2, 0), shapes(3, 0);
  int total = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    std::mt19937_64 rng(gdr::record_seed(77, s));
    const auto rec = gdr::generate_scene(vocab, 2, gdr::SceneOptions{}, rng);
    for (const auto& l : rec.labels) {
      ++colors[static_cast<std::size_t>(l.color)];
      ++shapes[static_cast<std::size_t>(l.shape)];
      ++total;
    }
  }
  auto check = [&](const std::vector<int>& counts) {
    const double p = 1.0 / static_cast<double>(counts.size());
    const double sd = std::sqrt(total * p * (1 - p));
    for (int c : counts) EXPECT_NEAR(c, total * p, 3 * sd);
  };
  check(colors);
  check(shapes);
}

TEST(Video, StaticAndMovingClips) {
  gdr::SceneOptions still;
  still.max_speed = 0.0;
  std::mt19937_64 rng(3);
  const auto rec = gdr::generate_video(gdr::AttributeVocabulary::desk(), 3, 12, still, rng);
  const auto frame = rec.frame_pixels();
  for (int t = 1; t < 12; ++t) {
    EXPECT_TRUE(std::equal(rec.mask.begin(), rec.mask.begin() + static_cast<std::ptrdiff_t>(frame),
                           rec.mask.begin() + static_cast<std::ptrdiff_t>(t * frame)));
  }
  std::mt19937_64 rng2(3);
  EXPECT_THROW(gdr::generate_video(gdr::AttributeVocabulary::desk(), 3, 5, still, rng2), gdr::GenerationError);
}

TEST(Preprocess, PixelNormalization) {
  gdr::SceneRecord rec;
  rec.height = rec.width = 1;
  rec.image = {255, 0, 127};
  rec.mask = {0};
  std::mt19937_64 rng(0);
  const auto s = gdr::preprocess(rec, false, 3, rng);
  EXPECT_FLOAT_EQ(s.pixels[0][0][0][0].item<float>(), 1.0f);
  EXPECT_FLOAT_EQ(s.pixels[0][1][0][0].item<float>(), -1.0f);
  EXPECT_NEAR(s.pixels[0][2][0][0].item<float>(), -1.0 / 255.0, 1e-7);
  EXPECT_EQ(s.boxes.sizes(), (std::vector<std::int64_t>{1, 3, 4}));
  EXPECT_EQ(s.boxes.abs().sum().item<float>(), 0.0f);
}

TEST(Preprocess, VideoCropping) {
  const auto data = gdr::generate_dataset(gdr::scene_preset("desk", 32), 1, true, 4);
  const auto& rec = data.records[0];
  std::mt19937_64 rng(1);
  const auto train = gdr::preprocess(rec, true, 5, rng);
  EXPECT_EQ(train.pixels.size(0), 6);
  EXPECT_EQ(train.mask.size(0), 6);
  EXPECT_EQ(train.boxes.size(0), 6);
  const auto eval = gdr::preprocess(rec, false, 5, rng);
  EXPECT_EQ(eval.pixels.size(0), 12);
  // crop consistency: the cropped mask equals the matching frames of the full clip
  bool found = false;
  for (int t0 = 0; t0 <= 6 && !found; ++t0) {
    found = torch::equal(train.mask, eval.mask.narrow(0, t0, 6)) && torch::equal(train.pixels, eval.pixels.narrow(0, t0, 6)) &&
            torch::equal(train.boxes, eval.boxes.narrow(0, t0, 6));
  }
  EXPECT_TRUE(found);
  EXPECT_THROW(gdr::preprocess(rec, true, 5, rng, 13), gdr::ValidationError);
  EXPECT_THROW(gdr::preprocess(rec, true, 0, rng), gdr::ValidationError);
}

TEST(Store, RoundTripIsBitExact) {
  const auto data = gdr::generate_dataset(gdr::scene_preset("fig1"), 7, false, 1);
  const auto path = temp_path("roundtrip.gdrs");
  gdr::pack_dataset(data, path);
  gdr::PackedStore store(path);
  EXPECT_EQ(store.size(), 7u);
  EXPECT_EQ(store.keys().size(), 7u);
  EXPECT_EQ(store.info(), data.info);
  const auto back = store.load_all();
  EXPECT_EQ(back.records, data.records);
  EXPECT_EQ(store.get(store.keys()[3]), data.records[3]);
  EXPECT_THROW(store.get(std::string("missing")), gdr::IndexError);
  // boxes are stored normalized
  for (const auto& r : back.records)
    for (float v : r.boxes) {
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 1.0f);
    }
}

TEST(Store, VideoRoundTrip) {
  const auto data = gdr::generate_dataset(gdr::scene_preset("desk", 32), 2, true, 2);
  const auto path = temp_path("video.gdrs");
  gdr::pack_dataset(data, path);
  EXPECT_EQ(gdr::unpack_dataset(path).records, data.records);
}

TEST(Store, RefusesToOverwrite) {
  const auto data = gdr::generate_dataset(gdr::scene_preset("fig1"), 2, false, 1);
  const auto path = temp_path("exists.gdrs");
  gdr::pack_dataset(data, path);
  EXPECT_THROW(gdr::pack_dataset(data, path), gdr::IoError);
  EXPECT_NO_THROW(gdr::pack_dataset(data, path, true));
  EXPECT_THROW(gdr::PackedStore("/nonexistent/x.gdrs"), gdr::IoError);
}

TEST(Presets, Catalogue) {
  EXPECT_EQ(gdr::scene_preset("fig1").vocab.colors.size(), 2u);
  EXPECT_EQ(gdr::scene_preset("desk").vocab.shapes.size(), 6u);
  EXPECT_TRUE(gdr::scene_preset("single").single_object);
  EXPECT_THROW(gdr::scene_preset("movi"), gdr::ConfigError);
}

}  // namespace
