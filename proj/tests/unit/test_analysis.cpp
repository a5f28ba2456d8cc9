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
#include <torch/torch.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "gdr/analysis.hpp"

namespace {

namespace fs = std::filesystem;

gdr::TokenGrid grid(const gdr::GroupLayout& layout, std::int64_t h, std::int64_t w, std::uint64_t seed) {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  std::vector<torch::Tensor> planes;
  for (int i = 0; i < layout.g(); ++i) {
    planes.push_back(torch::randint(layout.size(static_cast<std::size_t>(i)), {2, h, w}, gen, torch::kInt64));
  }
  return gdr::grid_from_tuples(torch::stack(planes, 1), layout);
}

TEST(HsvIndexMap, OneImagePerGroupAndZeroIsRed) {
  const auto layout = gdr::GroupLayout::parse("8,8,8,8");
  auto t = grid(layout, 4, 4, 1);
  t.hard_tuple.select(1, 2).zero_();
  const auto vis = gdr::hsv_index_map(t, layout);
  ASSERT_EQ(vis.images.size(), 4u);
  EXPECT_EQ(vis.images[0].height, 4);
  const auto c = vis.images[2].at(1, 3);
  EXPECT_EQ(c[0], 255);
  EXPECT_EQ(c[1], 0);
  EXPECT_EQ(c[2], 0);
}

TEST(HsvIndexMap, DistinctIndexesGetDistinctColours) {
  const auto layout = gdr::GroupLayout::parse("16,16,16");
  std::set<std::array<std::uint8_t, 3>> seen;
  for (int v = 0; v < 16; ++v) {
    const auto c = gdr::hue_to_rgb(static_cast<double>(v) / 16.0);
    seen.insert({c[0], c[1], c[2]});
  }
  EXPECT_EQ(seen.size(), 16u);
  EXPECT_THROW(gdr::hsv_index_map(grid(gdr::GroupLayout::parse("4,4"), 2, 2, 0), layout), gdr::ShapeError);
}

TEST(HueToRgb, PrimaryHues) {
  const auto g = gdr::hue_to_rgb(1.0 / 3.0);
  const auto b = gdr::hue_to_rgb(2.0 / 3.0);
  EXPECT_EQ(g, (gdr::Rgb{0, 255, 0}));
  EXPECT_EQ(b, (gdr::Rgb{0, 0, 255}));
}

TEST(Swap, OnlyRegionAndGroupChange) {
  const auto layout = gdr::GroupLayout::parse("8,8,8,8");
  const auto t = grid(layout, 4, 4, 2);
  auto region = torch::zeros({2, 4, 4}, torch::kBool);
  region.index_put_({0, torch::indexing::Slice(1, 3), torch::indexing::Slice(0, 2)}, true);
  const auto out = gdr::swap_tuples(t.hard_tuple, region, layout, 1, 5);
  const auto changed = out.ne(t.hard_tuple);
  for (int i = 0; i < 4; ++i) {
    if (i != 1) EXPECT_FALSE(changed.select(1, i).any().item<bool>());
  }
  EXPECT_FALSE(changed.select(1, 1).logical_and(region.logical_not()).any().item<bool>());
  EXPECT_TRUE(out.select(1, 1).masked_select(region).eq(5).all().item<bool>());
}

TEST(Swap, EmptyRegionIsNoOpAndErrors) {
  const auto layout = gdr::GroupLayout::parse("8,8,8,8");
  const auto t = grid(layout, 4, 4, 3);
  const auto none = torch::zeros({2, 4, 4}, torch::kBool);
  EXPECT_TRUE(torch::equal(gdr::swap_tuples(t.hard_tuple, none, layout, 0, 3), t.hard_tuple));
  EXPECT_THROW(gdr::swap_tuples(t.hard_tuple, none, layout, 4, 0), gdr::IndexError);
  EXPECT_THROW(gdr::swap_tuples(t.hard_tuple, none, layout, 0, 8), gdr::IndexError);
  EXPECT_THROW(gdr::swap_tuples(t.hard_tuple, torch::zeros({2, 3, 4}, torch::kBool), layout, 0, 1), gdr::ShapeError);
}

TEST(Swap, DecodesThroughDvae) {
  const auto layout = gdr::GroupLayout::parse("8,8");
  torch::manual_seed(0);
  gdr::Dvae dvae(layout, 16, 8);
  const auto t = grid(layout, 4, 4, 4);
  const auto none = torch::zeros({2, 4, 4}, torch::kBool);
  const auto a = gdr::attribute_swap(t, none, 0, 1, dvae);
  EXPECT_EQ(a.sizes(), (std::vector<std::int64_t>{2, 3, 16, 16}));
  auto region = torch::ones({2, 4, 4}, torch::kBool);
  const auto b = gdr::attribute_swap(t, region, 0, (t.hard_tuple[0][0][0][0].item<std::int64_t>() + 1) % 8, dvae);
  EXPECT_FALSE(torch::allclose(a, b));
}

// independent reference: direct sum with mirrored indexes
std::vector<double> reference_smooth(const std::vector<double>& v, double sigma) {
  const int n = static_cast<int>(v.size());
  const int r = static_cast<int>(std::floor(4.0 * sigma + 0.5));
  double z = 0.0;
  for (int k = -r; k <= r; ++k) z += std::exp(-0.5 * k * k / (sigma * sigma));
  std::vector<double> out(v.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    for (int k = -r; k <= r; ++k) {
      int j = i + k;
      while (j < 0 || j >= n) j = j < 0 ? -j - 1 : 2 * n - j - 1;
      out[static_cast<std::size_t>(i)] += v[static_cast<std::size_t>(j)] * std::exp(-0.5 * k * k / (sigma * sigma)) / z;
    }
  }
  return out;
}

TEST(SmoothCurve, MatchesReference) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  for (int n : {1, 3, 10, 40}) {
    for (double sigma : {0.5, 1.0, 2.5, 6.0}) {
      std::vector<double> v(static_cast<std::size_t>(n));
      for (auto& x : v) x = nd(rng);
      const auto got = gdr::smooth_curve(v, sigma);
      const auto want = reference_smooth(v, sigma);
      for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12) << n << " " << sigma;
    }
  }
}

TEST(SmoothCurve, ConstantImpulseAndLinearity) {
  const std::vector<double> c(17, 2.5);
  for (auto x : gdr::smooth_curve(c, 2.0)) EXPECT_NEAR(x, 2.5, 1e-12);
  std::vector<double> impulse(41, 0.0);
  impulse[20] = 1.0;
  const auto k = gdr::smooth_curve(impulse, 1.5);
  double sum = 0.0;
  for (auto x : k) sum += x;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_NEAR(k[19] / k[20], std::exp(-0.5 / 2.25), 1e-12);
  EXPECT_GT(k[14], 0.0);  // radius 6
  EXPECT_EQ(k[13], 0.0);
  std::vector<double> a{1, 4, 2, 8}, b{0, -1, 3, 3}, ab(4);
  for (int i = 0; i < 4; ++i) ab[static_cast<std::size_t>(i)] = 2 * a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)];
  const auto sa = gdr::smooth_curve(a, 1.0), sb = gdr::smooth_curve(b, 1.0), sab = gdr::smooth_curve(ab, 1.0);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(sab[i], 2 * sa[i] - sb[i], 1e-12);
  EXPECT_THROW(gdr::smooth_curve(std::vector<double>{}, 1.0), gdr::EmptyInputError);
  EXPECT_THROW(gdr::smooth_curve(c, 0.0), gdr::DomainError);
}

TEST(Nmi, Extremes) {
  const std::vector<std::int64_t> labels{0, 1, 2, 0, 1, 2, 0, 1};
  const std::vector<std::int64_t> renamed{7, 3, 9, 7, 3, 9, 7, 3};
  EXPECT_NEAR(*gdr::normalized_mutual_information(renamed, labels), 1.0, 1e-12);
  const std::vector<std::int64_t> constant(8, 4);
  EXPECT_EQ(*gdr::normalized_mutual_information(constant, labels), 0.0);
  EXPECT_FALSE(gdr::normalized_mutual_information(labels, constant).has_value());
  EXPECT_THROW(gdr::normalized_mutual_information(labels, std::vector<std::int64_t>{1}), gdr::ShapeError);
}

TEST(Nmi, ClosedFormAndIndependence) {
  // codes split each label evenly in two: I = H(L), H(C) = H(L) + log 2
  const std::vector<std::int64_t> labels{0, 0, 1, 1};
  const std::vector<std::int64_t> codes{0, 1, 2, 3};
  const double hl = std::log(2.0), hc = std::log(4.0);
  EXPECT_NEAR(*gdr::normalized_mutual_information(codes, labels), hl / (0.5 * (hl + hc)), 1e-12);
  std::mt19937_64 rng(9);
  std::vector<std::int64_t> x(20000), y(20000);
  for (auto& v : x) v = static_cast<std::int64_t>(rng() % 4);
  for (auto& v : y) v = static_cast<std::int64_t>(rng() % 3);
  EXPECT_LT(*gdr::normalized_mutual_information(x, y), 1e-3);
}

TEST(Alignment, PerfectGroupBeatsControl) {
  std::mt19937_64 rng(1);
  std::vector<gdr::ObjectCodes> objs;
  for (int i = 0; i < 200; ++i) {
    const int colour = static_cast<int>(rng() % 4), shape = static_cast<int>(rng() % 3);
    objs.push_back({{colour, static_cast<std::int64_t>(rng() % 8)}, {colour, shape}});
  }
  const auto r = gdr::attribute_alignment(objs, gdr::GroupLayout::parse("8,8"), 50, 2);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].best_attribute, 0);
  EXPECT_NEAR(*r[0].best_nmi, 1.0, 1e-12);
  EXPECT_GT(*r[0].margin(), 10.0);
  EXPECT_LT(*r[1].best_nmi, 0.1);
  EXPECT_THROW(gdr::attribute_alignment({}, gdr::GroupLayout::parse("8,8")), gdr::EmptyInputError);
}

TEST(Bmp, HeaderAndPadding) {
  gdr::RgbImage img{2, 3, std::vector<std::uint8_t>(18)};
  for (std::size_t i = 0; i < 18; ++i) img.data[i] = static_cast<std::uint8_t>(i * 10);
  const auto dir = fs::temp_directory_path() / "gdr_unit";
  fs::create_directories(dir);
  const auto path = (dir / "t.bmp").string();
  gdr::write_bmp(path, img);
  std::ifstream in(path, std::ios::binary);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), {});
  ASSERT_EQ(buf.size(), 54u + 2 * 12);  // rows padded to 4 bytes
  EXPECT_EQ(buf[0], 'B');
  EXPECT_EQ(buf[28], 24);
  // bottom-up rows, BGR order: first stored pixel is (y=1, x=0)
  EXPECT_EQ(buf[54], img.at(1, 0)[2]);
  EXPECT_EQ(buf[56], img.at(1, 0)[0]);
  const auto up = gdr::upscale(img, 3);
  EXPECT_EQ(up.width, 9);
  EXPECT_EQ(up.at(5, 8), img.at(1, 2));
}

}  // namespace
