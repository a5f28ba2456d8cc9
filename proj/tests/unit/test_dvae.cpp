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

#include "gdr/codebook.hpp"
#include "gdr/dvae.hpp"
#include "gdr/gumbel.hpp"

namespace {

using gdr::GroupLayout;

TEST(Dvae, EncodeShapes) {
  torch::manual_seed(0);
  gdr::Dvae small(GroupLayout({64, 64}), 64, 16);
  EXPECT_EQ(small->encode(torch::rand({2, 3, 64, 64}) * 2 - 1).sizes(), (std::vector<std::int64_t>{2, 128, 16, 16}));
  gdr::Dvae paper(GroupLayout({4096}), 128, 8);
  EXPECT_EQ(paper->encode(torch::zeros({1, 3, 128, 128})).sizes(), (std::vector<std::int64_t>{1, 4096, 32, 32}));
}

TEST(Dvae, DecodeShapesAndResolutions) {
  for (int res : {32, 64, 128}) {
    gdr::Dvae d(GroupLayout({8, 8, 8, 8}), res, 8);
    const auto logits = d->encode(torch::zeros({1, 3, res, res}));
    const auto img = d->decode(torch::softmax(logits, 1));
    EXPECT_EQ(img.sizes(), (std::vector<std::int64_t>{1, 3, res, res}));
  }
}

TEST(Dvae, Determinism) {
  gdr::Dvae d(GroupLayout({64, 64}), 64, 16);
  const auto x = torch::rand({1, 3, 64, 64});
  const auto both = d->encode(torch::cat({x, x}));
  EXPECT_TRUE(torch::equal(both[0], both[1]));
  const auto soft = torch::softmax(torch::randn({1, 128, 16, 16}), 1);
  EXPECT_TRUE(torch::equal(d->decode(soft), d->decode(soft)));
}

TEST(Dvae, ShapeErrors) {
  gdr::Dvae d(GroupLayout({64, 64}), 64, 16);
  EXPECT_THROW(d->encode(torch::zeros({1, 3, 32, 32})), gdr::ShapeError);
  EXPECT_THROW(d->encode(torch::zeros({1, 1, 64, 64})), gdr::ShapeError);
  EXPECT_THROW(d->decode(torch::zeros({1, 127, 16, 16})), gdr::ShapeError);
  EXPECT_THROW(d->decode(torch::zeros({1, 128, 8, 8})), gdr::ShapeError);
  EXPECT_THROW(gdr::Dvae(GroupLayout({64, 64}), 66, 16), gdr::ConfigError);
}

TEST(Dvae, OneHotDecodingApproachesSoftDecoding) {
  torch::manual_seed(3);
  const GroupLayout l({8, 8, 8, 8});
  gdr::Dvae d(l, 32, 8);
  torch::NoGradGuard ng;
  const auto logits = 4 * torch::randn({1, 32, 8, 8});
  const auto tuples = gdr::gumbel_sample(logits, l, 1.0, nullptr, true).hard_tuple;
  const auto hard = d->decode(gdr::grid_from_tuples(tuples, l).soft);
  double prev = 1e9;
  for (double tau : {1.0, 0.5, 0.25, 0.1}) {
    const auto soft = d->decode(gdr::gumbel_sample(logits, l, tau, nullptr, true).soft);
    const double gap = (soft - hard).pow(2).mean().item<double>();
    EXPECT_LE(gap, prev);
    prev = gap;
  }
}

TEST(ReconLoss, ClosedForms) {
  const auto a = torch::rand({2, 3, 8, 8}, torch::kFloat64);
  EXPECT_EQ(gdr::recon_loss(a, a).item<double>(), 0.0);
  EXPECT_NEAR(gdr::recon_loss(a + 0.1, a).item<double>(), 0.01, 1e-12);
  const auto b = torch::rand({2, 3, 8, 8}, torch::kFloat64);
  double sum = 0.0;
  auto ca = a.contiguous(), cb = b.contiguous();
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    const double d = ca.data_ptr<double>()[i] - cb.data_ptr<double>()[i];
    sum += d * d;
  }
  EXPECT_NEAR(gdr::recon_loss(a, b).item<double>(), sum / static_cast<double>(a.numel()), 1e-12);
  EXPECT_THROW(gdr::recon_loss(a, b.narrow(0, 0, 1)), gdr::ShapeError);
}

}  // namespace
