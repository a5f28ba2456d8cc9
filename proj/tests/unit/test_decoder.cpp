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

#include "finite_difference.hpp"
#include "gdr/ar_decoder.hpp"

namespace {

gdr::TokenDecoder make_decoder(std::int64_t c = 16, std::int64_t n = 64, std::int64_t tokens = 8) {
  return gdr::TokenDecoder(gdr::TokenDecoderOptions{c, n, tokens, 2, 4, 4});
}

TEST(BosShift, Definition) {
  const auto bos = torch::full({2}, -1.0);
  const auto x = torch::tensor({1.0, 1.0, 2.0, 2.0, 3.0, 3.0}).view({3, 2});
  const auto once = gdr::bos_shift(x, bos);
  EXPECT_TRUE(torch::equal(once, torch::tensor({-1.0, -1.0, 1.0, 1.0, 2.0, 2.0}).view({3, 2})));
  const auto twice = gdr::bos_shift(once, bos);
  EXPECT_TRUE(torch::equal(twice, torch::tensor({-1.0, -1.0, -1.0, -1.0, 1.0, 1.0}).view({3, 2})));
  EXPECT_TRUE(torch::equal(gdr::bos_shift(x.narrow(0, 0, 1), bos), bos.view({1, 2})));
  EXPECT_THROW(gdr::bos_shift(torch::zeros({0, 2}), bos), gdr::EmptyInputError);
  EXPECT_THROW(gdr::bos_shift(x, torch::zeros({3})), gdr::ShapeError);
}

TEST(Decoder, ReadoutShapeAndLinearity) {
  gdr::TokenDecoder dec(gdr::TokenDecoderOptions{32, 4096, 16, 1, 4, 4});
  const auto y = torch::randn({1, 16, 32});
  EXPECT_EQ(dec->readout(y).sizes(), (std::vector<std::int64_t>{1, 16, 4096}));
  const auto same = y.narrow(1, 0, 1).expand({1, 3, 32});
  const auto logits = dec->readout(same);
  EXPECT_TRUE(torch::equal(logits[0][0], logits[0][2]));
  {
    torch::NoGradGuard ng;
    dec->head->weight.zero_();
    dec->head->bias.zero_();
  }
  EXPECT_EQ(dec->readout(y).abs().max().item<double>(), 0.0);
}

TEST(Decoder, CrossAttentionIsLive) {
  torch::manual_seed(1);
  auto dec = make_decoder();
  const auto x = torch::randn({1, 8, 16});
  const auto a = dec->decode_tokens(x, torch::zeros({1, 3, 16}));
  const auto b = dec->decode_tokens(x, torch::randn({1, 3, 16}));
  EXPECT_FALSE(torch::allclose(a, b));
  EXPECT_TRUE(torch::equal(a, dec->decode_tokens(x, torch::zeros({1, 3, 16}))));
}

TEST(Decoder, CausalityByPerturbation) {
  torch::manual_seed(2);
  auto dec = make_decoder();
  dec->to(torch::kFloat64);
  const auto x = torch::randn({1, 8, 16}, torch::kFloat64);
  const auto slots = torch::randn({1, 3, 16}, torch::kFloat64);
  const auto base = dec->decode_tokens(x, slots);
  for (int j = 0; j < 8; ++j) {
    auto xp = x.clone();
    xp[0][j] += 1.0;
    const auto y = dec->decode_tokens(xp, slots);
    for (int i = 0; i < j; ++i) EXPECT_EQ((y[0][i] - base[0][i]).abs().max().item<double>(), 0.0);
    EXPECT_GT((y[0][j] - base[0][j]).abs().max().item<double>(), 0.0);
  }
}

TEST(Decoder, ForwardUsesShiftedTokens) {
  torch::manual_seed(3);
  auto dec = make_decoder();
  const auto tokens = torch::randn({1, 8, 16});
  auto changed = tokens.clone();
  changed[0][7] += 5.0;  // the last token never reaches the decoder input
  EXPECT_TRUE(torch::equal(dec(tokens, torch::ones({1, 2, 16})), dec(changed, torch::ones({1, 2, 16}))));
}

TEST(ClassificationLoss, ClosedForms) {
  const auto uniform = torch::zeros({10, 4096}, torch::kFloat64);
  const auto targets = torch::randint(0, 4096, {10}, torch::kInt64);
  EXPECT_NEAR(gdr::classification_loss(uniform, targets).item<double>(), std::log(4096.0), 1e-6);
  auto peaked = torch::zeros({3, 5}, torch::kFloat64);
  const auto t = torch::tensor({1, 4, 0}, torch::kInt64);
  for (int i = 0; i < 3; ++i) peaked[i][t[i].item<std::int64_t>()] = 1e3;
  EXPECT_LT(gdr::classification_loss(peaked, t).item<double>(), 1e-12);
  EXPECT_THROW(gdr::classification_loss(uniform, torch::full({10}, 4096, torch::kInt64)), gdr::IndexError);
  EXPECT_THROW(gdr::classification_loss(uniform, torch::full({10}, -1, torch::kInt64)), gdr::IndexError);
}

TEST(ClassificationLoss, MatchesBruteForce) {
  torch::manual_seed(4);
  const auto logits = torch::randn({6, 7}, torch::kFloat64);
  const auto targets = torch::randint(0, 7, {6}, torch::kInt64);
  double sum = 0.0;
  for (int i = 0; i < 6; ++i) {
    double z = 0.0;
    for (int k = 0; k < 7; ++k) z += std::exp(logits[i][k].item<double>());
    sum += std::log(z) - logits[i][targets[i].item<std::int64_t>()].item<double>();
  }
  EXPECT_NEAR(gdr::classification_loss(logits, targets).item<double>(), sum / 6, 1e-12);
}

TEST(ClassificationLoss, GradientIsSoftmaxMinusOneHot) {
  torch::manual_seed(5);
  const auto logits = torch::randn({4, 9}, torch::kFloat64).requires_grad_(true);
  const auto targets = torch::randint(0, 9, {4}, torch::kInt64);
  const auto g = torch::autograd::grad({gdr::classification_loss(logits, targets)}, {logits})[0];
  const auto expected = (torch::softmax(logits.detach(), 1) - torch::one_hot(targets, 9).to(torch::kFloat64)) / 4;
  EXPECT_LT((g - expected).abs().max().item<double>(), 1e-6);
  auto f = [&](const torch::Tensor& x) { return gdr::classification_loss(x, targets); };
  EXPECT_LT(gdr::testing::max_grad_rel_error(f, logits.detach()), 1e-4);
}

}  // namespace
