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

#include <torch/torch.h>

#include <string>
#include <vector>

#include "gdr/attention.hpp"
#include "gdr/errors.hpp"

namespace gdr {

/// Prepends `bos` and drops the last token along the sequence axis:
/// [B, N, c] (or [N, c]) -> same shape, out[0] = bos, out[i] = in[i-1].
inline torch::Tensor bos_shift(const torch::Tensor& sequence, const torch::Tensor& bos) {
  if (sequence.dim() == 2) return bos_shift(sequence.unsqueeze(0), bos).squeeze(0);
  if (sequence.dim() != 3) throw ShapeError("bos_shift: expected [B, N, c]");
  if (sequence.size(1) == 0) throw EmptyInputError("bos_shift: empty sequence");
  const auto b = sequence.size(0), c = sequence.size(2);
  if (bos.numel() != c) throw ShapeError("bos_shift: bos must have c elements");
  const auto head = bos.reshape({1, 1, c}).expand({b, 1, c});
  return torch::cat({head, sequence.narrow(1, 0, sequence.size(1) - 1)}, 1);
}

struct TokenDecoderOptions {
  std::int64_t channel_dim = 256;
  std::int64_t num_code = 4096;
  std::int64_t num_tokens = 256;
  int blocks = 4;
  int heads = 4;
  int ffn_multiplier = 4;
};

/// Causally masked transformer decoder over the BOS-shifted token sequence,
/// cross-attending to slots, with a linear readout to code classes.
class TokenDecoderImpl : public torch::nn::Module {
 public:
  explicit TokenDecoderImpl(const TokenDecoderOptions& o) : options_(o) {
    bos = register_parameter("bos", torch::randn({o.channel_dim}) * 0.02);
    position = register_parameter("position", torch::randn({1, o.num_tokens, o.channel_dim}) * 0.02);
    for (int i = 0; i < o.blocks; ++i) {
      layers.push_back(register_module("block" + std::to_string(i),
                                       DecoderBlock(o.channel_dim, o.heads, o.ffn_multiplier * o.channel_dim)));
    }
    norm = register_module("norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({o.channel_dim})));
    head = register_module("head", torch::nn::Linear(o.channel_dim, o.num_code));
    mask_ = causal_mask(o.num_tokens);
  }

  /// shifted [B, N, c] (from bos_shift), slots [B, K, c] -> Y [B, N, c].
  /// Learned absolute position embeddings are added here.
  torch::Tensor decode_tokens(const torch::Tensor& shifted, const torch::Tensor& slots) {
    if (shifted.dim() != 3 || shifted.size(2) != options_.channel_dim) {
      throw ShapeError("decode_tokens: expected [B, N, c]");
    }
    const auto n = shifted.size(1);
    if (n > options_.num_tokens) throw ShapeError("decode_tokens: sequence longer than position table");
    auto x = shifted + position.narrow(1, 0, n);
    const auto mask = n == options_.num_tokens ? mask_ : causal_mask(n);
    for (auto& l : layers) x = l(x, slots, mask);
    return norm(x);
  }

  /// Unnormalized class logits [..., n_code].
  torch::Tensor readout(const torch::Tensor& y) { return head(y); }

  torch::Tensor forward(const torch::Tensor& tokens, const torch::Tensor& slots) {
    return readout(decode_tokens(bos_shift(tokens, bos), slots));
  }

  const TokenDecoderOptions& options() const noexcept { return options_; }

  torch::Tensor bos;
  torch::Tensor position;
  std::vector<DecoderBlock> layers;
  torch::nn::LayerNorm norm{nullptr};
  torch::nn::Linear head{nullptr};

 private:
  TokenDecoderOptions options_;
  torch::Tensor mask_;
};
TORCH_MODULE(TokenDecoder);

/// Mean cross-entropy of logits [..., n] against natural-index targets [...].
inline torch::Tensor classification_loss(const torch::Tensor& logits, const torch::Tensor& targets) {
  const auto n = logits.size(-1);
  if (logits.numel() / n != targets.numel()) throw ShapeError("classification_loss: target count mismatch");
  if (targets.numel() > 0 && (targets.min().item<std::int64_t>() < 0 || targets.max().item<std::int64_t>() >= n)) {
    throw IndexError("classification_loss: target outside [0, " + std::to_string(n) + ")");
  }
  return torch::nn::functional::cross_entropy(logits.reshape({-1, n}), targets.reshape({-1}).to(torch::kInt64));
}

}  // namespace gdr
