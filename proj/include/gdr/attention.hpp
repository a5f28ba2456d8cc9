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

#include <cmath>
#include <limits>

#include "gdr/errors.hpp"

namespace gdr {

/// Multi-head scaled dot-product attention over [B, L, D] sequences.
class MultiHeadAttentionImpl : public torch::nn::Module {
 public:
  MultiHeadAttentionImpl(std::int64_t dim, std::int64_t heads) : dim_(dim), heads_(heads) {
    if (dim % heads != 0) throw ConfigError("attention: dim not divisible by heads");
    q = register_module("q", torch::nn::Linear(torch::nn::LinearOptions(dim, dim).bias(false)));
    k = register_module("k", torch::nn::Linear(torch::nn::LinearOptions(dim, dim).bias(false)));
    v = register_module("v", torch::nn::Linear(torch::nn::LinearOptions(dim, dim).bias(false)));
    out = register_module("out", torch::nn::Linear(dim, dim));
  }

  /// `blocked` is an optional [Lq, Lk] bool mask; true entries get zero
  /// attention weight.
  torch::Tensor forward(const torch::Tensor& query, const torch::Tensor& memory,
                        const torch::Tensor& blocked = {}) {
    const auto b = query.size(0), lq = query.size(1), lk = memory.size(1);
    const auto dh = dim_ / heads_;
    auto split = [&](const torch::Tensor& t, std::int64_t len) {
      return t.view({b, len, heads_, dh}).transpose(1, 2);
    };
    const auto qh = split(q(query), lq);
    const auto kh = split(k(memory), lk);
    const auto vh = split(v(memory), lk);
    auto scores = torch::matmul(qh, kh.transpose(-2, -1)) / std::sqrt(static_cast<double>(dh));
    if (blocked.defined()) {
      scores = scores.masked_fill(blocked, -std::numeric_limits<double>::infinity());
    }
    const auto weights = torch::softmax(scores, -1);
    const auto mixed = torch::matmul(weights, vh).transpose(1, 2).reshape({b, lq, dim_});
    return out(mixed);
  }

  torch::nn::Linear q{nullptr}, k{nullptr}, v{nullptr}, out{nullptr};

 private:
  std::int64_t dim_;
  std::int64_t heads_;
};
TORCH_MODULE(MultiHeadAttention);

/// [L, L] mask blocking attention to later positions.
inline torch::Tensor causal_mask(std::int64_t length) {
  return torch::ones({length, length}, torch::kBool).triu(1);
}

inline torch::nn::Sequential feed_forward(std::int64_t dim, std::int64_t hidden) {
  return torch::nn::Sequential(torch::nn::Linear(dim, hidden), torch::nn::GELU(), torch::nn::Linear(hidden, dim));
}

/// Pre-norm transformer encoder block (no positional information, so it is
/// equivariant to permutations of the sequence).
class EncoderBlockImpl : public torch::nn::Module {
 public:
  EncoderBlockImpl(std::int64_t dim, std::int64_t heads, std::int64_t ffn) {
    norm1 = register_module("norm1", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
    attn = register_module("attn", MultiHeadAttention(dim, heads));
    norm2 = register_module("norm2", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
    mlp = register_module("mlp", feed_forward(dim, ffn));
  }
  torch::Tensor forward(torch::Tensor x) {
    const auto h = norm1(x);
    x = x + attn(h, h);
    return x + mlp->forward(norm2(x));
  }

  torch::nn::LayerNorm norm1{nullptr}, norm2{nullptr};
  MultiHeadAttention attn{nullptr};
  torch::nn::Sequential mlp{nullptr};
};
TORCH_MODULE(EncoderBlock);

/// Pre-norm transformer decoder block: causal self-attention, cross-attention
/// to a memory, feed-forward.
class DecoderBlockImpl : public torch::nn::Module {
 public:
  DecoderBlockImpl(std::int64_t dim, std::int64_t heads, std::int64_t ffn) {
    norm1 = register_module("norm1", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
    self_attn = register_module("self_attn", MultiHeadAttention(dim, heads));
    norm2 = register_module("norm2", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
    cross_attn = register_module("cross_attn", MultiHeadAttention(dim, heads));
    norm3 = register_module("norm3", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
    mlp = register_module("mlp", feed_forward(dim, ffn));
  }
  torch::Tensor forward(torch::Tensor x, const torch::Tensor& memory, const torch::Tensor& mask) {
    const auto h = norm1(x);
    x = x + self_attn(h, h, mask);
    x = x + cross_attn(norm2(x), memory);
    return x + mlp->forward(norm3(x));
  }

  torch::nn::LayerNorm norm1{nullptr}, norm2{nullptr}, norm3{nullptr};
  MultiHeadAttention self_attn{nullptr}, cross_attn{nullptr};
  torch::nn::Sequential mlp{nullptr};
};
TORCH_MODULE(DecoderBlock);

}  // namespace gdr
