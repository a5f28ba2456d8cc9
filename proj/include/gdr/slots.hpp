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

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "gdr/attention.hpp"
#include "gdr/errors.hpp"

namespace gdr {

/// Learned per-slot Gaussians: query_k = mu_k + sigma * s_k * eps with
/// trainable means and a fixed (buffer) scale s_k. `sigma` is the scheduled
/// multiplier.
class RandomQueryInitImpl : public torch::nn::Module {
 public:
  RandomQueryInitImpl(std::int64_t num_slots, std::int64_t dim) {
    const double bound = std::sqrt(6.0 / static_cast<double>(num_slots + dim));
    mu = register_parameter("mu", torch::empty({num_slots, dim}).uniform_(-bound, bound));
    scale = register_buffer("scale", torch::ones({num_slots, dim}));
  }

  /// [B, K, c]. `gen` may be null when sigma == 0.
  torch::Tensor forward(std::int64_t batch, double sigma, torch::Generator* gen) {
    if (sigma < 0.0) throw DomainError("init_query_random: sigma must be >= 0");
    auto q = mu.unsqueeze(0).expand({batch, mu.size(0), mu.size(1)});
    if (sigma == 0.0) return q;
    if (gen == nullptr) throw DomainError("init_query_random: generator required for sigma > 0");
    const auto eps = torch::randn({batch, mu.size(0), mu.size(1)}, *gen, mu.options());
    return q + sigma * scale * eps;
  }

  torch::Tensor mu;
  torch::Tensor scale;
};
TORCH_MODULE(RandomQueryInit);

/// Pixel box (x0, y0, x1, y1) divided by the frame size.
inline std::array<float, 4> normalize_box(std::array<float, 4> box, float width, float height) {
  return {box[0] / width, box[1] / height, box[2] / width, box[3] / height};
}

/// Projects normalized boxes [B, K, 4] to queries [B, K, c] through a
/// two-layer MLP with GELU.
class ConditionQueryInitImpl : public torch::nn::Module {
 public:
  explicit ConditionQueryInitImpl(std::int64_t dim) {
    fc1 = register_module("fc1", torch::nn::Linear(4, dim));
    fc2 = register_module("fc2", torch::nn::Linear(dim, dim));
  }

  torch::Tensor forward(const torch::Tensor& boxes) {
    if (boxes.dim() != 3 || boxes.size(2) != 4) throw ShapeError("init_query_condition: boxes must be [B, K, 4]");
    if (boxes.numel() > 0 && (boxes.min().item<double>() < 0.0 || boxes.max().item<double>() > 1.0)) {
      throw ValidationError("init_query_condition: box coordinates must be normalized to [0, 1]");
    }
    return fc2(torch::gelu(fc1(boxes)));
  }

  torch::nn::Linear fc1{nullptr}, fc2{nullptr};
};
TORCH_MODULE(ConditionQueryInit);

/// Four 5x5 convolutions with ReLU, no downsampling. Output [B, H*W, c] in
/// raster order.
class ExtraEncoderImpl : public torch::nn::Module {
 public:
  ExtraEncoderImpl(std::int64_t hidden, std::int64_t dim) {
    namespace nn = torch::nn;
    net = register_module(
        "net", nn::Sequential(nn::Conv2d(nn::Conv2dOptions(3, hidden, 5).padding(2)), nn::ReLU(),
                              nn::Conv2d(nn::Conv2dOptions(hidden, hidden, 5).padding(2)), nn::ReLU(),
                              nn::Conv2d(nn::Conv2dOptions(hidden, hidden, 5).padding(2)), nn::ReLU(),
                              nn::Conv2d(nn::Conv2dOptions(hidden, dim, 5).padding(2))));
  }
  torch::Tensor forward(const torch::Tensor& image) {
    const auto y = net->forward(image);  // [B, c, H, W]
    return y.flatten(2).transpose(1, 2);
  }

  torch::nn::Sequential net{nullptr};
};
TORCH_MODULE(ExtraEncoder);

struct SlotSet {
  torch::Tensor slots;      // [B, K, c]
  torch::Tensor attention;  // [B, K, N], sums to 1 over K at each location
  int num_iterations_used = 0;
};

/// Slot Attention with the usual LayerNorms, GRU update and residual MLP.
/// Attention is normalized over slots, then renormalized over locations
/// (with `eps`) to form the weighted-mean update.
class SlotAttentionImpl : public torch::nn::Module {
 public:
  SlotAttentionImpl(std::int64_t dim, std::int64_t mlp_hidden, double eps = 1e-8) : dim_(dim), eps_(eps) {
    namespace nn = torch::nn;
    norm_inputs = register_module("norm_inputs", nn::LayerNorm(nn::LayerNormOptions({dim})));
    norm_slots = register_module("norm_slots", nn::LayerNorm(nn::LayerNormOptions({dim})));
    norm_mlp = register_module("norm_mlp", nn::LayerNorm(nn::LayerNormOptions({dim})));
    q = register_module("q", nn::Linear(nn::LinearOptions(dim, dim).bias(false)));
    k = register_module("k", nn::Linear(nn::LinearOptions(dim, dim).bias(false)));
    v = register_module("v", nn::Linear(nn::LinearOptions(dim, dim).bias(false)));
    gru = register_module("gru", nn::GRUCell(dim, dim));
    mlp = register_module("mlp", nn::Sequential(nn::Linear(dim, mlp_hidden), nn::ReLU(), nn::Linear(mlp_hidden, dim)));
  }

  SlotSet forward(const torch::Tensor& query, const torch::Tensor& features, int num_iter) {
    if (num_iter < 1) throw DomainError("slot_attention: num_iter must be >= 1");
    if (query.dim() != 3 || features.dim() != 3) throw ShapeError("slot_attention: expected [B, K, c] and [B, N, c]");
    if (query.size(1) == 0 || features.size(1) == 0) throw EmptyInputError("slot_attention: K and N must be non-zero");
    const auto b = query.size(0), num_slots = query.size(1);
    const auto x = norm_inputs(features);
    const auto keys = k(x);
    const auto values = v(x);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim_));
    auto slots = query;
    torch::Tensor attn;
    for (int it = 0; it < num_iter; ++it) {
      const auto prev = slots;
      const auto queries = q(norm_slots(slots));
      const auto logits = torch::matmul(keys, queries.transpose(1, 2)) * scale;  // [B, N, K]
      attn = torch::softmax(logits, -1);
      const auto weights = (attn + eps_) / (attn + eps_).sum(1, true);
      const auto updates = torch::matmul(weights.transpose(1, 2), values);  // [B, K, c]
      slots = gru(updates.reshape({-1, dim_}), prev.reshape({-1, dim_})).view({b, num_slots, dim_});
      slots = slots + mlp->forward(norm_mlp(slots));
    }
    return {slots, attn.transpose(1, 2), num_iter};
  }

  torch::nn::LayerNorm norm_inputs{nullptr}, norm_slots{nullptr}, norm_mlp{nullptr};
  torch::nn::Linear q{nullptr}, k{nullptr}, v{nullptr};
  torch::nn::GRUCell gru{nullptr};
  torch::nn::Sequential mlp{nullptr};

 private:
  std::int64_t dim_;
  double eps_;
};
TORCH_MODULE(SlotAttention);

/// Per-location argmax over slots (lowest index wins ties), reshaped to the
/// token grid and nearest-upsampled to `out_size` x `out_size`.
/// attention: [B, K, th*tw] -> labels [B, out_size, out_size] int64.
inline torch::Tensor masks_from_attention(const torch::Tensor& attention, std::int64_t token_h,
                                          std::int64_t token_w, std::int64_t out_size) {
  if (attention.dim() != 3 || attention.size(2) != token_h * token_w) {
    throw ShapeError("masks_from_attention: attention must be [B, K, th*tw]");
  }
  const auto labels = attention.detach().argmax(1).view({-1, token_h, token_w});
  if (token_h == out_size && token_w == out_size) return labels;
  // nearest upsampling: out pixel (y, x) <- token (y*th/out, x*tw/out)
  const auto ys = torch::div(torch::arange(out_size) * token_h, out_size, "floor");
  const auto xs = torch::div(torch::arange(out_size) * token_w, out_size, "floor");
  return labels.index_select(1, ys).index_select(2, xs);
}

/// Recurrent predictor turning slots at time t into queries at t+1: a stack
/// of transformer encoder blocks over the slot axis.
class SlotPredictorImpl : public torch::nn::Module {
 public:
  SlotPredictorImpl(std::int64_t dim, std::int64_t heads, int blocks) {
    for (int i = 0; i < blocks; ++i) {
      layers.push_back(register_module("block" + std::to_string(i), EncoderBlock(dim, heads, 4 * dim)));
    }
  }
  torch::Tensor forward(torch::Tensor slots) {
    for (auto& l : layers) slots = l(slots);
    return slots;
  }

  std::vector<EncoderBlock> layers;
};
TORCH_MODULE(SlotPredictor);

}  // namespace gdr
