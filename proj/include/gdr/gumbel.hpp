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

#include <optional>
#include <string>

#include "gdr/errors.hpp"
#include "gdr/layout.hpp"

namespace gdr {

/// Discrete state of a batch of token grids.
///   soft:       [B, sum(a_i), H, W] concatenated per-group probabilities
///   hard_tuple: [B, g, H, W] int64, element i in [0, a_i)
///   natural:    [B, H, W] int64 mixed-radix flattening of hard_tuple
struct TokenGrid {
  torch::Tensor soft;
  torch::Tensor hard_tuple;
  torch::Tensor natural;
  GroupLayout layout;

  std::int64_t batch() const { return hard_tuple.size(0); }
  std::int64_t height() const { return hard_tuple.size(2); }
  std::int64_t width() const { return hard_tuple.size(3); }
};

/// Flattens [B, g, H, W] tuples into [B, H, W] natural indexes.
inline torch::Tensor tuples_to_natural(const torch::Tensor& hard_tuple, const GroupLayout& layout) {
  if (hard_tuple.dim() < 2 || hard_tuple.size(1) != layout.g()) {
    throw ShapeError("tuples_to_natural: expected group axis of size " + std::to_string(layout.g()));
  }
  auto out = torch::zeros_like(hard_tuple.select(1, 0));
  for (int i = 0; i < layout.g(); ++i) {
    const auto t = hard_tuple.select(1, i);
    if (t.numel() > 0 && (t.min().item<std::int64_t>() < 0 ||
                          t.max().item<std::int64_t>() >= layout.size(static_cast<std::size_t>(i)))) {
      throw IndexError("tuples_to_natural: group " + std::to_string(i) + " index out of range");
    }
    out = out + t * layout.stride(static_cast<std::size_t>(i));
  }
  return out;
}

/// Inverse of tuples_to_natural: [B, H, W] -> [B, g, H, W].
inline torch::Tensor natural_to_tuples(const torch::Tensor& natural, const GroupLayout& layout) {
  if (natural.numel() > 0 &&
      (natural.min().item<std::int64_t>() < 0 || natural.max().item<std::int64_t>() >= layout.n())) {
    throw IndexError("natural_to_tuples: index out of range");
  }
  std::vector<torch::Tensor> parts;
  auto rest = natural.clone();
  for (int i = 0; i < layout.g(); ++i) {
    const auto a = layout.size(static_cast<std::size_t>(i));
    parts.push_back(torch::remainder(rest, a));
    rest = torch::div(rest, a, "floor");
  }
  return torch::stack(parts, 1);
}

/// Standard Gumbel(0, 1) noise.
inline torch::Tensor gumbel_noise(at::IntArrayRef shape, torch::Generator& gen,
                                  torch::Dtype dtype = torch::kFloat32) {
  // in place, this runs over every logit on every training step
  auto u = torch::rand(shape, gen, torch::TensorOptions().dtype(dtype));
  const double tiny = dtype == torch::kFloat64 ? 1e-300 : 1e-20;
  return u.clamp_min_(tiny).log_().neg_().clamp_min_(tiny).log_().neg_();
}

/// Grouped Gumbel sampling. Each channel slice Z^i of `logits`
/// [B, sum(a_i), H, W] is sampled independently:
///   soft_i = softmax((Z^i + G^i) / tau),  hard_i = argmax(Z^i + G^i)
/// with the same noise G^i shared by the soft and hard outputs. With
/// `noise_free` the noise is zero (evaluation) and `gen` may be null.
inline TokenGrid gumbel_sample(const torch::Tensor& logits, const GroupLayout& layout, double tau,
                               torch::Generator* gen, bool noise_free) {
  if (tau <= 0.0) throw DomainError("gumbel_sample: tau must be positive");
  if (logits.dim() != 4 || logits.size(1) != layout.total_channels()) {
    throw ShapeError("gumbel_sample: logits must be [B, " + std::to_string(layout.total_channels()) +
                     ", H, W]");
  }
  torch::Tensor perturbed = logits;
  if (!noise_free) {
    if (gen == nullptr) throw DomainError("gumbel_sample: generator required when sampling noise");
    perturbed = logits + gumbel_noise(logits.sizes(), *gen, logits.scalar_type());
  }
  std::vector<torch::Tensor> soft;
  std::vector<torch::Tensor> hard;
  soft.reserve(static_cast<std::size_t>(layout.g()));
  hard.reserve(static_cast<std::size_t>(layout.g()));
  for (int i = 0; i < layout.g(); ++i) {
    const auto slice = perturbed.narrow(1, layout.channel_offset(static_cast<std::size_t>(i)),
                                        layout.size(static_cast<std::size_t>(i)));
    soft.push_back(torch::softmax(slice / tau, 1));
    hard.push_back(slice.detach().argmax(1));
  }
  TokenGrid grid;
  grid.soft = layout.g() == 1 ? soft[0] : torch::cat(soft, 1);
  grid.hard_tuple = torch::stack(hard, 1);
  grid.natural = tuples_to_natural(grid.hard_tuple, layout);
  grid.layout = layout;
  return grid;
}

/// Builds a grid from hard tuples alone; `soft` holds the per-group one-hot
/// encoding so that it can be decoded like a soft sample.
inline TokenGrid grid_from_tuples(const torch::Tensor& hard_tuple, const GroupLayout& layout,
                                  torch::Dtype dtype = torch::kFloat32) {
  if (hard_tuple.dim() != 4 || hard_tuple.size(1) != layout.g()) {
    throw ShapeError("grid_from_tuples: expected [B, g, H, W]");
  }
  TokenGrid grid;
  grid.layout = layout;
  grid.hard_tuple = hard_tuple;
  grid.natural = tuples_to_natural(hard_tuple, layout);
  std::vector<torch::Tensor> parts;
  for (int i = 0; i < layout.g(); ++i) {
    const auto a = layout.size(static_cast<std::size_t>(i));
    parts.push_back(torch::one_hot(hard_tuple.select(1, i), a).permute({0, 3, 1, 2}).to(dtype));
  }
  grid.soft = torch::cat(parts, 1);
  return grid;
}

}  // namespace gdr
