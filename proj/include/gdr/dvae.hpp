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

#include "gdr/errors.hpp"
#include "gdr/layout.hpp"

namespace gdr {

namespace nn = torch::nn;

/// CNN encoder with exactly 4x spatial downsampling:
/// two stride-2 4x4 convs, two 3x3 convs, then a 1x1 conv to sum(a_i)
/// logit channels.
class DvaeEncoderImpl : public nn::Module {
 public:
  DvaeEncoderImpl(std::int64_t hidden, std::int64_t out_channels) {
    net = register_module(
        "net", nn::Sequential(nn::Conv2d(nn::Conv2dOptions(3, hidden, 4).stride(2).padding(1)), nn::ReLU(),
                              nn::Conv2d(nn::Conv2dOptions(hidden, hidden, 4).stride(2).padding(1)), nn::ReLU(),
                              nn::Conv2d(nn::Conv2dOptions(hidden, hidden, 3).padding(1)), nn::ReLU(),
                              nn::Conv2d(nn::Conv2dOptions(hidden, hidden, 3).padding(1)), nn::ReLU(),
                              nn::Conv2d(nn::Conv2dOptions(hidden, out_channels, 1))));
  }
  torch::Tensor forward(const torch::Tensor& x) { return net->forward(x); }

  nn::Sequential net{nullptr};
};
TORCH_MODULE(DvaeEncoder);

/// Mirror of the encoder: a learned 1x1 embedding of the (soft or one-hot)
/// code probabilities, then nearest-neighbour 2x upsampling twice.
class DvaeDecoderImpl : public nn::Module {
 public:
  DvaeDecoderImpl(std::int64_t in_channels, std::int64_t hidden) {
    auto up = [] {
      return nn::Upsample(nn::UpsampleOptions().scale_factor(std::vector<double>{2.0, 2.0}).mode(torch::kNearest));
    };
    net = register_module(
        "net", nn::Sequential(nn::Conv2d(nn::Conv2dOptions(in_channels, hidden, 1)), nn::ReLU(),
                              nn::Conv2d(nn::Conv2dOptions(hidden, hidden, 3).padding(1)), nn::ReLU(), up(),
                              nn::Conv2d(nn::Conv2dOptions(hidden, hidden, 3).padding(1)), nn::ReLU(), up(),
                              nn::Conv2d(nn::Conv2dOptions(hidden, hidden, 3).padding(1)), nn::ReLU(),
                              nn::Conv2d(nn::Conv2dOptions(hidden, 3, 1))));
  }
  torch::Tensor forward(const torch::Tensor& soft) { return net->forward(soft); }

  nn::Sequential net{nullptr};
};
TORCH_MODULE(DvaeDecoder);

class DvaeImpl : public nn::Module {
 public:
  DvaeImpl(GroupLayout layout, int input_resolution, std::int64_t hidden)
      : layout_(std::move(layout)), resolution_(input_resolution) {
    if (input_resolution % 4 != 0) throw ConfigError("dvae: input resolution must be divisible by 4");
    encoder = register_module("encoder", DvaeEncoder(hidden, layout_.total_channels()));
    decoder = register_module("decoder", DvaeDecoder(layout_.total_channels(), hidden));
  }

  /// [B, 3, R, R] in [-1, 1] -> logits [B, sum(a_i), R/4, R/4].
  torch::Tensor encode(const torch::Tensor& image) {
    if (image.dim() != 4 || image.size(1) != 3 || image.size(2) != resolution_ || image.size(3) != resolution_) {
      throw ShapeError("dvae encode: expected [B, 3, " + std::to_string(resolution_) + ", " +
                       std::to_string(resolution_) + "]");
    }
    return encoder(image);
  }

  /// [B, sum(a_i), R/4, R/4] probabilities -> [B, 3, R, R].
  torch::Tensor decode(const torch::Tensor& soft) {
    const auto t = resolution_ / 4;
    if (soft.dim() != 4 || soft.size(1) != layout_.total_channels() || soft.size(2) != t || soft.size(3) != t) {
      throw ShapeError("dvae decode: expected [B, " + std::to_string(layout_.total_channels()) + ", " +
                       std::to_string(t) + ", " + std::to_string(t) + "]");
    }
    return decoder(soft);
  }

  const GroupLayout& layout() const noexcept { return layout_; }
  int resolution() const noexcept { return resolution_; }

  DvaeEncoder encoder{nullptr};
  DvaeDecoder decoder{nullptr};

 private:
  GroupLayout layout_;
  int resolution_;
};
TORCH_MODULE(Dvae);

/// Mean squared error over every pixel and channel.
inline torch::Tensor recon_loss(const torch::Tensor& reconstruction, const torch::Tensor& target) {
  if (reconstruction.sizes() != target.sizes()) throw ShapeError("recon_loss: shape mismatch");
  return torch::mse_loss(reconstruction, target);
}

}  // namespace gdr
