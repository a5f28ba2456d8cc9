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

#include <ATen/CPUGeneratorImpl.h>
#include <torch/torch.h>

#include <cstdint>
#include <string>
#include <vector>

#include "gdr/ar_decoder.hpp"
#include "gdr/codebook.hpp"
#include "gdr/config.hpp"
#include "gdr/dvae.hpp"
#include "gdr/errors.hpp"
#include "gdr/gumbel.hpp"
#include "gdr/slots.hpp"
#include "gdr/store.hpp"

namespace gdr {

inline torch::Generator make_generator(std::uint64_t seed) {
  return at::make_generator<at::CPUGeneratorImpl>(seed);
}

struct ModelVariant {
  Architecture architecture = Architecture::kSlate;
  GroupLayout layout;
  QueryMode query_mode = QueryMode::kRandom;

  static ModelVariant from_config(const GlobalConfig& c) { return {c.variant, c.layout, c.query_mode}; }
  std::string name() const {
    return to_string(architecture) + "-g" + std::to_string(layout.g()) + "-" + to_string(query_mode);
  }
};

struct DvaeOutput {
  torch::Tensor logits;
  TokenGrid tokens;
  torch::Tensor reconstruction;
};

/// Per-frame outputs of the object-centric path, stacked over time.
struct OclOutput {
  torch::Tensor loss;       // mean classification loss over frames
  torch::Tensor attention;  // [B, T, K, N_features]
  torch::Tensor masks;      // [B, T, R, R] int64 slot labels
  torch::Tensor natural;    // [B, T, h, w] target code indexes
  torch::Tensor slots;      // [B, T, K, c]
};

/// dVAE -> discretizer/codebook -> query init -> Slot Attention ->
/// causal transformer decoder, wired per architecture:
///   "+" variants aggregate an extra encoder's full-resolution map;
///   video variants turn slots at t into queries at t+1.
class OclModelImpl : public torch::nn::Module {
 public:
  OclModelImpl(ModelVariant variant, const GlobalConfig& config) : variant_(std::move(variant)), config_(config) {
    config_.layout = variant_.layout;
    config_.variant = variant_.architecture;
    config_.query_mode = variant_.query_mode;
    config_.validate();
    const auto c = config_.channel_dim;
    const auto res = config_.input_resolution;
    const auto tokens = static_cast<std::int64_t>(config_.token_resolution()) * config_.token_resolution();

    dvae = register_module("dvae", Dvae(variant_.layout, res, config_.dvae_hidden));
    codebook = register_module("codebook", GroupedCodebook(CodebookOptions{variant_.layout, c, config_.dim_multiplier,
                                                                           config_.use_codebook_layernorm, false}));
    if (variant_.query_mode == QueryMode::kRandom) {
      random_query = register_module("random_query", RandomQueryInit(config_.num_slots, c));
    } else {
      condition_query = register_module("condition_query", ConditionQueryInit(c));
    }
    std::int64_t feature_tokens = tokens;
    if (has_extra_encoder(variant_.architecture)) {
      extra_encoder = register_module("extra_encoder", ExtraEncoder(config_.extra_encoder_hidden, c));
      feature_tokens = static_cast<std::int64_t>(res) * res;
    }
    slot_position = register_parameter("slot_position", torch::randn({1, feature_tokens, c}) * 0.02);
    slot_attention = register_module("slot_attention", SlotAttention(c, config_.effective_slot_mlp_hidden()));
    if (is_video(variant_.architecture)) {
      predictor = register_module("predictor", SlotPredictor(c, config_.predictor_heads, config_.predictor_blocks));
    }
    decoder = register_module("decoder", TokenDecoder(TokenDecoderOptions{c, config_.num_code, tokens, config_.decoder_blocks,
                                                                           config_.decoder_heads, config_.decoder_ffn_multiplier}));
  }

  const ModelVariant& variant() const noexcept { return variant_; }
  const GlobalConfig& config() const noexcept { return config_; }
  /// Training length only; lets a loaded stage-1 checkpoint run a stage 2 of
  /// a different length. Architecture fields stay fixed.
  void set_scale_factor(double f) {
    if (!(f > 0.0)) throw ConfigError("config: scale_factor must be positive");
    config_.scale_factor = f;
  }
  const GroupLayout& layout() const noexcept { return variant_.layout; }

  bool stage1_complete = false;
  bool stage2_complete = false;

  /// Stage-1 forward on frames [B, 3, R, R]: Gumbel sampling at `tau`
  /// (noise-free when `gen` is null) and reconstruction from soft samples.
  DvaeOutput forward_dvae(const torch::Tensor& pixels, double tau, torch::Generator* gen) {
    DvaeOutput out;
    out.logits = dvae->encode(pixels);
    out.tokens = gumbel_sample(out.logits, layout(), tau, gen, gen == nullptr);
    out.reconstruction = dvae->decode(out.tokens.soft);
    return out;
  }

  /// Hard discretization of frames [B, 3, R, R] through the frozen dVAE.
  TokenGrid discretize(const torch::Tensor& pixels, torch::Generator* gen) {
    torch::NoGradGuard ng;
    const auto logits = dvae->encode(pixels);
    return gumbel_sample(logits, layout(), config_.test_tau, gen, gen == nullptr);
  }

  /// Discrete features X [B, N, c] in raster order.
  torch::Tensor discrete_features(const TokenGrid& tokens) {
    const auto x = codebook->lookup(tokens);
    return x.reshape({x.size(0), -1, x.size(3)});
  }

  torch::Tensor extra_encode(const torch::Tensor& pixels) {
    if (extra_encoder.is_empty()) {
      throw ConfigError("extra_encode: " + to_string(variant_.architecture) + " has no extra encoder");
    }
    return extra_encoder(pixels);
  }

  torch::Tensor predict_next_query(const SlotSet& slots) {
    if (predictor.is_empty()) {
      throw ConfigError("predict_next_query: " + to_string(variant_.architecture) + " is an image variant");
    }
    return predictor(slots.slots);
  }

  torch::Tensor initial_query(std::int64_t batch, const torch::Tensor& boxes, double sigma, torch::Generator* gen) {
    if (variant_.query_mode == QueryMode::kRandom) return random_query(batch, sigma, gen);
    if (!boxes.defined()) throw ConfigError("condition query requires bounding boxes");
    return condition_query(boxes);
  }

  /// Stage-2 forward. pixels [B, T, 3, R, R], boxes [B, T, K, 4] (may be
  /// undefined for random queries). With `gen` null everything is
  /// deterministic (argmax discretization, sigma ignored).
  OclOutput forward_ocl(const torch::Tensor& pixels, const torch::Tensor& boxes, double sigma, torch::Generator* gen) {
    if (pixels.dim() != 5) throw ShapeError("forward_ocl: pixels must be [B, T, 3, R, R]");
    const auto b = pixels.size(0), frames = pixels.size(1);
    const auto res = config_.input_resolution;
    const auto th = config_.token_resolution();
    const bool plus = has_extra_encoder(variant_.architecture);
    if (frames > 1 && !is_video(variant_.architecture)) {
      throw ConfigError("forward_ocl: " + to_string(variant_.architecture) + " takes single frames");
    }
    std::vector<torch::Tensor> losses, attentions, masks, naturals, slot_list;
    SlotSet slots;
    for (std::int64_t t = 0; t < frames; ++t) {
      const auto frame = pixels.select(1, t);
      const auto tokens = discretize(frame, gen);
      const auto x = discrete_features(tokens);
      const auto features = (plus ? extra_encode(frame) : x) + slot_position;
      torch::Tensor query;
      if (t == 0) {
        query = initial_query(b, boxes.defined() ? boxes.select(1, 0) : torch::Tensor(), gen ? sigma : 0.0, gen);
      } else {
        query = predict_next_query(slots);
      }
      slots = slot_attention(query, features, config_.effective_num_iter());
      const auto logits = decoder(x, slots.slots);
      losses.push_back(classification_loss(logits, tokens.natural));
      attentions.push_back(slots.attention);
      masks.push_back(plus ? masks_from_attention(slots.attention, res, res, res)
                           : masks_from_attention(slots.attention, th, th, res));
      naturals.push_back(tokens.natural);
      slot_list.push_back(slots.slots);
    }
    OclOutput out;
    out.loss = torch::stack(losses).mean();
    out.attention = torch::stack(attentions, 1);
    out.masks = torch::stack(masks, 1);
    out.natural = torch::stack(naturals, 1);
    out.slots = torch::stack(slot_list, 1);
    return out;
  }

  std::vector<torch::Tensor> dvae_parameters() const { return dvae->parameters(); }

  /// Everything trained in stage 2 (all but the dVAE).
  std::vector<torch::Tensor> ocl_parameters() const {
    std::vector<torch::Tensor> out;
    for (const auto& p : named_parameters()) {
      if (p.key().rfind("dvae.", 0) != 0) out.push_back(p.value());
    }
    return out;
  }

  Dvae dvae{nullptr};
  GroupedCodebook codebook{nullptr};
  RandomQueryInit random_query{nullptr};
  ConditionQueryInit condition_query{nullptr};
  ExtraEncoder extra_encoder{nullptr};
  torch::Tensor slot_position;
  SlotAttention slot_attention{nullptr};
  SlotPredictor predictor{nullptr};
  TokenDecoder decoder{nullptr};

 private:
  ModelVariant variant_;
  GlobalConfig config_;
};
TORCH_MODULE(OclModel);

/// Builds a model after checking the variant against the data it will see.
inline OclModel build_model(const ModelVariant& variant, const GlobalConfig& config, const DatasetInfo* data = nullptr) {
  if (data != nullptr) {
    if (is_video(variant.architecture) && !data->video) {
      throw ConfigError("build_model: " + to_string(variant.architecture) + " needs video data");
    }
    if (!is_video(variant.architecture) && data->video) {
      throw ConfigError("build_model: " + to_string(variant.architecture) + " needs image data");
    }
    if (variant.query_mode == QueryMode::kCondition && !data->has_boxes) {
      throw ConfigError("build_model: condition query needs bounding boxes in the data");
    }
    if (data->resolution != config.input_resolution) {
      throw ConfigError("build_model: data resolution " + std::to_string(data->resolution) +
                        " != input_resolution " + std::to_string(config.input_resolution));
    }
  }
  torch::manual_seed(config.seed);
  return OclModel(variant, config);
}

}  // namespace gdr
