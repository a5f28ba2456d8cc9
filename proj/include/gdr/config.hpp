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

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gdr/errors.hpp"
#include "gdr/layout.hpp"

namespace gdr {

enum class Architecture { kSlate, kSlatePlus, kSteve, kStevePlus };
enum class QueryMode { kRandom, kCondition };

inline std::string to_string(Architecture a) {
  switch (a) {
    case Architecture::kSlate: return "SLATE";
    case Architecture::kSlatePlus: return "SLATE_PLUS";
    case Architecture::kSteve: return "STEVE";
    case Architecture::kStevePlus: return "STEVE_PLUS";
  }
  return "?";
}

inline Architecture parse_architecture(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  std::replace(s.begin(), s.end(), '+', '_');
  if (s == "SLATE") return Architecture::kSlate;
  if (s == "SLATE_PLUS" || s == "SLATE_") return Architecture::kSlatePlus;
  if (s == "STEVE") return Architecture::kSteve;
  if (s == "STEVE_PLUS" || s == "STEVE_") return Architecture::kStevePlus;
  throw ConfigError("unknown variant '" + s + "'");
}

inline bool is_video(Architecture a) {
  return a == Architecture::kSteve || a == Architecture::kStevePlus;
}
inline bool has_extra_encoder(Architecture a) {
  return a == Architecture::kSlatePlus || a == Architecture::kStevePlus;
}

inline std::string to_string(QueryMode q) { return q == QueryMode::kRandom ? "random" : "condition"; }

inline QueryMode parse_query_mode(const std::string& s) {
  if (s == "random") return QueryMode::kRandom;
  if (s == "condition") return QueryMode::kCondition;
  throw ConfigError("unknown query mode '" + s + "'");
}

/// Every knob of the laboratory. Defaults are the paper-scale values except
/// where a desk-scale default is noted.
struct GlobalConfig {
  // data
  int input_resolution = 64;  // 128 at paper scale
  int video_window = 6;
  bool single_object = false;

  // codebook
  std::int64_t num_code = 4096;
  GroupLayout layout = GroupLayout({4096});
  int dim_multiplier = 8;
  bool use_codebook_layernorm = true;
  bool use_utilization_loss = true;
  double utilization_weight = 0.001;

  // model
  std::int64_t channel_dim = 256;
  int num_slots = 5;
  Architecture variant = Architecture::kSlate;
  QueryMode query_mode = QueryMode::kRandom;
  int dvae_hidden = 64;
  int extra_encoder_hidden = 64;
  int slot_mlp_hidden = 0;  // 0 -> 2c
  int num_iter = 0;         // 0 -> 3 (random) / 1 (condition)
  int decoder_blocks = 4;
  int decoder_heads = 4;
  int decoder_ffn_multiplier = 4;
  int predictor_blocks = 1;
  int predictor_heads = 4;

  // learning
  double scale_factor = 0.1;
  std::uint64_t seed = 0;
  int stage1_image_batch = 64;
  int stage1_video_batch = 16;
  int image_batch = 32;
  int video_batch = 8;
  double stage1_lr = 2e-3;
  double stage2_lr = 2e-4;
  double grad_clip = 1.0;
  int val_batches = 0;  // 0 -> whole validation split
  double test_tau = 0.1;

  int token_resolution() const { return input_resolution / 4; }

  int effective_num_iter() const {
    if (num_iter > 0) return num_iter;
    return query_mode == QueryMode::kRandom ? 3 : 1;
  }
  int effective_slot_mlp_hidden() const {
    return slot_mlp_hidden > 0 ? slot_mlp_hidden : static_cast<int>(2 * channel_dim);
  }

  void validate() const {
    auto positive = [](auto v, const char* name) {
      if (v <= 0) throw ConfigError(std::string("config: ") + name + " must be positive");
    };
    positive(input_resolution, "input_resolution");
    positive(num_code, "num_code");
    positive(channel_dim, "channel_dim");
    positive(num_slots, "num_slots");
    positive(dim_multiplier, "dim_multiplier");
    positive(scale_factor, "scale_factor");
    positive(image_batch, "image_batch");
    positive(stage1_image_batch, "stage1_image_batch");
    positive(stage1_video_batch, "stage1_video_batch");
    positive(video_batch, "video_batch");
    if (input_resolution % 4 != 0) throw ConfigError("config: input_resolution must be divisible by 4");
    if (dim_multiplier != 1 && dim_multiplier != 2 && dim_multiplier != 4 && dim_multiplier != 8) {
      throw ConfigError("config: dim_multiplier must be one of 1, 2, 4, 8");
    }
    if (layout.n() != num_code) {
      throw ConfigError("config: layout " + layout.to_string() + " does not multiply to num_code " +
                        std::to_string(num_code));
    }
    layout.sub_dim(channel_dim, layout.is_baseline() ? 1 : dim_multiplier);
    if (channel_dim % decoder_heads != 0) throw ConfigError("config: channel_dim % decoder_heads != 0");
    if (channel_dim % predictor_heads != 0) throw ConfigError("config: channel_dim % predictor_heads != 0");
  }

  /// Applies one dotted key; unknown keys are a configuration error.
  void set(const std::string& key, const std::string& value);

  /// All addressable keys with their current values, sorted by key.
  std::map<std::string, std::string> to_map() const;

  /// Reads a flat `key = value` file. `#` starts a comment.
  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open " + path);
    load_stream(in, path);
  }

  void load_stream(std::istream& in, const std::string& origin = "<stream>") {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
      };
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
      }
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }

  std::string to_text() const {
    std::ostringstream os;
    for (const auto& [k, v] : to_map()) os << k << " = " << v << "\n";
    return os.str();
  }
};

namespace detail {

inline bool parse_flag(const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw ConfigError("config: bad flag value '" + v + "'");
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  std::istringstream is(v);
  T out{};
  is >> out;
  if (!is || !is.eof()) throw ConfigError("config: bad value '" + v + "' for " + key);
  return out;
}

template <typename T>
std::string format_number(T v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct ConfigKey {
  std::function<void(GlobalConfig&, const std::string&)> set;
  std::function<std::string(const GlobalConfig&)> get;
};

template <typename T>
ConfigKey number_key(const std::string& key, T GlobalConfig::*field) {
  return {[key, field](GlobalConfig& c, const std::string& v) { c.*field = parse_number<T>(key, v); },
          [field](const GlobalConfig& c) { return format_number(c.*field); }};
}

inline ConfigKey flag_key(bool GlobalConfig::*field) {
  return {[field](GlobalConfig& c, const std::string& v) { c.*field = parse_flag(v); },
          [field](const GlobalConfig& c) { return std::string(c.*field ? "true" : "false"); }};
}

inline const std::map<std::string, ConfigKey>& config_keys() {
  static const std::map<std::string, ConfigKey> keys = [] {
    std::map<std::string, ConfigKey> k;
    k["data.input_resolution"] = number_key("data.input_resolution", &GlobalConfig::input_resolution);
    k["data.video_window"] = number_key("data.video_window", &GlobalConfig::video_window);
    k["data.single_object"] = flag_key(&GlobalConfig::single_object);
    k["codebook.num_code"] = number_key("codebook.num_code", &GlobalConfig::num_code);
    k["codebook.groups"] = {
        [](GlobalConfig& c, const std::string& v) { c.layout = GroupLayout::parse(v, c.num_code); },
        [](const GlobalConfig& c) { return c.layout.to_string(); }};
    k["codebook.dim_multiplier"] = number_key("codebook.dim_multiplier", &GlobalConfig::dim_multiplier);
    k["codebook.layernorm"] = flag_key(&GlobalConfig::use_codebook_layernorm);
    k["codebook.utilization_loss"] = flag_key(&GlobalConfig::use_utilization_loss);
    k["codebook.utilization_weight"] =
        number_key("codebook.utilization_weight", &GlobalConfig::utilization_weight);
    k["model.channel_dim"] = number_key("model.channel_dim", &GlobalConfig::channel_dim);
    k["model.num_slots"] = number_key("model.num_slots", &GlobalConfig::num_slots);
    k["model.variant"] = {
        [](GlobalConfig& c, const std::string& v) { c.variant = parse_architecture(v); },
        [](const GlobalConfig& c) { return to_string(c.variant); }};
    k["model.query_mode"] = {
        [](GlobalConfig& c, const std::string& v) { c.query_mode = parse_query_mode(v); },
        [](const GlobalConfig& c) { return to_string(c.query_mode); }};
    k["dvae.hidden"] = number_key("dvae.hidden", &GlobalConfig::dvae_hidden);
    k["extra_encoder.hidden"] = number_key("extra_encoder.hidden", &GlobalConfig::extra_encoder_hidden);
    k["slot.mlp_hidden"] = number_key("slot.mlp_hidden", &GlobalConfig::slot_mlp_hidden);
    k["slot.num_iter"] = number_key("slot.num_iter", &GlobalConfig::num_iter);
    k["decoder.blocks"] = number_key("decoder.blocks", &GlobalConfig::decoder_blocks);
    k["decoder.heads"] = number_key("decoder.heads", &GlobalConfig::decoder_heads);
    k["decoder.ffn_multiplier"] = number_key("decoder.ffn_multiplier", &GlobalConfig::decoder_ffn_multiplier);
    k["predictor.blocks"] = number_key("predictor.blocks", &GlobalConfig::predictor_blocks);
    k["predictor.heads"] = number_key("predictor.heads", &GlobalConfig::predictor_heads);
    k["train.scale_factor"] = number_key("train.scale_factor", &GlobalConfig::scale_factor);
    k["train.seed"] = number_key("train.seed", &GlobalConfig::seed);
    k["train.stage1_image_batch"] = number_key("train.stage1_image_batch", &GlobalConfig::stage1_image_batch);
    k["train.stage1_video_batch"] = number_key("train.stage1_video_batch", &GlobalConfig::stage1_video_batch);
    k["train.image_batch"] = number_key("train.image_batch", &GlobalConfig::image_batch);
    k["train.video_batch"] = number_key("train.video_batch", &GlobalConfig::video_batch);
    k["train.stage1_lr"] = number_key("train.stage1_lr", &GlobalConfig::stage1_lr);
    k["train.stage2_lr"] = number_key("train.stage2_lr", &GlobalConfig::stage2_lr);
    k["train.grad_clip"] = number_key("train.grad_clip", &GlobalConfig::grad_clip);
    k["train.val_batches"] = number_key("train.val_batches", &GlobalConfig::val_batches);
    k["train.test_tau"] = number_key("train.test_tau", &GlobalConfig::test_tau);
    return k;
  }();
  return keys;
}

}  // namespace detail

inline void GlobalConfig::set(const std::string& key, const std::string& value) {
  const auto& keys = detail::config_keys();
  auto it = keys.find(key);
  if (it == keys.end()) throw ConfigError("config: unknown key '" + key + "'");
  it->second.set(*this, value);
}

inline std::map<std::string, std::string> GlobalConfig::to_map() const {
  std::map<std::string, std::string> out;
  for (const auto& [k, entry] : detail::config_keys()) out[k] = entry.get(*this);
  return out;
}

}  // namespace gdr
