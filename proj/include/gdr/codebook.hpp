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
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "gdr/errors.hpp"
#include "gdr/gumbel.hpp"
#include "gdr/layout.hpp"
#include "gdr/tensor_io.hpp"

namespace gdr {

struct CodebookOptions {
  GroupLayout layout;
  std::int64_t channel_dim = 256;
  int multiplier = 8;
  bool layernorm = true;
  /// Adds the linear projection even without expansion (m == 1 or g == 1).
  bool force_projection = false;
};

/// Codebook turning hard tuple indexes into c-dimensional features.
///
/// Baseline mode (single group, no forced projection): an n x c table.
/// Grouped mode: g sub-codebooks of a_i x d template attributes with
/// d = m*c/g; the picked attributes are concatenated to m*c channels, then
/// layer-normalized (optional) and projected back to c when m > 1.
class GroupedCodebookImpl : public torch::nn::Module {
 public:
  explicit GroupedCodebookImpl(CodebookOptions options) : options_(std::move(options)) {
    const auto& layout = options_.layout;
    const auto c = options_.channel_dim;
    if (baseline_mode()) {
      table = register_parameter("table", torch::randn({layout.n(), c}));
      return;
    }
    const int m = layout.is_baseline() ? 1 : options_.multiplier;
    sub_dim_ = layout.sub_dim(c, m);
    wide_dim_ = sub_dim_ * layout.g();
    for (int i = 0; i < layout.g(); ++i) {
      sub_codebooks.push_back(register_parameter(
          "sub" + std::to_string(i), torch::randn({layout.size(static_cast<std::size_t>(i)), sub_dim_})));
    }
    if (m > 1 || options_.force_projection) {
      if (options_.layernorm) {
        norm = register_module("norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({wide_dim_})));
      }
      projection = register_module("projection", torch::nn::Linear(wide_dim_, c));
    }
  }

  const CodebookOptions& options() const noexcept { return options_; }
  const GroupLayout& layout() const noexcept { return options_.layout; }
  bool baseline_mode() const noexcept {
    return options_.layout.is_baseline() && !options_.force_projection;
  }
  bool has_projection() const noexcept { return !projection.is_empty(); }
  std::int64_t sub_dim() const noexcept { return baseline_mode() ? options_.channel_dim : sub_dim_; }
  std::int64_t wide_dim() const noexcept { return baseline_mode() ? options_.channel_dim : wide_dim_; }

  /// [B, g, H, W] -> [B, H, W, m*c] concatenated attributes before norm and
  /// projection (the table rows in baseline mode).
  torch::Tensor concatenated(const torch::Tensor& hard_tuple) const {
    check_tuples(hard_tuple);
    const auto b = hard_tuple.size(0), h = hard_tuple.size(2), w = hard_tuple.size(3);
    if (baseline_mode()) {
      return table.index_select(0, hard_tuple.select(1, 0).reshape({-1})).view({b, h, w, -1});
    }
    std::vector<torch::Tensor> parts;
    parts.reserve(sub_codebooks.size());
    for (std::size_t i = 0; i < sub_codebooks.size(); ++i) {
      const auto idx = hard_tuple.select(1, static_cast<std::int64_t>(i)).reshape({-1});
      parts.push_back(sub_codebooks[i].index_select(0, idx).view({b, h, w, sub_dim_}));
    }
    return parts.size() == 1 ? parts[0] : torch::cat(parts, -1);
  }

  /// [B, g, H, W] -> [B, H, W, c].
  torch::Tensor forward(const torch::Tensor& hard_tuple) {
    auto x = concatenated(hard_tuple);
    if (!norm.is_empty()) x = norm(x);
    if (!projection.is_empty()) x = projection(x);
    return x;
  }

  torch::Tensor lookup(const TokenGrid& tokens) {
    if (!(tokens.layout == layout())) {
      throw ShapeError("lookup: token layout " + tokens.layout.to_string() + " != codebook layout " +
                       layout().to_string());
    }
    return forward(tokens.hard_tuple);
  }

  /// Projection := identity (requires m*c == c) with zero bias.
  void set_identity_projection() {
    if (projection.is_empty() || wide_dim_ != options_.channel_dim) {
      throw ConfigError("set_identity_projection: needs a square projection");
    }
    torch::NoGradGuard ng;
    projection->weight.copy_(torch::eye(options_.channel_dim));
    projection->bias.zero_();
  }

  torch::Tensor table;
  std::vector<torch::Tensor> sub_codebooks;
  torch::nn::LayerNorm norm{nullptr};
  torch::nn::Linear projection{nullptr};

 private:
  void check_tuples(const torch::Tensor& hard_tuple) const {
    if (hard_tuple.dim() != 4 || hard_tuple.size(1) != layout().g()) {
      throw ShapeError("codebook: expected tuples [B, " + std::to_string(layout().g()) + ", H, W]");
    }
  }

  CodebookOptions options_;
  std::int64_t sub_dim_ = 0;
  std::int64_t wide_dim_ = 0;
};
TORCH_MODULE(GroupedCodebook);

/// Negative summed entropy of the per-group mean usage:
///   l_u = -sum_i H(mean_{h,w} p_i)
/// computed on soft probabilities [B, sum(a_i), H, W] (per sample, then
/// averaged over the batch). Range [-sum_i ln a_i, 0].
inline torch::Tensor utilization_loss(const torch::Tensor& soft, const GroupLayout& layout,
                                      double eps = 1e-10) {
  if (soft.dim() != 4 || soft.size(1) != layout.total_channels()) {
    throw ShapeError("utilization_loss: soft must be [B, " + std::to_string(layout.total_channels()) +
                     ", H, W]");
  }
  const auto usage = soft.mean({2, 3});  // [B, sum a]
  auto loss = torch::zeros({soft.size(0)}, soft.options());
  for (int i = 0; i < layout.g(); ++i) {
    const auto p = usage.narrow(1, layout.channel_offset(static_cast<std::size_t>(i)),
                                layout.size(static_cast<std::size_t>(i)));
    const auto entropy = -(p * torch::log(p.clamp_min(eps))).sum(1);
    loss = loss - entropy;
  }
  return loss.mean();
}

inline torch::Tensor utilization_loss(const TokenGrid& tokens, double eps = 1e-10) {
  return utilization_loss(tokens.soft, tokens.layout, eps);
}

/// Running code-usage counts over a stream of token grids.
class UtilizationHistogram {
 public:
  explicit UtilizationHistogram(GroupLayout layout)
      : layout_(std::move(layout)), natural_(static_cast<std::size_t>(layout_.n()), 0) {
    for (auto a : layout_.sizes()) groups_.emplace_back(static_cast<std::size_t>(a), 0);
  }

  void observe(const TokenGrid& tokens) { observe_tuples(tokens.hard_tuple); }

  void observe_tuples(const torch::Tensor& hard_tuple) {
    if (hard_tuple.dim() != 4 || hard_tuple.size(1) != layout_.g()) {
      throw ShapeError("UtilizationHistogram: expected [B, g, H, W]");
    }
    const auto t = hard_tuple.permute({0, 2, 3, 1}).reshape({-1, layout_.g()}).contiguous().to(torch::kInt64);
    const auto* p = t.data_ptr<std::int64_t>();
    const auto rows = t.size(0);
    std::vector<std::int64_t> tuple(static_cast<std::size_t>(layout_.g()));
    for (std::int64_t r = 0; r < rows; ++r) {
      for (int i = 0; i < layout_.g(); ++i) tuple[static_cast<std::size_t>(i)] = p[r * layout_.g() + i];
      const auto nat = layout_.tuple_to_natural(tuple);
      ++natural_[static_cast<std::size_t>(nat)];
      for (int i = 0; i < layout_.g(); ++i) ++groups_[static_cast<std::size_t>(i)][static_cast<std::size_t>(tuple[static_cast<std::size_t>(i)])];
    }
    total_ += rows;
  }

  std::int64_t total() const noexcept { return total_; }
  const GroupLayout& layout() const noexcept { return layout_; }
  const std::vector<std::int64_t>& natural_counts() const noexcept { return natural_; }
  const std::vector<std::int64_t>& group_counts(std::size_t i) const { return groups_.at(i); }

  std::vector<double> group_frequencies(std::size_t i) const { return normalize(groups_.at(i)); }
  std::vector<double> natural_frequencies() const { return normalize(natural_); }

  std::int64_t never_used_natural() const {
    require_data();
    return std::count(natural_.begin(), natural_.end(), 0);
  }
  std::int64_t never_used_in_group(std::size_t i) const {
    require_data();
    return std::count(groups_.at(i).begin(), groups_.at(i).end(), 0);
  }

  /// CSV with header `index,count,frequency` over natural indexes, or over
  /// group `group` when given.
  void write_csv(std::ostream& os, std::optional<std::size_t> group = std::nullopt) const {
    const auto& counts = group ? groups_.at(*group) : natural_;
    const auto freq = normalize(counts);
    os << "index,count,frequency\n";
    for (std::size_t k = 0; k < counts.size(); ++k) os << k << "," << counts[k] << "," << freq[k] << "\n";
  }

 private:
  void require_data() const {
    if (total_ == 0) throw EmptyInputError("UtilizationHistogram: no tokens observed");
  }
  std::vector<double> normalize(const std::vector<std::int64_t>& counts) const {
    require_data();
    std::vector<double> f(counts.size());
    for (std::size_t k = 0; k < counts.size(); ++k) {
      f[k] = static_cast<double>(counts[k]) / static_cast<double>(total_);
    }
    return f;
  }

  GroupLayout layout_;
  std::vector<std::vector<std::int64_t>> groups_;
  std::vector<std::int64_t> natural_;
  std::int64_t total_ = 0;
};

/// Histogram over a non-empty stream of grids.
inline UtilizationHistogram utilization_histogram(const std::vector<TokenGrid>& stream,
                                                  const GroupLayout& layout) {
  if (stream.empty()) throw EmptyInputError("utilization_histogram: empty stream");
  UtilizationHistogram h(layout);
  for (const auto& g : stream) h.observe(g);
  return h;
}

namespace detail {
inline constexpr char kCodebookMagic[8] = {'G', 'D', 'R', 'C', 'O', 'D', 'E', '\0'};
inline constexpr std::uint32_t kCodebookVersion = 1;
}  // namespace detail

/// Versioned codebook blob:
///   magic "GDRCODE\0", u32 version, u32 g, i64 sizes[g], u32 m, i64 c,
///   u8 layernorm, u8 force_projection, named float32 tensors.
inline std::vector<char> serialize_codebook(const GroupedCodebook& cb) {
  io::ByteWriter w;
  w.put_bytes(detail::kCodebookMagic, 8);
  w.put<std::uint32_t>(detail::kCodebookVersion);
  const auto& o = cb->options();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(o.layout.g()));
  for (auto a : o.layout.sizes()) w.put<std::int64_t>(a);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(o.multiplier));
  w.put<std::int64_t>(o.channel_dim);
  w.put<std::uint8_t>(o.layernorm ? 1 : 0);
  w.put<std::uint8_t>(o.force_projection ? 1 : 0);
  io::write_tensors(w, io::module_state(*cb));
  return std::move(w.bytes());
}

inline GroupedCodebook deserialize_codebook(const std::vector<char>& bytes) {
  io::ByteReader r(bytes);
  char magic[8];
  r.get_bytes(magic, 8);
  if (std::memcmp(magic, detail::kCodebookMagic, 8) != 0) throw IoError("codebook blob: bad magic");
  const auto version = r.get<std::uint32_t>();
  if (version != detail::kCodebookVersion) {
    throw IoError("codebook blob: unsupported version " + std::to_string(version));
  }
  const auto g = r.get<std::uint32_t>();
  std::vector<std::int64_t> sizes(g);
  for (auto& a : sizes) a = r.get<std::int64_t>();
  CodebookOptions o;
  o.layout = GroupLayout(sizes);
  o.multiplier = static_cast<int>(r.get<std::uint32_t>());
  o.channel_dim = r.get<std::int64_t>();
  o.layernorm = r.get<std::uint8_t>() != 0;
  o.force_projection = r.get<std::uint8_t>() != 0;
  GroupedCodebook cb(o);
  io::load_module_state(*cb, io::read_tensors(r));
  return cb;
}

}  // namespace gdr
