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

#include <cstdint>

#include "gdr/config.hpp"
#include "gdr/layout.hpp"

namespace gdr {

struct ParamCount {
  std::int64_t raw_codebook = 0;
  std::int64_t projection = 0;  // linear weight + bias (+ layer-norm affine)
  std::int64_t total = 0;
  double ratio_vs_baseline = 1.0;
};

/// Codebook parameter count of `layout` against the non-grouped n x c table.
/// The grouped codebook carries the norm + projection back to c only when
/// the template dimension is expanded (m > 1).
inline ParamCount param_count(const GroupLayout& layout, std::int64_t channel_dim, int multiplier,
                              bool layernorm) {
  const std::int64_t c = channel_dim;
  const std::int64_t baseline = layout.n() * c;
  ParamCount p;
  if (layout.is_baseline()) {
    p.raw_codebook = baseline;
    p.total = baseline;
    p.ratio_vs_baseline = 1.0;
    return p;
  }
  const std::int64_t d = layout.sub_dim(c, multiplier);
  for (auto a : layout.sizes()) p.raw_codebook += a * d;
  if (multiplier > 1) {
    const std::int64_t wide = c * multiplier;
    p.projection = wide * c + c + (layernorm ? 2 * wide : 0);
  }
  p.total = p.raw_codebook + p.projection;
  p.ratio_vs_baseline = static_cast<double>(p.total) / static_cast<double>(baseline);
  return p;
}

inline ParamCount param_count(const GroupLayout& layout, const GlobalConfig& config) {
  return param_count(layout, config.channel_dim, config.dim_multiplier,
                     config.use_codebook_layernorm);
}

/// Multiply-accumulates per token under the cost model that counts inner
/// product code matching (c*n) for the baseline and projection-plus-matching
/// ((m*c*c) * a) per group for the grouped codebook.
inline std::int64_t compute_count(const GroupLayout& layout, std::int64_t channel_dim,
                                  int multiplier) {
  const std::int64_t c = channel_dim;
  if (layout.is_baseline()) return c * layout.n();
  const std::int64_t per_code = static_cast<std::int64_t>(multiplier) * c * c;
  // g * a for uniform layouts; sum of sizes generalizes to mixed radix
  std::int64_t codes = 0;
  for (auto a : layout.sizes()) codes += a;
  return per_code * codes;
}

inline std::int64_t compute_count(const GroupLayout& layout, const GlobalConfig& config) {
  return compute_count(layout, config.channel_dim, config.dim_multiplier);
}

}  // namespace gdr
