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
#include <cstdint>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "gdr/errors.hpp"

namespace gdr {

/// Attribute-group decomposition of a codebook of `n` codes into `g` groups
/// with sizes a_1..a_g, where prod(a_i) == n. A single group [n] is the
/// non-grouped baseline.
///
/// Tuple indexes are flattened to natural indexes in mixed radix with the
/// first group as the least-significant digit:
///   natural = t_1 + t_2*a_1 + t_3*a_1*a_2 + ...
/// which is exactly t_1*a^0 + t_2*a^1 + ... when all sizes are equal.
class GroupLayout {
 public:
  GroupLayout() : GroupLayout(std::vector<std::int64_t>{4096}) {}

  explicit GroupLayout(std::vector<std::int64_t> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.empty()) throw ConfigError("GroupLayout: at least one group required");
    n_ = 1;
    for (auto a : sizes_) {
      if (a < 1) throw ConfigError("GroupLayout: group sizes must be positive");
      n_ *= a;
    }
    std::int64_t stride = 1;
    strides_.reserve(sizes_.size());
    for (auto a : sizes_) {
      strides_.push_back(stride);
      stride *= a;
    }
  }

  /// The standard decompositions of a 4096-code vocabulary, plus uniform
  /// decompositions a^g = n for other vocabulary sizes.
  static GroupLayout for_groups(int g, std::int64_t n = 4096) {
    if (n == 4096) {
      switch (g) {
        case 1: return GroupLayout({4096});
        case 2: return GroupLayout({64, 64});
        case 4: return GroupLayout({8, 8, 8, 8});
        case 8: return GroupLayout({2, 2, 2, 2, 4, 4, 4, 4});
        default: break;
      }
    }
    if (g < 1) throw ConfigError("GroupLayout: g must be >= 1");
    // uniform a^g = n
    for (std::int64_t a = 1; a <= n; ++a) {
      std::int64_t p = 1;
      for (int i = 0; i < g && p <= n; ++i) p *= a;
      if (p == n) return GroupLayout(std::vector<std::int64_t>(static_cast<std::size_t>(g), a));
      if (p > n) break;
    }
    throw ConfigError("GroupLayout: no decomposition of " + std::to_string(n) + " into " +
                      std::to_string(g) + " groups");
  }

  const std::vector<std::int64_t>& sizes() const noexcept { return sizes_; }
  std::int64_t size(std::size_t group) const { return sizes_.at(group); }
  int g() const noexcept { return static_cast<int>(sizes_.size()); }
  std::int64_t n() const noexcept { return n_; }
  bool is_baseline() const noexcept { return sizes_.size() == 1; }
  bool is_uniform() const noexcept {
    return std::all_of(sizes_.begin(), sizes_.end(), [&](auto a) { return a == sizes_[0]; });
  }

  /// Sum of group sizes: the channel count of logits and soft samples.
  std::int64_t total_channels() const noexcept {
    return std::accumulate(sizes_.begin(), sizes_.end(), std::int64_t{0});
  }

  /// Channel offset of each group's slice within the concatenated logits.
  std::int64_t channel_offset(std::size_t group) const {
    return std::accumulate(sizes_.begin(), sizes_.begin() + static_cast<std::ptrdiff_t>(group),
                           std::int64_t{0});
  }

  /// Mixed-radix place value of group `i`.
  std::int64_t stride(std::size_t group) const { return strides_.at(group); }

  /// Sub-code dimension d = m*c/g.
  std::int64_t sub_dim(std::int64_t channel_dim, std::int64_t multiplier) const {
    const std::int64_t total = channel_dim * multiplier;
    if (total % g() != 0) {
      throw ConfigError("GroupLayout: m*c = " + std::to_string(total) + " not divisible by g = " +
                        std::to_string(g()));
    }
    return total / g();
  }

  std::int64_t tuple_to_natural(std::span<const std::int64_t> tuple) const {
    if (tuple.size() != sizes_.size()) {
      throw ShapeError("tuple_to_natural: tuple length " + std::to_string(tuple.size()) +
                       " != g = " + std::to_string(g()));
    }
    std::int64_t x = 0;
    for (std::size_t i = 0; i < sizes_.size(); ++i) {
      if (tuple[i] < 0 || tuple[i] >= sizes_[i]) {
        throw IndexError("tuple_to_natural: element " + std::to_string(i) + " = " +
                         std::to_string(tuple[i]) + " outside [0, " + std::to_string(sizes_[i]) +
                         ")");
      }
      x += tuple[i] * strides_[i];
    }
    return x;
  }

  std::vector<std::int64_t> natural_to_tuple(std::int64_t index) const {
    if (index < 0 || index >= n_) {
      throw IndexError("natural_to_tuple: index " + std::to_string(index) + " outside [0, " +
                       std::to_string(n_) + ")");
    }
    std::vector<std::int64_t> t(sizes_.size());
    for (std::size_t i = 0; i < sizes_.size(); ++i) {
      t[i] = index % sizes_[i];
      index /= sizes_[i];
    }
    return t;
  }

  std::string to_string() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < sizes_.size(); ++i) os << (i ? "," : "") << sizes_[i];
    return os.str();
  }

  /// Parses "64,64" or a single group count "g4"/"4".
  static GroupLayout parse(const std::string& text, std::int64_t n = 4096) {
    if (text.find(',') == std::string::npos) {
      std::string s = text;
      if (!s.empty() && (s[0] == 'g' || s[0] == 'G')) s = s.substr(1);
      try {
        const int g = std::stoi(s);
        if (std::to_string(g) != s) throw std::invalid_argument(s);
        if (text[0] != 'g' && text[0] != 'G' && g == n) return GroupLayout({n});
        return for_groups(g, n);
      } catch (const std::logic_error&) {
        throw ConfigError("GroupLayout: cannot parse '" + text + "'");
      }
    }
    std::vector<std::int64_t> sizes;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        sizes.push_back(std::stoll(tok));
      } catch (const std::logic_error&) {
        throw ConfigError("GroupLayout: cannot parse '" + text + "'");
      }
    }
    return GroupLayout(std::move(sizes));
  }

  friend bool operator==(const GroupLayout& a, const GroupLayout& b) { return a.sizes_ == b.sizes_; }

 private:
  std::vector<std::int64_t> sizes_;
  std::vector<std::int64_t> strides_;
  std::int64_t n_ = 1;
};

}  // namespace gdr
