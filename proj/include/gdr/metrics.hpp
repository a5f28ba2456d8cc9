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
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gdr/errors.hpp"

namespace gdr {

/// H x W integer labels in row-major order.
struct LabelMap {
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::vector<std::int64_t> labels;

  LabelMap() = default;
  LabelMap(std::int64_t h, std::int64_t w, std::vector<std::int64_t> l) : height(h), width(w), labels(std::move(l)) {
    if (static_cast<std::int64_t>(labels.size()) != h * w) throw ShapeError("LabelMap: size != H*W");
  }
  LabelMap(std::int64_t h, std::int64_t w, std::int64_t fill) : LabelMap(h, w, std::vector<std::int64_t>(static_cast<std::size_t>(h * w), fill)) {}

  std::int64_t& at(std::int64_t y, std::int64_t x) { return labels[static_cast<std::size_t>(y * width + x)]; }
  std::int64_t at(std::int64_t y, std::int64_t x) const { return labels[static_cast<std::size_t>(y * width + x)]; }
  std::size_t size() const noexcept { return labels.size(); }
};

inline constexpr std::int64_t kBackgroundId = 0;

namespace detail {

inline void require_same_shape(const LabelMap& a, const LabelMap& b, const char* who) {
  if (a.height != b.height || a.width != b.width || a.labels.size() != b.labels.size()) {
    throw ShapeError(std::string(who) + ": label maps differ in shape");
  }
}

inline double comb2(std::int64_t n) { return 0.5 * static_cast<double>(n) * static_cast<double>(n - 1); }

/// Adjusted Rand index of two labelings of the same elements, from the
/// contingency table.
inline double adjusted_rand(std::span<const std::int64_t> a, std::span<const std::int64_t> b) {
  const auto n = static_cast<std::int64_t>(a.size());
  std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> table;
  std::map<std::int64_t, std::int64_t> rows;
  std::map<std::int64_t, std::int64_t> cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++table[{a[i], b[i]}];
    ++rows[a[i]];
    ++cols[b[i]];
  }
  // identical trivial partitions: all in one cluster, empty, or all singletons
  if ((rows.size() == 1 && cols.size() == 1) || (rows.empty() && cols.empty()) ||
      (static_cast<std::int64_t>(rows.size()) == n && static_cast<std::int64_t>(cols.size()) == n)) {
    return 1.0;
  }
  double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [k, v] : table) index += comb2(v);
  for (const auto& [k, v] : rows) sum_rows += comb2(v);
  for (const auto& [k, v] : cols) sum_cols += comb2(v);
  const double expected = sum_rows * sum_cols / comb2(n);
  const double max_index = 0.5 * (sum_rows + sum_cols);
  return (index - expected) / (max_index - expected);
}

}  // namespace detail

/// Adjusted Rand index over all pixels, in [-0.5, 1].
inline double ari(const LabelMap& pred, const LabelMap& gt) {
  detail::require_same_shape(pred, gt, "ari");
  return detail::adjusted_rand(pred.labels, gt.labels);
}

/// ARI restricted to pixels whose ground truth is not background; nullopt
/// when there is no foreground.
inline std::optional<double> ari_fg(const LabelMap& pred, const LabelMap& gt,
                                    std::int64_t background_id = kBackgroundId) {
  detail::require_same_shape(pred, gt, "ari_fg");
  std::vector<std::int64_t> p, g;
  for (std::size_t i = 0; i < gt.labels.size(); ++i) {
    if (gt.labels[i] == background_id) continue;
    p.push_back(pred.labels[i]);
    g.push_back(gt.labels[i]);
  }
  if (g.empty()) return std::nullopt;
  return detail::adjusted_rand(p, g);
}

/// IoU between the single ground-truth foreground object and the predicted
/// segment overlapping it most (lowest label on ties).
inline double iou_fg(const LabelMap& pred, const LabelMap& gt, std::int64_t background_id = kBackgroundId) {
  detail::require_same_shape(pred, gt, "iou_fg");
  std::set<std::int64_t> objects;
  for (auto v : gt.labels) {
    if (v != background_id) objects.insert(v);
  }
  if (objects.size() != 1) {
    throw ContractError("iou_fg: ground truth must contain exactly one foreground object (found " +
                        std::to_string(objects.size()) + "); use ari_fg");
  }
  std::map<std::int64_t, std::int64_t> overlap;
  std::map<std::int64_t, std::int64_t> area;
  std::int64_t fg_area = 0;
  for (std::size_t i = 0; i < gt.labels.size(); ++i) {
    ++area[pred.labels[i]];
    if (gt.labels[i] != background_id) {
      ++fg_area;
      ++overlap[pred.labels[i]];
    }
  }
  std::int64_t best_label = 0, best = -1;
  for (const auto& [label, count] : overlap) {
    if (count > best) {
      best = count;
      best_label = label;
    }
  }
  const auto inter = best;
  const auto uni = area[best_label] + fg_area - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

/// ARI + ARI_fg (multi-object) or ARI + IoU (single-object), in percent.
/// nullopt when a component is undefined.
inline std::optional<double> combined(const LabelMap& pred, const LabelMap& gt, bool single_object) {
  const double a = ari(pred, gt);
  if (single_object) return 100.0 * a + 100.0 * iou_fg(pred, gt);
  const auto fg = ari_fg(pred, gt);
  if (!fg) return std::nullopt;
  return 100.0 * a + 100.0 * *fg;
}

/// Mean over defined values; nullopt if none are defined.
inline std::optional<double> mean_defined(std::span<const std::optional<double>> values) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

inline std::string format_metric(const std::optional<double>& v) {
  if (!v) return "NA";
  return std::to_string(*v);
}

}  // namespace gdr
