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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gdr/errors.hpp"
#include "gdr/gumbel.hpp"
#include "gdr/layout.hpp"
#include "gdr/pipeline.hpp"
#include "gdr/store.hpp"
#include "gdr/synth.hpp"

namespace gdr {

// ---------------------------------------------------------------------------
// index maps

/// HSV (h, 1, 1) to 8-bit RGB. Hue in [0, 1).
inline Rgb hue_to_rgb(double hue) {
  const double h6 = (hue - std::floor(hue)) * 6.0;
  const int sector = static_cast<int>(h6) % 6;
  const double f = h6 - std::floor(h6);
  double r = 0, g = 0, b = 0;
  switch (sector) {
    case 0: r = 1; g = f; b = 0; break;
    case 1: r = 1 - f; g = 1; b = 0; break;
    case 2: r = 0; g = 1; b = f; break;
    case 3: r = 0; g = 1 - f; b = 1; break;
    case 4: r = f; g = 0; b = 1; break;
    default: r = 1; g = 0; b = 1 - f; break;
  }
  auto q = [](double v) { return static_cast<std::uint8_t>(std::lround(v * 255.0)); };
  return {q(r), q(g), q(b)};
}

struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;  // row-major RGB
  Rgb at(int y, int x) const {
    const auto i = 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x));
    return {data[i], data[i + 1], data[i + 2]};
  }
};

struct IndexVisualization {
  std::vector<RgbImage> images;  // one per group
  GroupLayout layout;
};

/// Group i, index v -> hue v / a_i. Uses the first sample of the batch.
inline IndexVisualization hsv_index_map(const TokenGrid& tokens, const GroupLayout& layout, std::int64_t sample = 0) {
  if (!tokens.hard_tuple.defined() || tokens.hard_tuple.dim() != 4 || tokens.hard_tuple.size(1) != layout.g()) {
    throw ShapeError("hsv_index_map: expected hard tuples [B, g, H, W]");
  }
  const auto hard = tokens.hard_tuple[sample].to(torch::kInt64).contiguous();
  const auto h = static_cast<int>(hard.size(1)), w = static_cast<int>(hard.size(2));
  IndexVisualization vis{{}, layout};
  const auto* p = hard.data_ptr<std::int64_t>();
  for (int i = 0; i < layout.g(); ++i) {
    RgbImage img{h, w, std::vector<std::uint8_t>(static_cast<std::size_t>(3 * h * w))};
    const double a = static_cast<double>(layout.size(static_cast<std::size_t>(i)));
    for (int k = 0; k < h * w; ++k) {
      const auto c = hue_to_rgb(static_cast<double>(p[i * h * w + k]) / a);
      img.data[3 * k] = c[0];
      img.data[3 * k + 1] = c[1];
      img.data[3 * k + 2] = c[2];
    }
    vis.images.push_back(std::move(img));
  }
  return vis;
}

/// Nearest-neighbour enlargement, for viewing token-resolution maps.
inline RgbImage upscale(const RgbImage& img, int factor) {
  RgbImage out{img.height * factor, img.width * factor, {}};
  out.data.resize(static_cast<std::size_t>(3 * out.height * out.width));
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const auto c = img.at(y / factor, x / factor);
      const auto i = static_cast<std::size_t>(3 * (y * out.width + x));
      out.data[i] = c[0];
      out.data[i + 1] = c[1];
      out.data[i + 2] = c[2];
    }
  }
  return out;
}

/// [3, H, W] float in [-1, 1] -> 8-bit RGB.
inline RgbImage tensor_to_image(const torch::Tensor& chw) {
  const auto t = ((chw.detach().to(torch::kFloat32) * 127.5 + 127.5).round().clamp(0, 255)).to(torch::kUInt8)
                     .permute({1, 2, 0}).contiguous();
  RgbImage img{static_cast<int>(t.size(0)), static_cast<int>(t.size(1)), {}};
  img.data.assign(t.data_ptr<std::uint8_t>(), t.data_ptr<std::uint8_t>() + t.numel());
  return img;
}

/// Uncompressed 24-bit BMP.
inline void write_bmp(const std::string& path, const RgbImage& img) {
  const int row = (3 * img.width + 3) & ~3;
  const std::uint32_t data_size = static_cast<std::uint32_t>(row * img.height);
  std::vector<std::uint8_t> buf(54 + data_size, 0);
  auto put32 = [&](std::size_t off, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf[off + i] = static_cast<std::uint8_t>(v >> (8 * i));
  };
  buf[0] = 'B';
  buf[1] = 'M';
  put32(2, static_cast<std::uint32_t>(buf.size()));
  put32(10, 54);
  put32(14, 40);
  put32(18, static_cast<std::uint32_t>(img.width));
  put32(22, static_cast<std::uint32_t>(img.height));
  buf[26] = 1;
  buf[28] = 24;
  put32(34, data_size);
  for (int y = 0; y < img.height; ++y) {
    auto* dst = buf.data() + 54 + static_cast<std::size_t>(row) * static_cast<std::size_t>(img.height - 1 - y);
    for (int x = 0; x < img.width; ++x) {
      const auto c = img.at(y, x);
      dst[3 * x] = c[2];
      dst[3 * x + 1] = c[1];
      dst[3 * x + 2] = c[0];
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

// ---------------------------------------------------------------------------
// attribute swap

/// Replaces element `group_index` of every hard tuple inside `region`
/// ([B, H, W] bool) by `new_value`.
inline torch::Tensor swap_tuples(const torch::Tensor& hard_tuple, const torch::Tensor& region, const GroupLayout& layout,
                                 int group_index, std::int64_t new_value) {
  if (group_index < 0 || group_index >= layout.g()) throw IndexError("attribute_swap: group index out of range");
  if (new_value < 0 || new_value >= layout.size(static_cast<std::size_t>(group_index))) {
    throw IndexError("attribute_swap: value out of range for group " + std::to_string(group_index));
  }
  if (region.dim() != 3 || region.size(0) != hard_tuple.size(0) || region.size(1) != hard_tuple.size(2) ||
      region.size(2) != hard_tuple.size(3)) {
    throw ShapeError("attribute_swap: region must be [B, H, W] over the token grid");
  }
  auto out = hard_tuple.clone();
  auto plane = out.select(1, group_index);
  plane.masked_fill_(region.to(torch::kBool), new_value);
  return out;
}

/// Decoded image [B, 3, R, R] of the swapped token grid.
inline torch::Tensor attribute_swap(const TokenGrid& tokens, const torch::Tensor& region, int group_index,
                                    std::int64_t new_value, Dvae& dvae) {
  torch::NoGradGuard ng;
  const auto swapped = swap_tuples(tokens.hard_tuple, region, tokens.layout, group_index, new_value);
  return dvae->decode(grid_from_tuples(swapped, tokens.layout).soft);
}

// ---------------------------------------------------------------------------
// curves

/// Gaussian smoothing with half-sample symmetric boundary extension and a
/// kernel truncated at 4 standard deviations.
inline std::vector<double> smooth_curve(std::span<const double> values, double sigma) {
  if (values.empty()) throw EmptyInputError("smooth_curve: empty input");
  if (!(sigma > 0.0)) throw DomainError("smooth_curve: sigma must be positive");
  const auto radius = static_cast<std::int64_t>(4.0 * sigma + 0.5);
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double mass = 0.0;
  for (std::int64_t k = -radius; k <= radius; ++k) {
    const double v = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
    kernel[static_cast<std::size_t>(k + radius)] = v;
    mass += v;
  }
  for (auto& v : kernel) v /= mass;
  const auto n = static_cast<std::int64_t>(values.size());
  auto reflect = [n](std::int64_t i) {
    const std::int64_t period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
  };
  std::vector<double> out(values.size());
  for (std::int64_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::int64_t k = -radius; k <= radius; ++k) {
      acc += kernel[static_cast<std::size_t>(k + radius)] * values[static_cast<std::size_t>(reflect(i + k))];
    }
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

// ---------------------------------------------------------------------------
// attribute alignment

/// Plug-in normalized mutual information, arithmetic-mean normalization.
/// nullopt when `labels` has fewer than two classes.
inline std::optional<double> normalized_mutual_information(std::span<const std::int64_t> codes,
                                                           std::span<const std::int64_t> labels) {
  if (codes.size() != labels.size()) throw ShapeError("nmi: length mismatch");
  std::map<std::int64_t, double> pc, pl;
  std::map<std::pair<std::int64_t, std::int64_t>, double> joint;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    pc[codes[i]] += 1;
    pl[labels[i]] += 1;
    joint[{codes[i], labels[i]}] += 1;
  }
  if (pl.size() < 2) return std::nullopt;
  const double n = static_cast<double>(codes.size());
  auto entropy = [n](const std::map<std::int64_t, double>& m) {
    double h = 0.0;
    for (const auto& [k, c] : m) h -= (c / n) * std::log(c / n);
    return h;
  };
  const double hc = entropy(pc), hl = entropy(pl);
  if (hc == 0.0) return 0.0;
  double mi = 0.0;
  for (const auto& [key, c] : joint) {
    mi += (c / n) * std::log(c * n / (pc[key.first] * pl[key.second]));
  }
  return std::clamp(mi / (0.5 * (hc + hl)), 0.0, 1.0);
}

/// One labelled object: modal token index per group over its region.
struct ObjectCodes {
  std::vector<std::int64_t> modal;       // size g
  std::vector<int> attributes;           // color, shape[, texture]
};

/// Collects modal per-group indexes for every object of an image dataset.
/// A token belongs to an object when the pixel at the centre of its cell
/// carries the object's mask id. Objects covering no token are skipped.
inline std::vector<ObjectCodes> collect_object_codes(OclModel& model, const Dataset& data, std::size_t limit = 0) {
  torch::NoGradGuard ng;
  const auto& layout = model->layout();
  const auto& cfg = model->config();
  std::vector<ObjectCodes> out;
  const std::size_t n = limit ? std::min(limit, data.size()) : data.size();
  std::mt19937_64 rng(0);
  for (std::size_t s = 0; s < n; s += 16) {
    std::vector<torch::Tensor> px;
    std::vector<std::size_t> ids;
    for (std::size_t i = s; i < std::min(n, s + 16); ++i) {
      px.push_back(preprocess(data.records[i], false, std::max(cfg.num_slots, data.records[i].num_objects), rng, cfg.video_window).pixels[0]);
      ids.push_back(i);
    }
    const auto tokens = model->discretize(torch::stack(px), nullptr);
    const auto hard = tokens.hard_tuple.to(torch::kInt64).contiguous();
    const auto th = hard.size(2), tw = hard.size(3);
    for (std::size_t j = 0; j < ids.size(); ++j) {
      const auto& rec = data.records[ids[j]];
      const auto cell_h = rec.height / th, cell_w = rec.width / tw;
      for (int k = 0; k < rec.num_objects; ++k) {
        std::vector<std::map<std::int64_t, std::int64_t>> counts(static_cast<std::size_t>(layout.g()));
        bool any = false;
        for (std::int64_t y = 0; y < th; ++y) {
          for (std::int64_t x = 0; x < tw; ++x) {
            const auto py = y * cell_h + cell_h / 2, pxl = x * cell_w + cell_w / 2;
            if (rec.mask[static_cast<std::size_t>(py * rec.width + pxl)] != k + 1) continue;
            any = true;
            for (int i = 0; i < layout.g(); ++i) {
              ++counts[static_cast<std::size_t>(i)][hard[static_cast<std::int64_t>(j)][i][y][x].item<std::int64_t>()];
            }
          }
        }
        if (!any) continue;
        ObjectCodes oc;
        for (const auto& c : counts) {
          oc.modal.push_back(std::max_element(c.begin(), c.end(), [](const auto& a, const auto& b) {
                               return a.second < b.second || (a.second == b.second && a.first > b.first);
                             })->first);
        }
        oc.attributes = rec.labels.at(static_cast<std::size_t>(k)).attributes();
        out.push_back(std::move(oc));
      }
    }
  }
  return out;
}

struct GroupAlignment {
  int group = 0;
  std::vector<std::optional<double>> nmi_per_attribute;
  int best_attribute = -1;
  std::optional<double> best_nmi;
  double control_mean = 0.0;  // best NMI with shuffled labels
  double control_std = 0.0;
  /// (best - control mean) in units of the control standard deviation.
  std::optional<double> margin() const {
    if (!best_nmi || control_std <= 0.0) return std::nullopt;
    return (*best_nmi - control_mean) / control_std;
  }
};

/// Per-group NMI between modal indexes and each attribute, best attribute,
/// and a permutation control (labels shuffled across objects).
inline std::vector<GroupAlignment> attribute_alignment(const std::vector<ObjectCodes>& objects, const GroupLayout& layout,
                                                       int shuffles = 100, std::uint64_t seed = 0) {
  if (objects.empty()) throw EmptyInputError("attribute_alignment: no objects");
  const auto num_attr = objects.front().attributes.size();
  std::vector<std::vector<std::int64_t>> labels(num_attr);
  for (const auto& o : objects) {
    for (std::size_t a = 0; a < num_attr; ++a) labels[a].push_back(o.attributes.at(a));
  }
  auto best_of = [&](const std::vector<std::int64_t>& codes, const std::vector<std::vector<std::int64_t>>& labs,
                     std::vector<std::optional<double>>* per, int* arg) {
    std::optional<double> best;
    for (std::size_t a = 0; a < labs.size(); ++a) {
      const auto v = normalized_mutual_information(codes, labs[a]);
      if (per) per->push_back(v);
      if (v && (!best || *v > *best)) {
        best = v;
        if (arg) *arg = static_cast<int>(a);
      }
    }
    return best;
  };
  std::vector<GroupAlignment> result;
  std::mt19937_64 rng(seed);
  for (int i = 0; i < layout.g(); ++i) {
    GroupAlignment ga;
    ga.group = i;
    std::vector<std::int64_t> codes;
    for (const auto& o : objects) codes.push_back(o.modal.at(static_cast<std::size_t>(i)));
    ga.best_nmi = best_of(codes, labels, &ga.nmi_per_attribute, &ga.best_attribute);
    std::vector<double> control;
    auto shuffled = labels;
    for (int s = 0; s < shuffles; ++s) {
      std::vector<std::size_t> perm(objects.size());
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      std::shuffle(perm.begin(), perm.end(), rng);
      for (std::size_t a = 0; a < num_attr; ++a) {
        for (std::size_t k = 0; k < perm.size(); ++k) shuffled[a][k] = labels[a][perm[k]];
      }
      if (auto v = best_of(codes, shuffled, nullptr, nullptr)) control.push_back(*v);
    }
    if (!control.empty()) {
      double m = 0.0, sq = 0.0;
      for (auto v : control) m += v;
      m /= static_cast<double>(control.size());
      for (auto v : control) sq += (v - m) * (v - m);
      ga.control_mean = m;
      ga.control_std = control.size() > 1 ? std::sqrt(sq / static_cast<double>(control.size() - 1)) : 0.0;
    }
    result.push_back(std::move(ga));
  }
  return result;
}

}  // namespace gdr
