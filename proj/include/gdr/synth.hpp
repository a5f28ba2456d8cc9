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
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gdr/errors.hpp"

namespace gdr {

using Rgb = std::array<std::uint8_t, 3>;

enum class ShapeId : int { kTriangle, kSquare, kCircle, kDiamond, kCross, kHexagon };
enum class TextureId : int { kFlat, kStripes, kDots };
enum class BackgroundStyle : int { kPlain, kStripes, kChecker, kDots };

inline std::string to_string(ShapeId s) {
  static const char* names[] = {"triangle", "square", "circle", "diamond", "cross", "hexagon"};
  return names[static_cast<int>(s)];
}

struct AttributeVocabulary {
  std::vector<Rgb> colors;
  std::vector<std::string> color_names;
  std::vector<ShapeId> shapes;
  std::vector<TextureId> textures;  // empty: untextured objects
  /// Optional sampling weights per color / shape (empty = uniform).
  std::vector<double> color_weights;
  std::vector<double> shape_weights;

  std::size_t num_attributes() const { return textures.empty() ? 2 : 3; }

  void validate() const {
    if (colors.size() < 2 || shapes.size() < 2) throw ConfigError("vocabulary: need >= 2 colors and shapes");
    if (color_names.size() != colors.size()) throw ConfigError("vocabulary: color names mismatch");
    if (!textures.empty() && textures.size() < 2) throw ConfigError("vocabulary: need >= 2 textures");
  }

  /// Black/white x triangle/square/circle.
  static AttributeVocabulary fig1() {
    AttributeVocabulary v;
    v.colors = {Rgb{0, 0, 0}, Rgb{255, 255, 255}};
    v.color_names = {"black", "white"};
    v.shapes = {ShapeId::kTriangle, ShapeId::kSquare, ShapeId::kCircle};
    return v;
  }

  /// 6 colors x 6 shapes.
  static AttributeVocabulary desk() {
    AttributeVocabulary v;
    v.colors = {Rgb{230, 40, 40}, Rgb{40, 200, 60}, Rgb{50, 80, 230}, Rgb{240, 220, 40}, Rgb{220, 50, 220}, Rgb{40, 220, 230}};
    v.color_names = {"red", "green", "blue", "yellow", "magenta", "cyan"};
    v.shapes = {ShapeId::kTriangle, ShapeId::kSquare, ShapeId::kCircle, ShapeId::kDiamond, ShapeId::kCross, ShapeId::kHexagon};
    return v;
  }
};

/// Per-object attribute tuple: (color, shape[, texture]) indexes into the
/// vocabulary.
struct ObjectLabel {
  int color = 0;
  int shape = 0;
  int texture = -1;

  std::vector<int> attributes() const {
    if (texture < 0) return {color, shape};
    return {color, shape, texture};
  }
  friend bool operator==(const ObjectLabel&, const ObjectLabel&) = default;
};

/// One synthetic sample. Images are frames == 1.
///   image: [T, H, W, 3] uint8; mask: [T, H, W] uint8 (0 = background,
///   k = k-th object); boxes: [T, num_objects, 4] float (x0, y0, x1, y1)
///   normalized by the frame size (all zero when the object is not visible).
struct SceneRecord {
  int frames = 1;
  int height = 0;
  int width = 0;
  int num_objects = 0;
  std::vector<std::uint8_t> image;
  std::vector<std::uint8_t> mask;
  std::vector<float> boxes;
  std::vector<ObjectLabel> labels;

  bool is_video() const noexcept { return frames > 1; }
  std::size_t frame_pixels() const noexcept { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }
  friend bool operator==(const SceneRecord&, const SceneRecord&) = default;
};

struct SceneOptions {
  int resolution = 64;
  double min_scale = 0.15;  // object diameter as a fraction of the frame side
  double max_scale = 0.30;
  std::vector<BackgroundStyle> backgrounds = {BackgroundStyle::kPlain, BackgroundStyle::kStripes};
  int max_retries = 200;
  double max_speed = 1.5;  // pixels per frame, video only
};

namespace detail {

struct Placed {
  double cx, cy, r;
  double vx = 0.0, vy = 0.0;
  ObjectLabel label;
};

inline bool inside_shape(ShapeId s, double dx, double dy, double r) {
  constexpr double kSqrt3 = 1.7320508075688772;
  const double ax = std::abs(dx), ay = std::abs(dy);
  switch (s) {
    case ShapeId::kCircle: return dx * dx + dy * dy <= r * r;
    case ShapeId::kSquare: return ax <= 0.85 * r && ay <= 0.85 * r;
    case ShapeId::kDiamond: return ax + ay <= r;
    case ShapeId::kCross: return (ax <= r / 3.0 && ay <= r) || (ay <= r / 3.0 && ax <= r);
    case ShapeId::kHexagon: return ax <= r && ay <= r * kSqrt3 / 2.0 && kSqrt3 * ax + ay <= kSqrt3 * r;
    case ShapeId::kTriangle: {
      // apex up at (0, -r), base at y = 0.8r from -r to r
      if (dy < -r || dy > 0.8 * r) return false;
      const double half_width = r * (dy + r) / (1.8 * r);
      return ax <= half_width;
    }
  }
  return false;
}

inline double texture_gain(TextureId t, int x, int y) {
  switch (t) {
    case TextureId::kFlat: return 1.0;
    case TextureId::kStripes: return ((x + y) / 2) % 2 == 0 ? 1.0 : 0.6;
    case TextureId::kDots: return (x % 3 == 0 && y % 3 == 0) ? 0.5 : 1.0;
  }
  return 1.0;
}

struct Background {
  std::array<double, 3> c0, c1;
  double dir_x, dir_y;
  BackgroundStyle style;
  double phase;
};

template <typename Rng>
Background sample_background(const SceneOptions& opt, Rng& rng) {
  std::uniform_real_distribution<double> tone(60.0, 160.0);
  std::uniform_real_distribution<double> jitter(-25.0, 25.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * 3.141592653589793);
  Background bg;
  const double base0 = tone(rng), base1 = tone(rng);
  for (int k = 0; k < 3; ++k) {
    bg.c0[static_cast<std::size_t>(k)] = std::clamp(base0 + jitter(rng), 0.0, 255.0);
    bg.c1[static_cast<std::size_t>(k)] = std::clamp(base1 + jitter(rng), 0.0, 255.0);
  }
  const double a = angle(rng);
  bg.dir_x = std::cos(a);
  bg.dir_y = std::sin(a);
  std::uniform_int_distribution<std::size_t> pick(0, opt.backgrounds.size() - 1);
  bg.style = opt.backgrounds[pick(rng)];
  bg.phase = angle(rng);
  return bg;
}

inline Rgb background_pixel(const Background& bg, int x, int y, int res) {
  const double u = ((x + 0.5) / res - 0.5) * bg.dir_x + ((y + 0.5) / res - 0.5) * bg.dir_y;  // [-0.71, 0.71]
  const double t = std::clamp(u / 1.42 + 0.5, 0.0, 1.0);
  double mod = 0.0;
  switch (bg.style) {
    case BackgroundStyle::kPlain: break;
    case BackgroundStyle::kStripes: mod = 18.0 * std::sin(2.0 * 3.141592653589793 * (x + y) / 12.0 + bg.phase); break;
    case BackgroundStyle::kChecker: mod = ((x / 8 + y / 8) % 2 == 0) ? 16.0 : -16.0; break;
    case BackgroundStyle::kDots: mod = (x % 6 < 2 && y % 6 < 2) ? -22.0 : 0.0; break;
  }
  Rgb out;
  for (std::size_t k = 0; k < 3; ++k) {
    out[k] = static_cast<std::uint8_t>(std::lround(std::clamp(bg.c0[k] * (1.0 - t) + bg.c1[k] * t + mod, 0.0, 255.0)));
  }
  return out;
}

template <typename Rng>
int sample_index(const std::vector<double>& weights, std::size_t count, Rng& rng) {
  if (weights.empty()) {
    std::uniform_int_distribution<int> d(0, static_cast<int>(count) - 1);
    return d(rng);
  }
  std::discrete_distribution<int> d(weights.begin(), weights.end());
  return d(rng);
}

template <typename Rng>
std::vector<Placed> place_objects(const AttributeVocabulary& vocab, int num_objects, const SceneOptions& opt, Rng& rng) {
  const double res = opt.resolution;
  std::uniform_real_distribution<double> scale(opt.min_scale, opt.max_scale);
  std::vector<Placed> placed;
  for (int i = 0; i < num_objects; ++i) {
    Placed p{};
    bool ok = false;
    for (int attempt = 0; attempt < opt.max_retries && !ok; ++attempt) {
      p.r = 0.5 * scale(rng) * res;
      std::uniform_real_distribution<double> pos(p.r + 1.0, res - p.r - 1.0);
      p.cx = pos(rng);
      p.cy = pos(rng);
      ok = std::all_of(placed.begin(), placed.end(), [&](const Placed& q) {
        return std::abs(p.cx - q.cx) > p.r + q.r + 2.0 || std::abs(p.cy - q.cy) > p.r + q.r + 2.0;
      });
    }
    if (!ok) {
      throw GenerationError("generate_scene: could not place object " + std::to_string(i + 1) + " of " +
                            std::to_string(num_objects) + " without overlap");
    }
    p.label.color = sample_index(vocab.color_weights, vocab.colors.size(), rng);
    p.label.shape = sample_index(vocab.shape_weights, vocab.shapes.size(), rng);
    if (!vocab.textures.empty()) {
      std::uniform_int_distribution<int> t(0, static_cast<int>(vocab.textures.size()) - 1);
      p.label.texture = t(rng);
    }
    placed.push_back(p);
  }
  return placed;
}

inline void render_frame(const AttributeVocabulary& vocab, const std::vector<Placed>& objects, const Background& bg,
                         int res, SceneRecord& rec, int frame) {
  const std::size_t base = static_cast<std::size_t>(frame) * rec.frame_pixels();
  for (int y = 0; y < res; ++y) {
    for (int x = 0; x < res; ++x) {
      const auto px = background_pixel(bg, x, y, res);
      const std::size_t i = base + static_cast<std::size_t>(y * res + x);
      std::copy(px.begin(), px.end(), rec.image.begin() + static_cast<std::ptrdiff_t>(3 * i));
      rec.mask[i] = 0;
    }
  }
  for (std::size_t k = 0; k < objects.size(); ++k) {
    const auto& o = objects[k];
    const auto shape = vocab.shapes[static_cast<std::size_t>(o.label.shape)];
    const auto& color = vocab.colors[static_cast<std::size_t>(o.label.color)];
    const int x0 = std::max(0, static_cast<int>(std::floor(o.cx - o.r - 1)));
    const int x1 = std::min(res - 1, static_cast<int>(std::ceil(o.cx + o.r + 1)));
    const int y0 = std::max(0, static_cast<int>(std::floor(o.cy - o.r - 1)));
    const int y1 = std::min(res - 1, static_cast<int>(std::ceil(o.cy + o.r + 1)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        if (!inside_shape(shape, x + 0.5 - o.cx, y + 0.5 - o.cy, o.r)) continue;
        const std::size_t i = base + static_cast<std::size_t>(y * res + x);
        const double gain = o.label.texture < 0 ? 1.0 : texture_gain(vocab.textures[static_cast<std::size_t>(o.label.texture)], x, y);
        for (std::size_t c = 0; c < 3; ++c) rec.image[3 * i + c] = static_cast<std::uint8_t>(std::lround(color[c] * gain));
        rec.mask[i] = static_cast<std::uint8_t>(k + 1);
      }
    }
  }
  // tight boxes from the visible mask
  for (int k = 0; k < rec.num_objects; ++k) {
    int bx0 = res, by0 = res, bx1 = -1, by1 = -1;
    for (int y = 0; y < res; ++y) {
      for (int x = 0; x < res; ++x) {
        if (rec.mask[base + static_cast<std::size_t>(y * res + x)] != k + 1) continue;
        bx0 = std::min(bx0, x);
        by0 = std::min(by0, y);
        bx1 = std::max(bx1, x);
        by1 = std::max(by1, y);
      }
    }
    float* box = rec.boxes.data() + (static_cast<std::size_t>(frame) * static_cast<std::size_t>(rec.num_objects) + static_cast<std::size_t>(k)) * 4;
    if (bx1 < 0) {
      std::fill(box, box + 4, 0.0f);
      continue;
    }
    const float r = static_cast<float>(res);
    box[0] = static_cast<float>(bx0) / r;
    box[1] = static_cast<float>(by0) / r;
    box[2] = static_cast<float>(bx1 + 1) / r;
    box[3] = static_cast<float>(by1 + 1) / r;
  }
}

inline SceneRecord empty_record(int frames, int res, int num_objects) {
  SceneRecord rec;
  rec.frames = frames;
  rec.height = res;
  rec.width = res;
  rec.num_objects = num_objects;
  rec.image.assign(static_cast<std::size_t>(frames) * res * res * 3, 0);
  rec.mask.assign(static_cast<std::size_t>(frames) * res * res, 0);
  rec.boxes.assign(static_cast<std::size_t>(frames) * static_cast<std::size_t>(num_objects) * 4, 0.0f);
  return rec;
}

}  // namespace detail

/// Renders `num_objects` non-overlapping objects on a procedural background.
template <typename Rng>
SceneRecord generate_scene(const AttributeVocabulary& vocab, int num_objects, const SceneOptions& opt, Rng& rng) {
  vocab.validate();
  if (num_objects < 0 || num_objects > 254) throw GenerationError("generate_scene: bad object count");
  const auto bg = detail::sample_background(opt, rng);
  const auto objects = detail::place_objects(vocab, num_objects, opt, rng);
  auto rec = detail::empty_record(1, opt.resolution, num_objects);
  for (const auto& o : objects) rec.labels.push_back(o.label);
  detail::render_frame(vocab, objects, bg, opt.resolution, rec, 0);
  return rec;
}

/// Objects drift linearly and reflect off the frame border; attributes are
/// fixed over time. Objects may occlude each other after frame 0 (later
/// objects are drawn on top).
template <typename Rng>
SceneRecord generate_video(const AttributeVocabulary& vocab, int num_objects, int frames, const SceneOptions& opt, Rng& rng) {
  vocab.validate();
  if (frames < 6) throw GenerationError("generate_video: need at least 6 frames");
  if (num_objects < 0 || num_objects > 254) throw GenerationError("generate_video: bad object count");
  const auto bg = detail::sample_background(opt, rng);
  auto objects = detail::place_objects(vocab, num_objects, opt, rng);
  std::uniform_real_distribution<double> vel(-opt.max_speed, opt.max_speed);
  for (auto& o : objects) {
    o.vx = opt.max_speed > 0 ? vel(rng) : 0.0;
    o.vy = opt.max_speed > 0 ? vel(rng) : 0.0;
  }
  const double res = opt.resolution;
  auto rec = detail::empty_record(frames, opt.resolution, num_objects);
  for (const auto& o : objects) rec.labels.push_back(o.label);
  for (int t = 0; t < frames; ++t) {
    detail::render_frame(vocab, objects, bg, opt.resolution, rec, t);
    for (auto& o : objects) {
      o.cx += o.vx;
      o.cy += o.vy;
      if (o.cx - o.r < 0.0 || o.cx + o.r > res) {
        o.vx = -o.vx;
        o.cx = std::clamp(o.cx, o.r, res - o.r);
      }
      if (o.cy - o.r < 0.0 || o.cy + o.r > res) {
        o.vy = -o.vy;
        o.cy = std::clamp(o.cy, o.r, res - o.r);
      }
    }
  }
  return rec;
}

/// A model-ready sample.
///   pixels [T, 3, H, W] in [-1, 1]; mask [T, H, W] int64;
///   boxes [T, K, 4] padded with all-zero sentinel boxes.
struct Sample {
  torch::Tensor pixels;
  torch::Tensor mask;
  torch::Tensor boxes;
};

inline constexpr int kTimeWindow = 6;

/// Normalizes pixels with (v - 127.5) / 127.5, pads boxes to K, and for
/// training on video takes a random time crop of `window` frames applied to
/// pixels, mask and boxes alike.
template <typename Rng>
Sample preprocess(const SceneRecord& rec, bool training, int num_slots, Rng& rng, int window = kTimeWindow) {
  if (rec.num_objects > num_slots) throw ValidationError("preprocess: more objects than slots");
  int t0 = 0, frames = rec.frames;
  if (rec.is_video()) {
    if (rec.frames < window) throw ValidationError("preprocess: video shorter than the time window");
    if (training) {
      std::uniform_int_distribution<int> start(0, rec.frames - window);
      t0 = start(rng);
      frames = window;
    }
  }
  const auto h = rec.height, w = rec.width;
  const auto image = torch::from_blob(const_cast<std::uint8_t*>(rec.image.data()), {rec.frames, h, w, 3}, torch::kUInt8);
  const auto mask = torch::from_blob(const_cast<std::uint8_t*>(rec.mask.data()), {rec.frames, h, w}, torch::kUInt8);
  Sample s;
  s.pixels = (image.narrow(0, t0, frames).permute({0, 3, 1, 2}).to(torch::kFloat32) - 127.5) / 127.5;
  s.mask = mask.narrow(0, t0, frames).to(torch::kInt64);
  s.boxes = torch::zeros({frames, num_slots, 4}, torch::kFloat32);
  if (rec.num_objects > 0) {
    const auto boxes = torch::from_blob(const_cast<float*>(rec.boxes.data()), {rec.frames, rec.num_objects, 4}, torch::kFloat32);
    s.boxes.narrow(1, 0, rec.num_objects).copy_(boxes.narrow(0, t0, frames));
  }
  return s;
}

}  // namespace gdr
