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
#include <cmath>
#include <numbers>
#include <string>

#include "gdr/config.hpp"
#include "gdr/errors.hpp"

namespace gdr {

/// Cosine interpolation from `start` (step 0) to `end` (step == total).
inline double cosine_anneal(double start, double end, long step, long total) {
  if (total <= 0) throw RangeError("cosine_anneal: total must be positive");
  if (step < 0 || step > total) {
    throw RangeError("cosine_anneal: step " + std::to_string(step) + " outside [0, " +
                     std::to_string(total) + "]");
  }
  const double t = static_cast<double>(step) / static_cast<double>(total);
  return end + (start - end) * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

/// Linear warmup 0 -> base_lr over [0, warmup], then cosine decay to 0 at
/// `total`.
inline double lr_at(long step, double base_lr, long warmup, long total) {
  if (warmup < 0 || total <= warmup) throw RangeError("lr_at: need total > warmup >= 0");
  if (step < 0 || step > total) {
    throw RangeError("lr_at: step " + std::to_string(step) + " outside [0, " +
                     std::to_string(total) + "]");
  }
  if (step < warmup) return base_lr * static_cast<double>(step) / static_cast<double>(warmup);
  return cosine_anneal(base_lr, 0.0, step - warmup, total - warmup);
}

struct ScheduleSpec {
  enum class Kind { kCosine, kCosineWithLinearWarmup, kConstant };

  double start = 0.0;
  double end = 0.0;
  long total_steps = 1;
  long warmup_steps = 0;
  Kind kind = Kind::kConstant;

  static ScheduleSpec cosine(double start, double end, long total) {
    return {start, end, total, 0, Kind::kCosine};
  }
  static ScheduleSpec warmup_cosine(double peak, long warmup, long total) {
    return {peak, 0.0, total, warmup, Kind::kCosineWithLinearWarmup};
  }
  static ScheduleSpec constant(double v, long total) { return {v, v, total, 0, Kind::kConstant}; }

  double at(long step) const {
    switch (kind) {
      case Kind::kConstant:
        if (step < 0 || step > total_steps) throw RangeError("schedule: step out of range");
        return start;
      case Kind::kCosine: return cosine_anneal(start, end, step, total_steps);
      case Kind::kCosineWithLinearWarmup: return lr_at(step, start, warmup_steps, total_steps);
    }
    return start;
  }
};

enum class Stage { kDvaePretrain, kOclTrain };

inline Stage parse_stage(const std::string& s) {
  if (s == "dvae_pretrain" || s == "pretrain") return Stage::kDvaePretrain;
  if (s == "ocl_train" || s == "train") return Stage::kOclTrain;
  throw ConfigError("unknown stage '" + s + "'");
}

struct ScheduleSuite {
  ScheduleSpec tau;
  ScheduleSpec lr;
  ScheduleSpec sigma;
  long total_steps = 0;
  long val_interval = 0;
};

namespace detail {
inline long scaled(long steps, double factor) {
  const long s = std::lround(static_cast<double>(steps) * factor);
  return s < 1 ? 1 : s;
}
}  // namespace detail

/// Schedules of one training stage. Paper-scale totals (25000 / 50000
/// iterations, warmups 1250 / 2500, validation every 500 / 1000) are
/// multiplied by `config.scale_factor`.
inline ScheduleSuite schedule_suite(Stage stage, const GlobalConfig& config) {
  const double f = config.scale_factor;
  ScheduleSuite s;
  if (stage == Stage::kDvaePretrain) {
    s.total_steps = detail::scaled(25000, f);
    s.val_interval = detail::scaled(500, f);
    const long warmup = std::min(detail::scaled(1250, f), s.total_steps - 1);
    s.tau = ScheduleSpec::cosine(1.0, 0.1, s.total_steps);
    s.lr = ScheduleSpec::warmup_cosine(config.stage1_lr, warmup, s.total_steps);
    s.sigma = ScheduleSpec::constant(0.0, s.total_steps);
  } else {
    s.total_steps = detail::scaled(50000, f);
    s.val_interval = detail::scaled(1000, f);
    const long warmup = std::min(detail::scaled(2500, f), s.total_steps - 1);
    s.tau = ScheduleSpec::constant(config.test_tau, s.total_steps);
    s.lr = ScheduleSpec::warmup_cosine(config.stage2_lr, warmup, s.total_steps);
    s.sigma = config.single_object ? ScheduleSpec::constant(0.0, s.total_steps)
                                   : ScheduleSpec::cosine(1.0, 0.0, s.total_steps);
  }
  return s;
}

}  // namespace gdr
