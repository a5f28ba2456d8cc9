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
#include <cstring>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gdr/codebook.hpp"
#include "gdr/config.hpp"
#include "gdr/errors.hpp"
#include "gdr/metrics.hpp"
#include "gdr/pipeline.hpp"
#include "gdr/schedules.hpp"
#include "gdr/store.hpp"
#include "gdr/synth.hpp"
#include "gdr/tensor_io.hpp"

namespace gdr {

// ---------------------------------------------------------------------------
// reports

/// Line-delimited records `{"step":..,"split":..,"metric":..,"value":..}`.
class ReportWriter {
 public:
  ReportWriter() = default;
  explicit ReportWriter(const std::string& path) : out_(std::make_shared<std::ofstream>(path)) {
    if (!*out_) throw IoError("cannot write report " + path);
  }

  void record(long step, const std::string& split, const std::string& metric, const std::optional<double>& value) {
    std::ostringstream os;
    os << std::setprecision(17) << "{\"step\":" << step << ",\"split\":\"" << split << "\",\"metric\":\"" << metric
       << "\",\"value\":";
    if (value && std::isfinite(*value)) os << *value;
    else os << "\"NA\"";
    os << "}";
    lines_.push_back(os.str());
    if (out_) *out_ << lines_.back() << "\n" << std::flush;
  }

  const std::vector<std::string>& lines() const noexcept { return lines_; }

 private:
  std::shared_ptr<std::ofstream> out_;
  std::vector<std::string> lines_;
};

struct TrainOptions {
  std::string out_dir;                 // empty: no files written
  ReportWriter* report = nullptr;
  std::function<void(const std::string&)> log;  // progress messages
  bool save_interval_checkpoints = true;
};

// ---------------------------------------------------------------------------
// batching

struct Batch {
  torch::Tensor pixels;  // [B, T, 3, R, R]
  torch::Tensor masks;   // [B, T, R, R]
  torch::Tensor boxes;   // [B, T, K, 4]
  std::vector<std::size_t> indices;
};

template <typename Rng>
Batch make_batch(const Dataset& data, const std::vector<std::size_t>& indices, bool training, int num_slots,
                 Rng& rng, int window) {
  std::vector<torch::Tensor> px, mk, bx;
  for (auto i : indices) {
    auto s = preprocess(data.records.at(i), training, num_slots, rng, window);
    px.push_back(s.pixels);
    mk.push_back(s.mask);
    bx.push_back(s.boxes);
  }
  return {torch::stack(px), torch::stack(mk), torch::stack(bx), indices};
}

/// Epoch-wise shuffled index stream.
class BatchSampler {
 public:
  BatchSampler(std::size_t dataset_size, std::size_t batch, std::uint64_t seed)
      : size_(dataset_size), batch_(batch), rng_(seed) {
    if (dataset_size == 0) throw EmptyInputError("BatchSampler: empty dataset");
  }
  std::vector<std::size_t> next() {
    std::vector<std::size_t> out;
    while (out.size() < batch_) {
      if (cursor_ == order_.size()) {
        order_.resize(size_);
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        std::shuffle(order_.begin(), order_.end(), rng_);
        cursor_ = 0;
      }
      out.push_back(order_[cursor_++]);
    }
    return out;
  }
  std::mt19937_64& rng() { return rng_; }

 private:
  std::size_t size_, batch_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

inline void set_learning_rate(torch::optim::Adam& opt, double lr) {
  for (auto& group : opt.param_groups()) static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
}

namespace detail {

inline std::vector<torch::Tensor> snapshot(const std::vector<torch::Tensor>& params) {
  std::vector<torch::Tensor> out;
  for (const auto& p : params) out.push_back(p.detach().clone());
  return out;
}

inline void restore(const std::vector<torch::Tensor>& params, const std::vector<torch::Tensor>& saved) {
  torch::NoGradGuard ng;
  for (std::size_t i = 0; i < params.size(); ++i) params[i].copy_(saved[i]);
}

inline std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// checkpoints

namespace detail {
inline constexpr char kModelMagic[8] = {'G', 'D', 'R', 'M', 'O', 'D', 'E', 'L'};
inline constexpr std::uint32_t kModelVersion = 1;
}  // namespace detail

/// Model checkpoint: magic "GDRMODEL", u32 version, config text (carries
/// variant and layout), u8 stage1_complete, u8 stage2_complete, tensors.
inline void save_model(OclModel& model, const std::string& path) {
  io::ByteWriter w;
  w.put_bytes(detail::kModelMagic, 8);
  w.put<std::uint32_t>(detail::kModelVersion);
  w.put_string(model->config().to_text());
  w.put<std::uint8_t>(model->stage1_complete ? 1 : 0);
  w.put<std::uint8_t>(model->stage2_complete ? 1 : 0);
  io::write_tensors(w, io::module_state(*model));
  io::write_file(path, w.bytes());
}

inline OclModel load_model(const std::string& path) {
  const auto bytes = io::read_file(path);
  io::ByteReader r(bytes);
  char magic[8];
  r.get_bytes(magic, 8);
  if (std::memcmp(magic, detail::kModelMagic, 8) != 0) throw IoError(path + ": not a model checkpoint");
  if (r.get<std::uint32_t>() != detail::kModelVersion) throw IoError(path + ": unsupported checkpoint version");
  GlobalConfig config;
  std::istringstream text(r.get_string());
  config.load_stream(text, path);
  OclModel model(ModelVariant::from_config(config), config);
  model->stage1_complete = r.get<std::uint8_t>() != 0;
  model->stage2_complete = r.get<std::uint8_t>() != 0;
  io::load_module_state(*model, io::read_tensors(r));
  return model;
}

// ---------------------------------------------------------------------------
// stage 1

struct CheckpointEntry {
  long step = 0;
  double value = 0.0;
  std::string path;
};

struct CurveRow {
  long step = 0;
  double loss = 0.0;
  double tau_or_sigma = 0.0;
  double lr = 0.0;
  double utilization = 0.0;  // stage 1: distinct codes in batch / n
};

struct Stage1Report {
  long total_steps = 0;
  long val_interval = 0;
  std::vector<CurveRow> curve;
  std::vector<CheckpointEntry> checkpoints;
  long best_step = 0;
  double best_val_loss = 0.0;
  double final_tau = 0.0;
  double final_val_loss = 0.0;
  std::int64_t never_used_codes = 0;  // natural codes unused on the validation split
};

/// Validation reconstruction MSE: noise-free soft samples at the test
/// temperature.
inline double validation_recon_loss(OclModel& model, const Dataset& val, std::size_t limit = 0) {
  torch::NoGradGuard ng;
  const auto& cfg = model->config();
  std::mt19937_64 rng(0);
  const std::size_t n = limit ? std::min(limit, val.size()) : val.size();
  if (n == 0) throw EmptyInputError("validation: empty split");
  double sum = 0.0;
  std::int64_t count = 0;
  const std::size_t chunk = 16;
  for (std::size_t s = 0; s < n; s += chunk) {
    std::vector<std::size_t> idx;
    for (std::size_t i = s; i < std::min(n, s + chunk); ++i) idx.push_back(i);
    auto batch = make_batch(val, idx, false, cfg.num_slots, rng, cfg.video_window);
    const auto frames = batch.pixels.flatten(0, 1);
    const auto out = model->forward_dvae(frames, cfg.test_tau, nullptr);
    sum += torch::mse_loss(out.reconstruction, frames, torch::Reduction::Sum).item<double>();
    count += frames.numel();
  }
  return sum / static_cast<double>(count);
}

/// Hard-argmax code usage over a split.
inline UtilizationHistogram code_usage(OclModel& model, const Dataset& data, std::size_t limit = 0) {
  torch::NoGradGuard ng;
  const auto& cfg = model->config();
  std::mt19937_64 rng(0);
  UtilizationHistogram hist(model->layout());
  const std::size_t n = limit ? std::min(limit, data.size()) : data.size();
  for (std::size_t s = 0; s < n; s += 16) {
    std::vector<std::size_t> idx;
    for (std::size_t i = s; i < std::min(n, s + 16); ++i) idx.push_back(i);
    auto batch = make_batch(data, idx, false, cfg.num_slots, rng, cfg.video_window);
    hist.observe(model->discretize(batch.pixels.flatten(0, 1), nullptr));
  }
  return hist;
}

/// dVAE pretraining: MSE reconstruction (+ weighted utilization loss),
/// Adam with warmup + cosine learning rate, cosine tau 1 -> 0.1, global
/// gradient-norm clipping. The checkpoint with the lowest validation loss
/// is restored at the end.
inline Stage1Report run_stage1(OclModel& model, const Dataset& train, const Dataset& val, const TrainOptions& opt = {}) {
  const auto& cfg = model->config();
  const auto suite = schedule_suite(Stage::kDvaePretrain, cfg);
  Stage1Report report;
  report.total_steps = suite.total_steps;
  report.val_interval = suite.val_interval;

  auto params = model->dvae_parameters();
  for (auto& p : params) p.set_requires_grad(true);
  torch::optim::Adam adam(params, torch::optim::AdamOptions(cfg.stage1_lr));
  const std::size_t batch = train.info.video ? static_cast<std::size_t>(cfg.stage1_video_batch)
                                             : static_cast<std::size_t>(cfg.stage1_image_batch);
  BatchSampler sampler(train.size(), batch, cfg.seed ^ 0x5157A6E1ULL);
  auto gen = make_generator(cfg.seed ^ 0x6D7B1ULL);
  const std::size_t val_limit = cfg.val_batches > 0 ? static_cast<std::size_t>(cfg.val_batches) * 16 : 0;

  std::vector<torch::Tensor> best = detail::snapshot(params);
  report.best_val_loss = std::numeric_limits<double>::infinity();
  for (long step = 0; step < suite.total_steps; ++step) {
    const double tau = suite.tau.at(step);
    const double lr = suite.lr.at(step);
    set_learning_rate(adam, lr);
    auto b = make_batch(train, sampler.next(), true, cfg.num_slots, sampler.rng(), cfg.video_window);
    const auto frames = b.pixels.flatten(0, 1);
    auto out = model->forward_dvae(frames, tau, &gen);
    const auto recon = recon_loss(out.reconstruction, frames);
    auto loss = recon;
    torch::Tensor util;
    if (cfg.use_utilization_loss) {
      util = utilization_loss(out.tokens);
      loss = loss + cfg.utilization_weight * util;
    }
    const double loss_value = loss.item<double>();
    if (!std::isfinite(loss_value)) {
      std::ostringstream diag;
      diag << "step=" << step << " tau=" << tau << " lr=" << lr << " recon=" << recon.item<double>()
           << " util=" << (util.defined() ? util.item<double>() : 0.0)
           << " logits_absmax=" << out.logits.abs().max().item<double>();
      throw DivergenceError("stage 1 diverged at step " + std::to_string(step), diag.str());
    }
    adam.zero_grad();
    loss.backward();
    torch::nn::utils::clip_grad_norm_(params, cfg.grad_clip);
    adam.step();

    const auto distinct = std::get<0>(torch::_unique(out.tokens.natural.flatten())).numel();
    report.curve.push_back({step, loss_value, tau, lr, static_cast<double>(distinct) / static_cast<double>(cfg.num_code)});
    if (opt.report) {
      opt.report->record(step, "train", "loss", loss_value);
      opt.report->record(step, "train", "tau", tau);
    }

    const bool last = step + 1 == suite.total_steps;
    if ((step + 1) % suite.val_interval == 0 || last) {
      const double v = validation_recon_loss(model, val, val_limit);
      CheckpointEntry entry{step + 1, v, ""};
      if (!opt.out_dir.empty() && opt.save_interval_checkpoints) {
        entry.path = detail::join_path(opt.out_dir, "stage1_step" + std::to_string(step + 1) + ".ckpt");
        save_model(model, entry.path);
      }
      report.checkpoints.push_back(entry);
      if (opt.report) opt.report->record(step + 1, "val", "recon_mse", v);
      if (opt.log) opt.log("stage1 step " + std::to_string(step + 1) + " val_mse " + std::to_string(v));
      if (v < report.best_val_loss) {
        report.best_val_loss = v;
        report.best_step = step + 1;
        best = detail::snapshot(params);
      }
    }
  }
  report.final_tau = suite.tau.at(suite.total_steps);
  detail::restore(params, best);
  model->stage1_complete = true;
  report.final_val_loss = report.best_val_loss;
  report.never_used_codes = code_usage(model, val, val_limit).never_used_natural();
  if (opt.report) opt.report->record(report.total_steps, "val", "never_used_codes", static_cast<double>(report.never_used_codes));
  if (!opt.out_dir.empty()) {
    save_model(model, detail::join_path(opt.out_dir, "stage1_best.ckpt"));
    std::ofstream csv(detail::join_path(opt.out_dir, "stage1_curve.csv"));
    csv << "step,loss,tau,utilization\n" << std::setprecision(10);
    for (const auto& r : report.curve) csv << r.step << "," << r.loss << "," << r.tau_or_sigma << "," << r.utilization << "\n";
  }
  return report;
}

// ---------------------------------------------------------------------------
// evaluation

struct SampleMetrics {
  std::size_t sample_id = 0;
  double ari = 0.0;
  std::optional<double> fg;  // ARI_fg or IoU
};

struct MetricRecord {
  bool single_object = false;
  std::optional<double> ari;       // mean, in [-0.5, 1]
  std::optional<double> fg;        // mean ARI_fg (multi) or IoU (single)
  std::optional<double> combined;  // percent: 100 * (ari + fg)
  std::vector<SampleMetrics> samples;

  std::string fg_name() const { return single_object ? "iou" : "ari_fg"; }
};

inline LabelMap to_label_map(const torch::Tensor& labels) {
  const auto c = labels.to(torch::kInt64).contiguous();
  const auto* p = c.data_ptr<std::int64_t>();
  return LabelMap(c.size(0), c.size(1), std::vector<std::int64_t>(p, p + c.numel()));
}

/// Per-frame metrics averaged over frames, for one sample.
inline SampleMetrics score_sample(const torch::Tensor& pred, const torch::Tensor& gt, bool single_object, std::size_t id) {
  SampleMetrics m;
  m.sample_id = id;
  double ari_sum = 0.0;
  std::vector<std::optional<double>> fgs;
  for (std::int64_t t = 0; t < pred.size(0); ++t) {
    const auto p = to_label_map(pred[t]);
    const auto g = to_label_map(gt[t]);
    ari_sum += ari(p, g);
    if (single_object) {
      bool has_fg = false;
      for (auto v : g.labels) has_fg = has_fg || v != kBackgroundId;
      fgs.push_back(has_fg ? std::optional<double>(iou_fg(p, g)) : std::nullopt);
    } else {
      fgs.push_back(ari_fg(p, g));
    }
  }
  m.ari = ari_sum / static_cast<double>(pred.size(0));
  m.fg = mean_defined(fgs);
  return m;
}

inline MetricRecord aggregate(std::vector<SampleMetrics> samples, bool single_object) {
  MetricRecord r;
  r.single_object = single_object;
  std::vector<std::optional<double>> aris, fgs;
  for (const auto& s : samples) {
    aris.push_back(s.ari);
    fgs.push_back(s.fg);
  }
  r.ari = mean_defined(aris);
  r.fg = mean_defined(fgs);
  if (r.ari && r.fg) r.combined = 100.0 * (*r.ari + *r.fg);
  r.samples = std::move(samples);
  return r;
}

/// Deterministic evaluation: argmax discretization, sigma = 0, full clips.
inline MetricRecord evaluate(OclModel& model, const Dataset& data, std::size_t limit = 0) {
  torch::NoGradGuard ng;
  const auto& cfg = model->config();
  if (data.info.num_slots > cfg.num_slots) {
    throw ValidationError("evaluate: data needs " + std::to_string(data.info.num_slots) + " slots, model has " +
                          std::to_string(cfg.num_slots));
  }
  std::mt19937_64 rng(0);
  const std::size_t n = limit ? std::min(limit, data.size()) : data.size();
  std::vector<SampleMetrics> samples;
  const std::size_t chunk = is_video(cfg.variant) ? 4 : 16;
  for (std::size_t s = 0; s < n; s += chunk) {
    std::vector<std::size_t> idx;
    for (std::size_t i = s; i < std::min(n, s + chunk); ++i) idx.push_back(i);
    auto b = make_batch(data, idx, false, cfg.num_slots, rng, cfg.video_window);
    const auto out = model->forward_ocl(b.pixels, b.boxes, 0.0, nullptr);
    for (std::size_t j = 0; j < idx.size(); ++j) {
      samples.push_back(score_sample(out.masks[static_cast<std::int64_t>(j)], b.masks[static_cast<std::int64_t>(j)],
                                     data.info.single_object, idx[j]));
    }
  }
  return aggregate(std::move(samples), data.info.single_object);
}

/// Segmentation by K-1 uniformly random axis-aligned rectangles painted over
/// a background label, scored with the same metric code.
inline MetricRecord evaluate_random_rectangles(const Dataset& data, int num_slots, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<SampleMetrics> samples;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& rec = data.records[i];
    const auto h = rec.height, w = rec.width;
    auto gt = torch::from_blob(const_cast<std::uint8_t*>(rec.mask.data()), {rec.frames, h, w}, torch::kUInt8).to(torch::kInt64);
    auto pred = torch::zeros({rec.frames, h, w}, torch::kInt64);
    for (int k = 1; k < num_slots; ++k) {
      std::uniform_int_distribution<int> xs(0, w - 1), ys(0, h - 1);
      int x0 = xs(rng), x1 = xs(rng), y0 = ys(rng), y1 = ys(rng);
      if (x0 > x1) std::swap(x0, x1);
      if (y0 > y1) std::swap(y0, y1);
      pred.narrow(1, y0, y1 - y0 + 1).narrow(2, x0, x1 - x0 + 1).fill_(k);
    }
    samples.push_back(score_sample(pred, gt, data.info.single_object, i));
  }
  return aggregate(std::move(samples), data.info.single_object);
}

struct TransferRecord {
  MetricRecord source;
  MetricRecord target;
  std::optional<double> delta;  // percentage points, target - source
};

inline TransferRecord transfer_evaluate(OclModel& model, const Dataset& source, const Dataset& target, std::size_t limit = 0) {
  TransferRecord t;
  t.source = evaluate(model, source, limit);
  t.target = evaluate(model, target, limit);
  if (t.source.combined && t.target.combined) t.delta = *t.target.combined - *t.source.combined;
  return t;
}

// ---------------------------------------------------------------------------
// stage 2

struct Stage2Report {
  long total_steps = 0;
  long val_interval = 0;
  std::vector<CurveRow> curve;
  std::vector<CheckpointEntry> checkpoints;
  long best_step = 0;
  std::optional<double> best_combined;
  double final_sigma = 0.0;
};

/// Object-centric training on the frozen dVAE: classification loss against
/// the natural code indexes, Adam with warmup + cosine, gradient clipping,
/// scheduled sigma for random queries. The checkpoint with the best
/// validation combined metric is restored at the end.
inline Stage2Report run_stage2(OclModel& model, const Dataset& train, const Dataset& val, const TrainOptions& opt = {}) {
  if (!model->stage1_complete) throw ConfigError("run_stage2: model has no stage-1 checkpoint");
  const auto& cfg = model->config();
  const auto suite = schedule_suite(Stage::kOclTrain, cfg);
  Stage2Report report;
  report.total_steps = suite.total_steps;
  report.val_interval = suite.val_interval;

  for (auto& p : model->dvae_parameters()) p.set_requires_grad(false);
  auto params = model->ocl_parameters();
  torch::optim::Adam adam(params, torch::optim::AdamOptions(cfg.stage2_lr));
  const bool video = train.info.video;
  const std::size_t batch = video ? static_cast<std::size_t>(cfg.video_batch) : static_cast<std::size_t>(cfg.image_batch);
  BatchSampler sampler(train.size(), batch, cfg.seed ^ 0xB0A7ULL);
  auto gen = make_generator(cfg.seed ^ 0x57A6E2ULL);
  const std::size_t val_limit = cfg.val_batches > 0 ? static_cast<std::size_t>(cfg.val_batches) * 16 : 0;

  std::vector<torch::Tensor> best = detail::snapshot(params);
  for (long step = 0; step < suite.total_steps; ++step) {
    const double lr = suite.lr.at(step);
    const double sigma = suite.sigma.at(step);
    set_learning_rate(adam, lr);
    auto b = make_batch(train, sampler.next(), true, cfg.num_slots, sampler.rng(), cfg.video_window);
    auto out = model->forward_ocl(b.pixels, b.boxes, sigma, &gen);
    const double loss_value = out.loss.item<double>();
    if (!std::isfinite(loss_value)) {
      std::ostringstream diag;
      diag << "step=" << step << " lr=" << lr << " sigma=" << sigma;
      throw DivergenceError("stage 2 diverged at step " + std::to_string(step), diag.str());
    }
    adam.zero_grad();
    out.loss.backward();
    torch::nn::utils::clip_grad_norm_(params, cfg.grad_clip);
    adam.step();
    report.curve.push_back({step, loss_value, sigma, lr, 0.0});
    if (opt.report) opt.report->record(step, "train", "loss", loss_value);

    const bool last = step + 1 == suite.total_steps;
    if ((step + 1) % suite.val_interval == 0 || last) {
      const auto m = evaluate(model, val, val_limit);
      CheckpointEntry entry{step + 1, m.combined.value_or(-1e300), ""};
      if (!opt.out_dir.empty() && opt.save_interval_checkpoints) {
        entry.path = detail::join_path(opt.out_dir, "stage2_step" + std::to_string(step + 1) + ".ckpt");
        save_model(model, entry.path);
      }
      report.checkpoints.push_back(entry);
      if (opt.report) {
        opt.report->record(step + 1, "val", "ari", m.ari);
        opt.report->record(step + 1, "val", m.fg_name(), m.fg);
        opt.report->record(step + 1, "val", "combined", m.combined);
      }
      if (opt.log) opt.log("stage2 step " + std::to_string(step + 1) + " loss " + std::to_string(loss_value) + " val_combined " + format_metric(m.combined));
      if (m.combined && (!report.best_combined || *m.combined > *report.best_combined)) {
        report.best_combined = m.combined;
        report.best_step = step + 1;
        best = detail::snapshot(params);
      }
    }
  }
  report.final_sigma = suite.sigma.at(suite.total_steps);
  detail::restore(params, best);
  model->stage2_complete = true;
  if (!opt.out_dir.empty()) {
    save_model(model, detail::join_path(opt.out_dir, "stage2_best.ckpt"));
    std::ofstream csv(detail::join_path(opt.out_dir, "stage2_curve.csv"));
    csv << "step,loss,sigma,lr\n" << std::setprecision(10);
    for (const auto& r : report.curve) csv << r.step << "," << r.loss << "," << r.tau_or_sigma << "," << r.lr << "\n";
  }
  return report;
}

/// Plain-text summary table of a metric record (values in percent).
inline std::string summary_table(const std::string& title, const MetricRecord& m) {
  auto pct = [](const std::optional<double>& v) { return v ? std::optional<double>(100.0 * *v) : std::nullopt; };
  std::ostringstream os;
  os << title << "\n";
  os << std::left << std::setw(12) << "metric" << std::right << std::setw(12) << "value" << "\n";
  os << std::left << std::setw(12) << "ARI" << std::right << std::setw(12) << format_metric(pct(m.ari)) << "\n";
  os << std::left << std::setw(12) << (m.single_object ? "IoU" : "ARI_fg") << std::right << std::setw(12)
     << format_metric(pct(m.fg)) << "\n";
  os << std::left << std::setw(12) << "combined" << std::right << std::setw(12) << format_metric(m.combined) << "\n";
  os << std::left << std::setw(12) << "samples" << std::right << std::setw(12) << m.samples.size() << "\n";
  return os.str();
}

}  // namespace gdr
