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

// gdr: command-line front end. Data generation, the two training stages,
// evaluation and the visualizations.

#include <torch/torch.h>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>

#include "gdr/analysis.hpp"
#include "gdr/presets.hpp"
#include "gdr/trainer.hpp"

namespace {

namespace fs = std::filesystem;

struct ModelFlags {
  std::optional<std::string> variant;
  std::optional<int> groups;
  std::optional<std::string> query;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> scale_factor;
  std::vector<std::string> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("--variant", variant, "SLATE (default), SLATE_PLUS, STEVE or STEVE_PLUS");
    cmd->add_option("--groups", groups, "attribute groups (default 1, the non-grouped baseline)")->check(CLI::IsMember({1, 2, 4, 8}));
    cmd->add_option("--query", query, "slot initialization")->check(CLI::IsMember({"random", "condition"}));
    cmd->add_option("--config", config_path, "key = value config file");
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--scale-factor", scale_factor, "schedule length multiplier");
    cmd->add_option("--set", overrides, "extra key=value overrides");
  }

  // file first, then explicit flags
  gdr::GlobalConfig build() const {
    gdr::GlobalConfig c;
    if (!config_path.empty()) c.load_file(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw gdr::ConfigError("--set expects key=value, got " + kv);
      c.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (variant) c.variant = gdr::parse_architecture(*variant);
    if (query) c.query_mode = gdr::parse_query_mode(*query);
    if (groups) {
      c.layout = *groups == 8 ? gdr::GroupLayout({2, 2, 2, 2, 4, 4, 4, 4}) : gdr::GroupLayout::for_groups(*groups, c.num_code);
    }
    if (seed) c.seed = *seed;
    if (scale_factor) c.scale_factor = *scale_factor;
    c.validate();
    return c;
  }
};

void ensure_dir(const std::string& dir) {
  if (!dir.empty()) fs::create_directories(dir);
}

std::string in_dir(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

gdr::Dataset load_data(const std::string& path) { return gdr::unpack_dataset(path); }

// held-out tail when no validation store is given
std::pair<gdr::Dataset, gdr::Dataset> split_data(const std::string& train_path, const std::string& val_path) {
  auto train = load_data(train_path);
  if (!val_path.empty()) return {std::move(train), load_data(val_path)};
  if (train.size() < 2) throw gdr::ValidationError("need at least 2 records to split off a validation set");
  const std::size_t n_val = std::max<std::size_t>(1, train.size() / 10);
  gdr::Dataset val{train.info, {}};
  val.records.assign(train.records.end() - static_cast<std::ptrdiff_t>(n_val), train.records.end());
  train.records.resize(train.size() - n_val);
  return {std::move(train), std::move(val)};
}

gdr::TrainOptions train_options(const std::string& out, gdr::ReportWriter* report) {
  gdr::TrainOptions o;
  o.out_dir = out;
  o.report = report;
  o.log = [](const std::string& s) { std::cerr << s << "\n"; };
  return o;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw gdr::IoError("cannot write " + path);
  out << text;
}

// token cells whose centre pixel carries slot `slot` in the predicted masks
torch::Tensor slot_region(gdr::OclModel& model, const gdr::Dataset& data, std::size_t sample, int slot) {
  torch::NoGradGuard ng;
  std::mt19937_64 rng(0);
  const auto& cfg = model->config();
  auto b = gdr::make_batch(data, {sample}, false, cfg.num_slots, rng, cfg.video_window);
  const auto out = model->forward_ocl(b.pixels.narrow(1, 0, 1), b.boxes.defined() ? b.boxes.narrow(1, 0, 1) : b.boxes,
                                      0.0, nullptr);
  const auto masks = out.masks.select(1, 0);  // [1, R, R]
  const auto t = cfg.token_resolution();
  const auto cell = cfg.input_resolution / t;
  const auto centres = masks.slice(1, cell / 2, cfg.input_resolution, cell).slice(2, cell / 2, cfg.input_resolution, cell);
  return centres.eq(slot);
}

torch::Tensor random_region(int t, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const int h = pick(1, t / 2), w = pick(1, t / 2);
  const int y = pick(0, t - h), x = pick(0, t - w);
  auto r = torch::zeros({1, t, t}, torch::kBool);
  r.slice(1, y, y + h).slice(2, x, x + w).fill_(true);
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"grouped discrete representation lab"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "intra-op threads (1 keeps runs bit-reproducible)");

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic scene store");
  std::string preset = "desk", gen_out;
  std::size_t num = 1000;
  bool video = false, overwrite = false;
  int resolution = 64;
  std::uint64_t data_seed = 0;
  gen->add_option("--preset", preset)->check(CLI::IsMember({"fig1", "desk", "transfer", "single"}));
  gen->add_option("--num", num, "number of scenes")->required();
  gen->add_flag("--video,!--image", video, "clips instead of still images");
  gen->add_option("--resolution", resolution);
  gen->add_option("--seed", data_seed);
  gen->add_option("--out", gen_out, "store path")->required();
  gen->add_flag("--overwrite", overwrite);

  // pretrain / train
  ModelFlags pre_flags, train_flags;
  std::string data_path, val_path, out_dir = "run", checkpoint;
  auto* pre = app.add_subcommand("pretrain", "stage 1: dVAE pretraining");
  pre_flags.attach(pre);
  pre->add_option("--data", data_path, "training store")->required();
  pre->add_option("--val", val_path, "validation store (default: last 10% of --data)");
  pre->add_option("--out", out_dir);

  auto* train = app.add_subcommand("train", "stage 2: object-centric training from a stage-1 checkpoint");
  train->add_option("--checkpoint", checkpoint, "stage-1 checkpoint")->required();
  train->add_option("--data", data_path, "training store")->required();
  train->add_option("--val", val_path, "validation store (default: last 10% of --data)");
  train->add_option("--out", out_dir);
  std::optional<double> train_scale;
  train->add_option("--scale-factor", train_scale, "schedule length multiplier");

  // eval / transfer-eval
  bool with_baseline = false;
  auto* eval = app.add_subcommand("eval", "segmentation metrics of a checkpoint");
  eval->add_option("--checkpoint", checkpoint)->required();
  eval->add_option("--data", data_path)->required();
  eval->add_option("--out", out_dir);
  eval->add_flag("--random-baseline", with_baseline, "also score K random rectangles");
  std::string target_path;
  auto* transfer = app.add_subcommand("transfer-eval", "metric drop from source to target data");
  transfer->add_option("--checkpoint", checkpoint)->required();
  transfer->add_option("--data,--source", data_path)->required();
  transfer->add_option("--target", target_path)->required();
  transfer->add_option("--out", out_dir);

  // visualize
  auto* vis = app.add_subcommand("visualize", "interpretability artifacts");
  vis->require_subcommand(1);
  std::size_t sample = 0;
  int group = 0, slot = -1;
  std::optional<std::int64_t> value;
  bool rand_region = false, shuffle_palette = false;
  double sigma = 50.0;
  std::uint64_t vis_seed = 0;
  std::string curve_path;
  auto common = [&](CLI::App* c) {
    c->add_option("--checkpoint", checkpoint)->required();
    c->add_option("--data", data_path)->required();
    c->add_option("--out", out_dir);
  };
  auto* v_index = vis->add_subcommand("index-map", "per-group HSV maps of the code indexes");
  common(v_index);
  v_index->add_option("--sample", sample);
  v_index->add_flag("--shuffle-palette", shuffle_palette, "random index-to-hue permutation per group");
  v_index->add_option("--seed", vis_seed);
  auto* v_swap = vis->add_subcommand("swap", "replace one group's index inside a region and decode");
  common(v_swap);
  v_swap->add_option("--sample", sample);
  v_swap->add_option("--group", group);
  v_swap->add_option("--value", value, "new index (default: random)");
  auto* slot_opt = v_swap->add_option("--slot", slot, "region = token cells assigned to this slot");
  v_swap->add_flag("--random-region", rand_region, "region = random rectangle")->excludes(slot_opt);
  v_swap->add_option("--seed", vis_seed);
  auto* v_util = vis->add_subcommand("utilization", "code-usage frequencies, sorted and smoothed");
  common(v_util);
  v_util->add_option("--sigma", sigma, "Gaussian smoothing width in codes");
  v_util->add_option("--curve", curve_path, "also smooth a stage-1 curve CSV (utilization column)");
  auto* v_align = vis->add_subcommand("alignment", "per-group NMI against object attributes");
  common(v_align);
  int shuffles = 100;
  v_align->add_option("--shuffles", shuffles, "label permutations for the control");
  v_align->add_option("--seed", vis_seed);

  CLI11_PARSE(app, argc, argv);
  torch::set_num_threads(threads);
  // near-one-hot soft codes at low tau underflow; denormal arithmetic is ~4x slower
  at::globalContext().setFlushDenormal(true);

  try {
    if (gen->parsed()) {
      const auto p = gdr::scene_preset(preset, resolution);
      const auto d = gdr::generate_dataset(p, num, video, data_seed);
      gdr::pack_dataset(d, gen_out, overwrite);
      std::cout << "wrote " << d.size() << " " << (video ? "clips" : "images") << " (" << preset << ") to " << gen_out << "\n";
    } else if (pre->parsed()) {
      const auto cfg = pre_flags.build();
      ensure_dir(out_dir);
      auto [tr, va] = split_data(data_path, val_path);
      auto model = gdr::build_model(gdr::ModelVariant::from_config(cfg), cfg, &tr.info);
      write_text(in_dir(out_dir, "config.txt"), model->config().to_text());
      gdr::ReportWriter report(in_dir(out_dir, "stage1_report.jsonl"));
      const auto r = gdr::run_stage1(model, tr, va, train_options(out_dir, &report));
      std::ostringstream os;
      os << "stage 1 (" << gdr::to_string(cfg.variant) << ", groups " << cfg.layout.to_string() << ")\n"
         << "  steps            " << r.total_steps << "\n"
         << "  best step        " << r.best_step << "\n"
         << "  val recon MSE    " << r.best_val_loss << "\n"
         << "  never-used codes " << r.never_used_codes << " / " << cfg.layout.n() << "\n";
      std::cout << os.str();
      write_text(in_dir(out_dir, "summary.txt"), os.str());
    } else if (train->parsed()) {
      ensure_dir(out_dir);
      auto model = gdr::load_model(checkpoint);
      if (train_scale) model->set_scale_factor(*train_scale);
      auto [tr, va] = split_data(data_path, val_path);
      gdr::ReportWriter report(in_dir(out_dir, "stage2_report.jsonl"));
      gdr::run_stage2(model, tr, va, train_options(out_dir, &report));
      const auto m = gdr::evaluate(model, va);
      const auto table = gdr::summary_table("stage 2, validation", m);
      std::cout << table;
      write_text(in_dir(out_dir, "summary.txt"), table);
    } else if (eval->parsed()) {
      ensure_dir(out_dir);
      auto model = gdr::load_model(checkpoint);
      const auto data = load_data(data_path);
      gdr::ReportWriter report(in_dir(out_dir, "eval_report.jsonl"));
      const auto m = gdr::evaluate(model, data);
      report.record(0, "eval", "ari", m.ari);
      report.record(0, "eval", m.fg_name(), m.fg);
      report.record(0, "eval", "combined", m.combined);
      std::string table = gdr::summary_table("evaluation", m);
      if (with_baseline) {
        const auto b = gdr::evaluate_random_rectangles(data, model->config().num_slots, model->config().seed);
        report.record(0, "baseline", "combined", b.combined);
        table += gdr::summary_table("random rectangles", b);
      }
      std::cout << table;
      write_text(in_dir(out_dir, "eval_summary.txt"), table);
    } else if (transfer->parsed()) {
      ensure_dir(out_dir);
      auto model = gdr::load_model(checkpoint);
      const auto t = gdr::transfer_evaluate(model, load_data(data_path), load_data(target_path));
      gdr::ReportWriter report(in_dir(out_dir, "transfer_report.jsonl"));
      report.record(0, "source", "combined", t.source.combined);
      report.record(0, "target", "combined", t.target.combined);
      report.record(0, "transfer", "delta", t.delta);
      std::ostringstream os;
      os << gdr::summary_table("source", t.source) << gdr::summary_table("target", t.target)
         << "delta (target - source, points)  " << gdr::format_metric(t.delta) << "\n";
      std::cout << os.str();
      write_text(in_dir(out_dir, "transfer_summary.txt"), os.str());
    } else if (vis->parsed()) {
      ensure_dir(out_dir);
      auto model = gdr::load_model(checkpoint);
      const auto data = load_data(data_path);
      const auto& cfg = model->config();
      const auto& layout = model->layout();
      if (sample >= data.size()) throw gdr::IndexError("--sample out of range");
      auto frame = [&](std::size_t i) {
        std::mt19937_64 rng(0);
        return gdr::make_batch(data, {i}, false, cfg.num_slots, rng, cfg.video_window).pixels.select(1, 0);
      };
      if (v_index->parsed()) {
        auto tokens = model->discretize(frame(sample), nullptr);
        if (shuffle_palette) {
          std::mt19937_64 rng(vis_seed);
          std::vector<torch::Tensor> planes;
          for (int i = 0; i < layout.g(); ++i) {
            std::vector<std::int64_t> perm(static_cast<std::size_t>(layout.size(static_cast<std::size_t>(i))));
            std::iota(perm.begin(), perm.end(), 0);
            std::shuffle(perm.begin(), perm.end(), rng);
            planes.push_back(torch::tensor(perm).index({tokens.hard_tuple.select(1, i).to(torch::kInt64)}));
          }
          tokens.hard_tuple = torch::stack(planes, 1);
        }
        const auto v = gdr::hsv_index_map(tokens, layout);
        const int factor = cfg.input_resolution / cfg.token_resolution();
        gdr::write_bmp(in_dir(out_dir, "input.bmp"), gdr::tensor_to_image(frame(sample)[0]));
        for (std::size_t i = 0; i < v.images.size(); ++i) {
          gdr::write_bmp(in_dir(out_dir, "index_group" + std::to_string(i) + ".bmp"), gdr::upscale(v.images[i], factor));
        }
        std::cout << "wrote " << v.images.size() << " index maps to " << out_dir << "\n";
      } else if (v_swap->parsed()) {
        if (!rand_region && slot < 0) throw gdr::ConfigError("swap needs --slot N or --random-region");
        if (group < 0 || group >= layout.g()) throw gdr::IndexError("--group out of range");
        const auto tokens = model->discretize(frame(sample), nullptr);
        const auto region = rand_region ? random_region(cfg.token_resolution(), vis_seed)
                                        : slot_region(model, data, sample, slot);
        std::mt19937_64 rng(vis_seed);
        const auto a = layout.size(static_cast<std::size_t>(group));
        const auto new_value = value.value_or(std::uniform_int_distribution<std::int64_t>(0, a - 1)(rng));
        torch::NoGradGuard ng;
        const auto before = model->dvae->decode(gdr::grid_from_tuples(tokens.hard_tuple, layout).soft);
        const auto after = gdr::attribute_swap(tokens, region, group, new_value, model->dvae);
        gdr::write_bmp(in_dir(out_dir, "input.bmp"), gdr::tensor_to_image(frame(sample)[0]));
        gdr::write_bmp(in_dir(out_dir, "decoded.bmp"), gdr::tensor_to_image(before[0]));
        gdr::write_bmp(in_dir(out_dir, "swapped.bmp"), gdr::tensor_to_image(after[0]));
        std::cout << "group " << group << " := " << new_value << " over " << region.sum().item<std::int64_t>()
                  << " token cells; wrote decoded.bmp and swapped.bmp to " << out_dir << "\n";
      } else if (v_util->parsed()) {
        const auto hist = gdr::code_usage(model, data);
        auto freq = hist.natural_frequencies();
        std::sort(freq.begin(), freq.end(), std::greater<>());
        const auto smooth = gdr::smooth_curve(freq, sigma);
        std::ofstream csv(in_dir(out_dir, "utilization.csv"));
        csv << "rank,frequency,smoothed\n" << std::setprecision(10);
        for (std::size_t i = 0; i < freq.size(); ++i) csv << i << "," << freq[i] << "," << smooth[i] << "\n";
        std::ofstream groups_csv(in_dir(out_dir, "utilization_groups.csv"));
        groups_csv << "group,index,frequency\n" << std::setprecision(10);
        for (int i = 0; i < layout.g(); ++i) {
          const auto f = hist.group_frequencies(static_cast<std::size_t>(i));
          for (std::size_t k = 0; k < f.size(); ++k) groups_csv << i << "," << k << "," << f[k] << "\n";
        }
        if (!curve_path.empty()) {
          std::ifstream in(curve_path);
          if (!in) throw gdr::IoError("cannot open " + curve_path);
          std::string line;
          std::getline(in, line);
          std::vector<std::string> head;
          for (std::stringstream ss(line); std::getline(ss, line, ',');) head.push_back(line);
          const auto col = std::find(head.begin(), head.end(), "utilization") - head.begin();
          if (col == static_cast<std::ptrdiff_t>(head.size())) throw gdr::ValidationError("curve CSV has no utilization column");
          std::vector<double> u;
          while (std::getline(in, line)) {
            std::stringstream ss(line);
            std::string cellv;
            for (std::ptrdiff_t c = 0; c <= col && std::getline(ss, cellv, ','); ++c) {}
            u.push_back(std::stod(cellv));
          }
          const auto su = gdr::smooth_curve(u, sigma);
          std::ofstream out(in_dir(out_dir, "utilization_curve.csv"));
          out << "step,utilization,smoothed\n" << std::setprecision(10);
          for (std::size_t i = 0; i < u.size(); ++i) out << i << "," << u[i] << "," << su[i] << "\n";
        }
        std::cout << "never-used codes " << hist.never_used_natural() << " / " << layout.n() << "; wrote CSVs to "
                  << out_dir << "\n";
      } else if (v_align->parsed()) {
        const auto objects = gdr::collect_object_codes(model, data);
        const auto rows = gdr::attribute_alignment(objects, layout, shuffles, vis_seed);
        std::ofstream csv(in_dir(out_dir, "alignment.csv"));
        csv << "group,attribute,nmi,best_attribute,best_nmi,control_mean,control_std,margin_sd\n";
        const char* names[] = {"color", "shape", "texture"};
        for (const auto& g : rows) {
          for (std::size_t a = 0; a < g.nmi_per_attribute.size(); ++a) {
            csv << g.group << "," << (a < 3 ? names[a] : std::to_string(a).c_str()) << ","
                << gdr::format_metric(g.nmi_per_attribute[a]) << "," << g.best_attribute << ","
                << gdr::format_metric(g.best_nmi) << "," << g.control_mean << "," << g.control_std << ","
                << gdr::format_metric(g.margin()) << "\n";
          }
          std::cout << "group " << g.group << ": best NMI " << gdr::format_metric(g.best_nmi) << " ("
                    << (g.best_attribute >= 0 && g.best_attribute < 3 ? names[g.best_attribute] : "-") << "), "
                    << gdr::format_metric(g.margin()) << " control sd above shuffled labels\n";
        }
        std::cout << objects.size() << " objects\n";
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
