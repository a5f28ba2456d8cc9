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

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "gdr/config.hpp"
#include "gdr/schedules.hpp"

namespace {

using gdr::GlobalConfig;

TEST(CosineAnneal, Endpoints) {
  EXPECT_DOUBLE_EQ(gdr::cosine_anneal(1.0, 0.1, 0, 25000), 1.0);
  EXPECT_DOUBLE_EQ(gdr::cosine_anneal(1.0, 0.1, 25000, 25000), 0.1);
  EXPECT_NEAR(gdr::cosine_anneal(1.0, 0.1, 12500, 25000), 0.55, 1e-12);
}

TEST(CosineAnneal, OutOfRangeStep) {
  EXPECT_THROW(gdr::cosine_anneal(1.0, 0.1, -1, 10), gdr::RangeError);
  EXPECT_THROW(gdr::cosine_anneal(1.0, 0.1, 11, 10), gdr::RangeError);
  EXPECT_THROW(gdr::cosine_anneal(1.0, 0.1, 0, 0), gdr::RangeError);
}

TEST(CosineAnneal, MonotoneAndBounded) {
  double prev = 2.0;
  for (long s = 0; s <= 1000; ++s) {
    const double v = gdr::cosine_anneal(1.0, 0.1, s, 1000);
    EXPECT_LE(v, prev);
    EXPECT_GE(v, 0.1);
    EXPECT_LE(v, 1.0);
    prev = v;
  }
  // increasing direction
  EXPECT_LT(gdr::cosine_anneal(0.0, 1.0, 10, 100), gdr::cosine_anneal(0.0, 1.0, 20, 100));
}

TEST(LearningRate, WarmupAndDecay) {
  EXPECT_DOUBLE_EQ(gdr::lr_at(0, 2e-3, 1250, 25000), 0.0);
  EXPECT_NEAR(gdr::lr_at(625, 2e-3, 1250, 25000), 1e-3, 1e-15);
  EXPECT_DOUBLE_EQ(gdr::lr_at(1250, 2e-3, 1250, 25000), 2e-3);
  EXPECT_NEAR(gdr::lr_at(25000, 2e-3, 1250, 25000), 0.0, 1e-18);
  // continuity across the warmup boundary
  EXPECT_NEAR(gdr::lr_at(1249, 2e-3, 1250, 25000), gdr::lr_at(1251, 2e-3, 1250, 25000), 1e-5);
  EXPECT_THROW(gdr::lr_at(0, 1.0, 10, 10), gdr::RangeError);
  EXPECT_THROW(gdr::lr_at(11, 1.0, 2, 10), gdr::RangeError);
}

TEST(ScheduleSuite, PretrainDefaults) {
  GlobalConfig cfg;
  cfg.scale_factor = 1.0;
  const auto s = gdr::schedule_suite(gdr::Stage::kDvaePretrain, cfg);
  EXPECT_EQ(s.total_steps, 25000);
  EXPECT_EQ(s.val_interval, 500);
  EXPECT_DOUBLE_EQ(s.tau.start, 1.0);
  EXPECT_DOUBLE_EQ(s.tau.end, 0.1);
  EXPECT_DOUBLE_EQ(s.tau.at(25000), 0.1);
  EXPECT_EQ(s.lr.warmup_steps, 1250);
  EXPECT_DOUBLE_EQ(s.lr.at(1250), 2e-3);
}

TEST(ScheduleSuite, TrainDefaults) {
  GlobalConfig cfg;
  cfg.scale_factor = 1.0;
  const auto s = gdr::schedule_suite(gdr::Stage::kOclTrain, cfg);
  EXPECT_EQ(s.total_steps, 50000);
  EXPECT_EQ(s.val_interval, 1000);
  EXPECT_EQ(s.lr.warmup_steps, 2500);
  EXPECT_DOUBLE_EQ(s.lr.at(2500), 2e-4);
  EXPECT_DOUBLE_EQ(s.sigma.at(0), 1.0);
  EXPECT_DOUBLE_EQ(s.sigma.at(50000), 0.0);
}

TEST(ScheduleSuite, SingleObjectSigmaIsZero) {
  GlobalConfig cfg;
  cfg.single_object = true;
  const auto s = gdr::schedule_suite(gdr::Stage::kOclTrain, cfg);
  EXPECT_EQ(s.sigma.kind, gdr::ScheduleSpec::Kind::kConstant);
  for (long t = 0; t <= s.total_steps; t += 97) EXPECT_EQ(s.sigma.at(t), 0.0);
}

TEST(ScheduleSuite, DeskScaleFactor) {
  GlobalConfig cfg;  // default factor 0.1
  const auto s1 = gdr::schedule_suite(gdr::Stage::kDvaePretrain, cfg);
  EXPECT_EQ(s1.total_steps, 2500);
  EXPECT_EQ(s1.val_interval, 50);
  EXPECT_EQ(s1.total_steps / s1.val_interval, 50);
  EXPECT_EQ(s1.lr.warmup_steps, 125);
  const auto s2 = gdr::schedule_suite(gdr::Stage::kOclTrain, cfg);
  EXPECT_EQ(s2.total_steps, 5000);
  EXPECT_EQ(s2.val_interval, 100);
  EXPECT_EQ(s2.lr.warmup_steps, 250);
}

TEST(ScheduleSuite, TinyFactorKeepsValidSpecs) {
  GlobalConfig cfg;
  cfg.scale_factor = 1e-5;
  const auto s = gdr::schedule_suite(gdr::Stage::kOclTrain, cfg);
  EXPECT_GE(s.total_steps, 1);
  EXPECT_LT(s.lr.warmup_steps, s.total_steps);
  EXPECT_NO_THROW(s.lr.at(s.total_steps));
}

TEST(ScheduleSuite, ParseStage) {
  EXPECT_EQ(gdr::parse_stage("dvae_pretrain"), gdr::Stage::kDvaePretrain);
  EXPECT_EQ(gdr::parse_stage("ocl_train"), gdr::Stage::kOclTrain);
  EXPECT_THROW(gdr::parse_stage("finetune"), gdr::ConfigError);
}

TEST(Config, Defaults) {
  GlobalConfig cfg;
  EXPECT_EQ(cfg.token_resolution(), 16);
  EXPECT_EQ(cfg.num_code, 4096);
  EXPECT_EQ(cfg.channel_dim, 256);
  EXPECT_EQ(cfg.dim_multiplier, 8);
  EXPECT_TRUE(cfg.use_codebook_layernorm);
  EXPECT_TRUE(cfg.use_utilization_loss);
  EXPECT_EQ(cfg.effective_num_iter(), 3);
  cfg.query_mode = gdr::QueryMode::kCondition;
  EXPECT_EQ(cfg.effective_num_iter(), 1);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, ValidationRejectsBadValues) {
  GlobalConfig cfg;
  cfg.input_resolution = 66;
  EXPECT_THROW(cfg.validate(), gdr::ConfigError);
  cfg = GlobalConfig{};
  cfg.dim_multiplier = 3;
  EXPECT_THROW(cfg.validate(), gdr::ConfigError);
  cfg = GlobalConfig{};
  cfg.num_slots = 0;
  EXPECT_THROW(cfg.validate(), gdr::ConfigError);
  cfg = GlobalConfig{};
  cfg.layout = gdr::GroupLayout({64, 32});
  EXPECT_THROW(cfg.validate(), gdr::ConfigError);
}

TEST(Config, FileRoundTrip) {
  GlobalConfig cfg;
  std::istringstream in(
      "# desk run\n"
      "codebook.groups = 8,8,8,8\n"
      "model.channel_dim = 64   # narrow\n"
      "model.variant = STEVE_PLUS\n"
      "model.query_mode = condition\n"
      "codebook.layernorm = false\n"
      "train.scale_factor = 0.05\n"
      "train.seed = 7\n");
  cfg.load_stream(in);
  EXPECT_EQ(cfg.layout, gdr::GroupLayout({8, 8, 8, 8}));
  EXPECT_EQ(cfg.channel_dim, 64);
  EXPECT_EQ(cfg.variant, gdr::Architecture::kStevePlus);
  EXPECT_EQ(cfg.query_mode, gdr::QueryMode::kCondition);
  EXPECT_FALSE(cfg.use_codebook_layernorm);
  EXPECT_DOUBLE_EQ(cfg.scale_factor, 0.05);
  EXPECT_EQ(cfg.seed, 7u);

  GlobalConfig back;
  std::istringstream text(cfg.to_text());
  back.load_stream(text);
  EXPECT_EQ(back.to_map(), cfg.to_map());
}

TEST(Config, EveryKeyRoundTrips) {
  GlobalConfig cfg;
  for (const auto& [key, value] : cfg.to_map()) {
    GlobalConfig other;
    EXPECT_NO_THROW(other.set(key, value)) << key;
    EXPECT_EQ(other.to_map().at(key), value) << key;
  }
}

TEST(Config, UnknownKeyAndMalformedLine) {
  GlobalConfig cfg;
  EXPECT_THROW(cfg.set("model.widht", "3"), gdr::ConfigError);
  std::istringstream bad("model.channel_dim 64\n");
  EXPECT_THROW(cfg.load_stream(bad), gdr::ConfigError);
  EXPECT_THROW(cfg.load_file("/nonexistent/gdr.cfg"), gdr::IoError);
}

TEST(Architecture, Parsing) {
  EXPECT_EQ(gdr::parse_architecture("SLATE+"), gdr::Architecture::kSlatePlus);
  EXPECT_EQ(gdr::parse_architecture("steve"), gdr::Architecture::kSteve);
  EXPECT_TRUE(gdr::is_video(gdr::Architecture::kStevePlus));
  EXPECT_FALSE(gdr::is_video(gdr::Architecture::kSlatePlus));
  EXPECT_TRUE(gdr::has_extra_encoder(gdr::Architecture::kSlatePlus));
  EXPECT_FALSE(gdr::has_extra_encoder(gdr::Architecture::kSteve));
  EXPECT_THROW(gdr::parse_architecture("slot-diffusion"), gdr::ConfigError);
  EXPECT_THROW(gdr::parse_query_mode("box"), gdr::ConfigError);
}

}  // namespace
