#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "pathosr/checkpoint.hpp"
#include "pathosr/config_file.hpp"
#include "pathosr/errors.hpp"
#include "pathosr/evaluation.hpp"
#include "pathosr/synthetic.hpp"
#include "pathosr/tensor_bridge.hpp"
#include "pathosr/trainer.hpp"

#include <nlohmann/json.hpp>

using namespace pathosr;
namespace fs = std::filesystem;

namespace {

// 512px tiles keep the 5X level at 64px, enough for 32px tiny patches.
const std::vector<TilePyramid>& small_tiles() {
  static const std::vector<TilePyramid> tiles = [] {
    std::vector<TilePyramid> out;
    for (int i = 0; i < 3; ++i) {
      auto p = build_pyramid(synthetic_tissue(512, 512, 50 + i), 512);
      p.tile_id = "tile" + std::to_string(i);
      out.push_back(std::move(p));
    }
    return out;
  }();
  return tiles;
}

TrainConfig quick_config() {
  auto cfg = TrainConfig::tiny();
  cfg.patches_per_image = 4;
  cfg.seed = 7;
  return cfg;
}

std::vector<torch::Tensor> snapshot(torch::nn::Module& m) {
  std::vector<torch::Tensor> out;
  for (const auto& p : m.parameters()) out.push_back(p.detach().clone());
  return out;
}

bool unchanged(torch::nn::Module& m, const std::vector<torch::Tensor>& before) {
  const auto now = m.parameters();
  for (std::size_t i = 0; i < now.size(); ++i)
    if (!torch::equal(now[i], before[i])) return false;
  return true;
}

bool all_changed_somewhere(torch::nn::Module& m, const std::vector<torch::Tensor>& before) {
  const auto now = m.parameters();
  for (std::size_t i = 0; i < now.size(); ++i)
    if (torch::equal(now[i], before[i])) return false;
  return true;
}

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Schedule, LearningRate) {
  const auto cfg = TrainConfig{};
  EXPECT_DOUBLE_EQ(learning_rate(0, cfg), 0.0004);
  EXPECT_DOUBLE_EQ(learning_rate(29, cfg), 0.0004);
  EXPECT_DOUBLE_EQ(learning_rate(30, cfg), 0.0002);
  EXPECT_DOUBLE_EQ(learning_rate(60, cfg), 0.0001);
  EXPECT_DOUBLE_EQ(learning_rate(119, cfg), 0.00005);
  for (int e = 0; e < 120; ++e) EXPECT_EQ(learning_rate(e, cfg), 0.0004 * std::pow(0.5, e / 30));
  EXPECT_THROW(learning_rate(-1, cfg), UsageError);
}

TEST(Config, Validation) {
  EXPECT_NO_THROW(TrainConfig{}.validate());
  auto cfg = TrainConfig{};
  cfg.val_fraction = 0.6;
  EXPECT_THROW(cfg.validate(), UsageError);
  cfg = TrainConfig{};
  cfg.decay_factor = 1.5;
  EXPECT_THROW(cfg.validate(), UsageError);
  cfg = TrainConfig{};
  cfg.workers = 4;
  EXPECT_THROW(cfg.validate(), UsageError);
  cfg = TrainConfig{};
  cfg.extractor = ExtractorBackend::kPretrainedVgg19;
  EXPECT_THROW(cfg.validate(), UsageError);
}

TEST(Config, FileRoundTripAndUnknownKey) {
  auto cfg = parse_train_config("profile = tiny\n# comment\nepochs = 3\nlearning_rate = 0.001\n");
  EXPECT_EQ(cfg.profile, Profile::kTiny);
  EXPECT_EQ(cfg.epochs, 3);
  EXPECT_EQ(cfg.patch_size, 32);
  EXPECT_DOUBLE_EQ(cfg.learning_rate, 0.001);
  const auto again = parse_train_config(format_train_config(cfg));
  EXPECT_EQ(format_train_config(again), format_train_config(cfg));
  try {
    parse_train_config("epochs = 2\nlearning_rat = 0.1\n");
    FAIL() << "expected UsageError";
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("learning_rat"), std::string::npos);
  }
  EXPECT_THROW(parse_train_config("epochs = two\n"), UsageError);
}

TEST(PatchStream, FlatnessFollowsEpoch) {
  const auto cfg = quick_config();
  EXPECT_DOUBLE_EQ(PatchStream(small_tiles(), cfg, 7).flatness(), 0.01);
  EXPECT_DOUBLE_EQ(PatchStream(small_tiles(), cfg, 0).flatness(), 0.0);
  auto a = PatchStream(small_tiles(), cfg, 3).next(6);
  auto b = PatchStream(small_tiles(), cfg, 3).next(6);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].source_tile, b[i].source_tile);
    EXPECT_EQ(a[i].lr_origin, b[i].lr_origin);
  }
}

TEST(SplitValidation, LastTilesBySortedId) {
  std::vector<TilePyramid> tiles(10);
  for (int i = 0; i < 10; ++i) tiles[i].tile_id = "t" + std::to_string(9 - i);
  auto [train, val] = split_validation(tiles, 0.1);
  ASSERT_EQ(val.size(), 1u);
  EXPECT_EQ(val[0].tile_id, "t9");
  EXPECT_EQ(train.size(), 9u);
}

TEST(Trainer, StepIsFiniteAndDeterministic) {
  const auto cfg = quick_config();
  auto batch = make_batch(PatchStream(small_tiles(), cfg, 0).next(2));
  Trainer a(cfg), b(cfg);
  const auto la = a.train_step(batch, 0);
  const auto lb = b.train_step(batch, 0);
  EXPECT_TRUE(la.all_finite());
  EXPECT_EQ(la, lb);
  EXPECT_EQ(a.global_step(), 1);
  EXPECT_NEAR(la.total, total_loss(LossParts<double>{la.gl, la.pl, la.adv_40x}, cfg.weights),
              1e-6);
}

TEST(Trainer, PhasesTouchOnlyTheirOwnNetwork) {
  const auto cfg = quick_config();
  Trainer t(cfg);
  auto batch = make_batch(PatchStream(small_tiles(), cfg, 0).next(2));
  t.generator()->train();
  auto outputs = t.generator()->forward(batch.lr);

  const auto g0 = snapshot(*t.generator());
  const auto d0 = snapshot(*t.discriminator());
  t.discriminator_phase(batch, outputs[2]);
  EXPECT_TRUE(unchanged(*t.generator(), g0));
  EXPECT_FALSE(unchanged(*t.discriminator(), d0));
  for (const auto& p : t.generator()->parameters()) {
    if (p.grad().defined()) EXPECT_EQ(p.grad().abs().sum().item<double>(), 0.0);
  }

  const auto d1 = snapshot(*t.discriminator());
  t.generator_phase(batch, outputs);
  EXPECT_TRUE(unchanged(*t.discriminator(), d1));
  EXPECT_TRUE(all_changed_somewhere(*t.generator(), g0));
  for (const auto& p : t.discriminator()->parameters()) EXPECT_TRUE(p.requires_grad());
}

TEST(Trainer, NonFiniteLossThrows) {
  const auto cfg = quick_config();
  Trainer t(cfg);
  auto batch = make_batch(PatchStream(small_tiles(), cfg, 0).next(2));
  batch.hr[0].index_put_({0, 0, 0, 0}, std::numeric_limits<float>::quiet_NaN());
  EXPECT_THROW(t.train_step(batch, 0), NumericalError);
}

TEST(Trainer, ExtractorStaysFrozen) {
  const auto cfg = quick_config();
  Trainer t(cfg);
  auto probe = torch::rand({1, 3, 32, 32});
  const auto before = t.extractor()->forward(probe);
  PatchStream stream(small_tiles(), cfg, 0);
  for (int i = 0; i < 3; ++i) t.train_step(make_batch(stream.next(2)), 0);
  const auto after = t.extractor()->forward(probe);
  EXPECT_TRUE(torch::equal(before.first, after.first));
  EXPECT_TRUE(torch::equal(before.second, after.second));
}

TEST(Trainer, TwoEpochsWriteCheckpointsAndLog) {
  auto cfg = quick_config();
  cfg.epochs = 2;
  cfg.steps_per_epoch = 10;
  const auto dir = fresh_dir("pathosr_train_bookkeeping");
  Trainer t(cfg);
  t.train(small_tiles(), {}, {.out_dir = dir});
  EXPECT_TRUE(fs::exists(dir / "checkpoints" / "epoch_0001" / "generator.pt"));
  EXPECT_TRUE(fs::exists(dir / "checkpoints" / "epoch_0002" / "checkpoint.json"));
  int n_ckpt = 0;
  for (const auto& e : fs::directory_iterator(dir / "checkpoints")) n_ckpt += e.is_directory();
  EXPECT_EQ(n_ckpt, 2);

  std::ifstream log(dir / "train_log.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) {
    const auto j = nlohmann::json::parse(line);
    const int epoch = j.at("epoch").get<int>();
    EXPECT_EQ(j.at("step").get<int>(), lines + 1);
    EXPECT_EQ(j.at("lr").get<double>(), learning_rate(epoch, cfg));
    EXPECT_EQ(j.at("flatness").get<double>(), flatness_value(epoch, cfg.flatness));
    for (const char* key : {"gl_10x", "pl_40x", "adv_40x", "dl_40x", "total"})
      EXPECT_TRUE(j.contains(key));
    ++lines;
  }
  EXPECT_EQ(lines, 20);

  const auto meta = read_checkpoint_meta(dir / "checkpoints" / "epoch_0002");
  EXPECT_EQ(meta.at("epoch").get<int>(), 2);
  EXPECT_EQ(meta.at("step").get<int>(), 20);
  EXPECT_EQ(meta.at("schema").get<int>(), 1);
  fs::remove_all(dir);
}

TEST(Trainer, ResumeMatchesUninterruptedRun) {
  auto cfg = quick_config();
  cfg.epochs = 2;
  cfg.steps_per_epoch = 5;
  cfg.validate_each_epoch = false;

  std::vector<LossBreakdown> straight;
  Trainer full(cfg);
  full.train(small_tiles(), {}, {.on_step = [&](int e, std::int64_t, const LossBreakdown& b) {
               if (e == 1) straight.push_back(b);
             }});

  const auto dir = fresh_dir("pathosr_resume");
  auto first = cfg;
  first.epochs = 1;
  Trainer part(first);
  part.train(small_tiles(), {}, {.out_dir = dir});

  std::vector<LossBreakdown> resumed;
  Trainer again(cfg);
  again.restore(dir / "checkpoints" / "epoch_0001");
  EXPECT_EQ(again.completed_epochs(), 1);
  EXPECT_EQ(again.global_step(), 5);
  again.train(small_tiles(), {}, {.on_step = [&](int, std::int64_t, const LossBreakdown& b) {
                resumed.push_back(b);
              }});
  ASSERT_EQ(resumed.size(), straight.size());
  for (std::size_t i = 0; i < resumed.size(); ++i) EXPECT_EQ(resumed[i], straight[i]) << i;
  for (std::size_t i = 0; i < full.generator()->parameters().size(); ++i)
    EXPECT_TRUE(torch::equal(full.generator()->parameters()[i], again.generator()->parameters()[i]));
  fs::remove_all(dir);
}

TEST(Trainer, RestoreRejectsOtherArchitecture) {
  const auto dir = fresh_dir("pathosr_wrong_arch");
  Trainer(quick_config()).save(dir);
  auto paper = TrainConfig{};
  Trainer big(paper);
  EXPECT_THROW(big.restore(dir), DataError);
  EXPECT_THROW(big.restore(dir / "missing"), DataError);
  fs::remove_all(dir);
}

TEST(Validate, LevelsAndCounts) {
  Trainer t(quick_config());
  const auto report = t.validate(small_tiles());
  ASSERT_EQ(report.per_level.size(), 3u);
  for (auto level : kGeneratedLevels) {
    const auto& m = report.per_level.at(level);
    EXPECT_EQ(m.n, 3);
    EXPECT_GE(m.mean_ssim, -1.0);
    EXPECT_LE(m.mean_ssim, 1.0);
  }
}

TEST(Validate, ZeroResidualMatchesHeadTailPath) {
  Trainer t(quick_config());
  t.generator()->zero_residual_branches();
  const auto report = t.validate(small_tiles());

  torch::NoGradGuard no_grad;
  t.generator()->eval();
  std::array<double, 3> psnr_sum{};
  for (const auto& tile : small_tiles()) {
    auto x = to_tensor(tile.at(MagLevel::k5X));
    for (int k = 0; k < 3; ++k) {
      x = t.generator()->stages()[k]->forward_trunk_bypassed(x);
      psnr_sum[k] += psnr(to_image(x), tile.at(kGeneratedLevels[k]));
    }
  }
  for (int k = 0; k < 3; ++k) {
    const auto& m = report.per_level.at(kGeneratedLevels[k]);
    EXPECT_TRUE(std::isfinite(m.mean_psnr));
    EXPECT_NEAR(m.mean_psnr, psnr_sum[k] / 3.0, 1e-4);
  }
}

TEST(Validate, MatchesOfflineEvaluationOfCheckpoint) {
  auto cfg = quick_config();
  cfg.epochs = 1;
  cfg.steps_per_epoch = 2;
  const auto dir = fresh_dir("pathosr_validate_vs_eval");
  Trainer t(cfg);
  t.train(small_tiles(), small_tiles(), {.out_dir = dir});
  const auto ckpt = dir / "checkpoints" / "epoch_0001";
  const auto meta = read_checkpoint_meta(ckpt);
  auto generator = load_generator(ckpt);
  const auto offline = evaluate_generator(generator, small_tiles()).report;
  const auto stored = meta.at("validation");
  ASSERT_EQ(stored.size(), 3u);
  for (const auto& entry : stored) {
    const auto level = *parse_mag_level(entry.at("level").get<std::string>());
    const auto& m = offline.per_level.at(level);
    EXPECT_NEAR(entry.at("mean_psnr").get<double>(), m.mean_psnr, 1e-9);
    EXPECT_NEAR(entry.at("mean_ssim").get<double>(), m.mean_ssim, 1e-9);
    EXPECT_EQ(entry.at("n").get<int>(), m.n);
  }
  fs::remove_all(dir);
}
