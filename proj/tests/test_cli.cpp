#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <sys/wait.h>

#include "commands.hpp"
#include "pathosr/errors.hpp"
#include "pathosr/image_io.hpp"
#include "pathosr/imaging.hpp"
#include "pathosr/synthetic.hpp"

using namespace pathosr;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "pathosr_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(PATHOSR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    fs::remove_all(kRoot);
    fs::create_directories(kRoot / "sources");
    // Tiles are 256px so the 5X level is 32px, one tiny training patch.
    write_png(kRoot / "sources" / "slide_a.png", synthetic_tissue(520, 800, 1));
    write_png(kRoot / "sources" / "slide_b.png", synthetic_tissue(300, 260, 2));
    write_png(kRoot / "sources" / "slide_c.png", synthetic_tissue(512, 512, 3));
    std::ofstream cfg(kRoot / "tiny.cfg");
    cfg << "profile = tiny\nepochs = 1\nsteps_per_epoch = 2\npatches_per_image = 2\n"
           "validation_fraction = 0\n";
    cfg.close();
    prepare_status_ = run("prepare --input-dir " + (kRoot / "sources").string() +
                          " --output-dir " + (kRoot / "data").string() +
                          " --tile-size 256 --splits train:0.6,test:0.4 --seed 3");
    train_status_ = run("train --config " + (kRoot / "tiny.cfg").string() + " --manifest " +
                        (kRoot / "data" / "manifest.jsonl").string() + " --out " +
                        (kRoot / "run").string());
  }

  static int prepare_status_;
  static int train_status_;
};

int CliTest::prepare_status_ = -1;
int CliTest::train_status_ = -1;

}  // namespace

TEST_F(CliTest, PrepareWritesManifestAndLevels) {
  ASSERT_EQ(prepare_status_, 0);
  const auto recs = read_manifest(kRoot / "data" / "manifest.jsonl");
  // floor(520/256)*floor(800/256) + 1*1 + 2*2
  EXPECT_EQ(recs.size(), 6u + 1u + 4u);
  std::map<std::string, std::set<Split>> per_source;
  std::set<Split> seen;
  for (const auto& r : recs) {
    per_source[r.source_image.filename().string()].insert(r.split);
    seen.insert(r.split);
    for (auto level : kAllLevels) {
      const auto path = kRoot / "data" / r.paths.at(level);
      ASSERT_TRUE(fs::exists(path)) << path;
      EXPECT_EQ(path.parent_path().filename().string(), std::string(to_string(level)));
      EXPECT_EQ(path.parent_path().parent_path().filename().string(),
                std::string(to_string(r.split)));
    }
    EXPECT_EQ(read_image(kRoot / "data" / r.paths.at(MagLevel::k5X)).height(), 32);
  }
  for (const auto& [source, splits] : per_source) EXPECT_EQ(splits.size(), 1u) << source;
  EXPECT_TRUE(seen.count(Split::kTrain));
  EXPECT_TRUE(seen.count(Split::kTest));
}

TEST_F(CliTest, PrepareIsDeterministic) {
  ASSERT_EQ(prepare_status_, 0);
  ASSERT_EQ(run("prepare --input-dir " + (kRoot / "sources").string() + " --output-dir " +
                (kRoot / "data2").string() +
                " --tile-size 256 --splits train:0.6,test:0.4 --seed 3 --workers 2"),
            0);
  EXPECT_EQ(slurp(kRoot / "data" / "manifest.jsonl"), slurp(kRoot / "data2" / "manifest.jsonl"));
}

TEST_F(CliTest, PrepareErrors) {
  fs::create_directories(kRoot / "empty");
  EXPECT_EQ(run("prepare --input-dir " + (kRoot / "empty").string() + " --output-dir " +
                (kRoot / "x").string()),
            2);
  fs::create_directories(kRoot / "broken");
  std::ofstream(kRoot / "broken" / "bad.png") << "not an image";
  EXPECT_NE(run("prepare --input-dir " + (kRoot / "broken").string() + " --output-dir " +
                (kRoot / "y").string()),
            0);
}

TEST_F(CliTest, TrainWritesCheckpointLogAndConfigEcho) {
  ASSERT_EQ(train_status_, 0);
  EXPECT_TRUE(fs::exists(kRoot / "run" / "checkpoints" / "epoch_0001" / "generator.pt"));
  EXPECT_TRUE(fs::exists(kRoot / "run" / "effective_config.txt"));
  const auto echo = slurp(kRoot / "run" / "effective_config.txt");
  EXPECT_NE(echo.find("learning_rate = 0.0004"), std::string::npos);
  EXPECT_NE(echo.find("steps_per_epoch = 2"), std::string::npos);
}

TEST_F(CliTest, TrainResumeContinuesLog) {
  ASSERT_EQ(train_status_, 0);
  fs::copy(kRoot / "run", kRoot / "resumed", fs::copy_options::recursive);
  std::ofstream cfg(kRoot / "two.cfg");
  cfg << "profile = tiny\nepochs = 2\nsteps_per_epoch = 2\npatches_per_image = 2\n"
         "validation_fraction = 0\n";
  cfg.close();
  ASSERT_EQ(run("train --config " + (kRoot / "two.cfg").string() + " --manifest " +
                (kRoot / "data" / "manifest.jsonl").string() + " --out " +
                (kRoot / "resumed").string() + " --resume " +
                (kRoot / "resumed" / "checkpoints" / "epoch_0001").string()),
            0);
  std::ifstream log(kRoot / "resumed" / "train_log.jsonl");
  std::vector<nlohmann::json> lines;
  for (std::string line; std::getline(log, line);) lines.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[2].at("epoch").get<int>(), 1);
  EXPECT_EQ(lines[2].at("step").get<int>(), 3);
  EXPECT_TRUE(fs::exists(kRoot / "resumed" / "checkpoints" / "epoch_0002"));
}

TEST_F(CliTest, TrainRejectsUnknownKey) {
  std::ofstream(kRoot / "bad.cfg") << "profile = tiny\nlearning_rat = 0.1\n";
  EXPECT_EQ(run("train --config " + (kRoot / "bad.cfg").string() + " --manifest " +
                (kRoot / "data" / "manifest.jsonl").string() + " --out " +
                (kRoot / "bad_run").string()),
            1);
  try {
    cli::TrainOptions opt;
    opt.config = kRoot / "bad.cfg";
    opt.manifest = kRoot / "data" / "manifest.jsonl";
    opt.out = kRoot / "bad_run";
    cli::cmd_train(opt);
    FAIL();
  } catch (const pathosr::UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("learning_rat"), std::string::npos);
  }
}

TEST_F(CliTest, InferDimensionsAndDeterminism) {
  ASSERT_EQ(train_status_, 0);
  write_png(kRoot / "input.png", synthetic_tissue(128, 128, 9));
  const auto ckpt = (kRoot / "run" / "checkpoints" / "epoch_0001").string();
  ASSERT_EQ(run("infer --ckpt " + ckpt + " --input " + (kRoot / "input.png").string() +
                " --out " + (kRoot / "sr").string()),
            0);
  for (auto [level, size] : {std::pair{"10X", 256}, {"20X", 512}, {"40X", 1024}}) {
    const auto img = read_image(kRoot / "sr" / level / "input.png");
    EXPECT_EQ(img.height(), size);
    EXPECT_EQ(img.width(), size);
  }
  ASSERT_EQ(run("infer --ckpt " + ckpt + " --input " + (kRoot / "input.png").string() +
                " --levels 40X --out " + (kRoot / "sr40").string()),
            0);
  EXPECT_FALSE(fs::exists(kRoot / "sr40" / "10X"));
  EXPECT_EQ(slurp(kRoot / "sr40" / "40X" / "input.png"), slurp(kRoot / "sr" / "40X" / "input.png"));

  write_png(kRoot / "wide.png", synthetic_tissue(140, 300, 4));
  ASSERT_EQ(run("infer --ckpt " + ckpt + " --input " + (kRoot / "wide.png").string() +
                " --levels 10X --out " + (kRoot / "sr").string()),
            0);
  const auto wide = read_image(kRoot / "sr" / "10X" / "wide.png");
  EXPECT_EQ(wide.height(), 280);
  EXPECT_EQ(wide.width(), 600);

  EXPECT_EQ(run("infer --ckpt " + (kRoot / "nope").string() + " --input " +
                (kRoot / "input.png").string() + " --out " + (kRoot / "sr").string()),
            2);
  EXPECT_EQ(run("infer --ckpt " + ckpt + " --input " + (kRoot / "missing.png").string() +
                " --out " + (kRoot / "sr").string()),
            2);
  EXPECT_EQ(run("infer --ckpt " + ckpt + " --input " + (kRoot / "input.png").string() +
                " --levels 15X --out " + (kRoot / "sr").string()),
            1);
}

TEST_F(CliTest, EvaluateReportIsConsistent) {
  ASSERT_EQ(train_status_, 0);
  const auto report_path = kRoot / "report.json";
  ASSERT_EQ(run("evaluate --ckpt " + (kRoot / "run" / "checkpoints" / "epoch_0001").string() +
                " --manifest " + (kRoot / "data" / "manifest.jsonl").string() +
                " --split test --report " + report_path.string()),
            0);
  const auto report = nlohmann::json::parse(slurp(report_path));
  EXPECT_EQ(report.at("schema").get<int>(), 1);
  EXPECT_TRUE(report.contains("config_hash"));
  EXPECT_EQ(report.at("checkpoint").at("epoch").get<int>(), 1);
  EXPECT_EQ(report.at("paper_reference"), cli::paper_reference());

  const auto records = read_manifest(kRoot / "data" / "manifest.jsonl");
  std::vector<TilePyramid> test_tiles;
  for (const auto& r : records)
    if (r.split == Split::kTest) test_tiles.push_back(load_pyramid(r, kRoot / "data"));

  for (const auto* section : {&report, &report.at("baseline")}) {
    const auto& rows = section->at("tiles");
    for (const auto& m : section->at("metrics")) {
      const auto level = m.at("level").get<std::string>();
      double psnr_sum = 0, ssim_sum = 0;
      int n = 0, n_psnr = 0;
      for (const auto& row : rows) {
        if (row.at("level") != level) continue;
        ++n;
        ssim_sum += row.at("ssim").get<double>();
        if (!row.at("psnr").is_null()) {
          psnr_sum += row.at("psnr").get<double>();
          ++n_psnr;
        }
      }
      EXPECT_EQ(m.at("n").get<int>(), n);
      EXPECT_EQ(n, static_cast<int>(test_tiles.size()));
      EXPECT_NEAR(m.at("mean_ssim").get<double>(), ssim_sum / n, 1e-9);
      if (n_psnr > 0) EXPECT_NEAR(m.at("mean_psnr").get<double>(), psnr_sum / n_psnr, 1e-9);
    }
  }

  // Bicubic baseline recomputed directly from the stored levels.
  for (const auto& row : report.at("baseline").at("tiles")) {
    const auto level = *parse_mag_level(row.at("level").get<std::string>());
    for (const auto& t : test_tiles) {
      if (t.tile_id != row.at("tile_id").get<std::string>()) continue;
      const auto& lr = t.at(MagLevel::k5X);
      const int s = scale_from_5x(level);
      const auto up = bicubic_resize(lr, lr.height() * s, lr.width() * s);
      EXPECT_NEAR(row.at("ssim").get<double>(), ssim(up, t.at(level)), 1e-9);
      EXPECT_NEAR(row.at("psnr").get<double>(), psnr(up, t.at(level)), 1e-9);
    }
  }
}

TEST_F(CliTest, EvaluateEmptySplitFails) {
  ASSERT_EQ(train_status_, 0);
  EXPECT_EQ(run("evaluate --ckpt " + (kRoot / "run" / "checkpoints" / "epoch_0001").string() +
                " --manifest " + (kRoot / "data" / "manifest.jsonl").string() +
                " --split val --report " + (kRoot / "r.json").string()),
            2);
}

TEST_F(CliTest, GridLayout) {
  write_png(kRoot / "g1.png", Image::constant(40, 50, 0.2f));
  write_png(kRoot / "g2.png", Image::constant(40, 50, 0.5f));
  write_png(kRoot / "g3.png", Image::constant(40, 50, 0.8f));
  write_png(kRoot / "g4.png", Image::constant(41, 50, 0.8f));
  const auto out = kRoot / "grid.png";
  ASSERT_EQ(run("grid --images " + (kRoot / "g1.png").string() + "," + (kRoot / "g2.png").string() +
                "," + (kRoot / "g3.png").string() + " --labels real,generated,bicubic --out " +
                out.string()),
            0);
  const auto grid = read_image(out);
  EXPECT_EQ(grid.width(), 3 * 50 + 2 * cli::kGridGutter);
  EXPECT_EQ(grid.height(), 40 + cli::kGridLabelHeight);
  EXPECT_EQ(run("grid --images " + (kRoot / "g1.png").string() + " --out " + out.string()), 1);
  EXPECT_NE(run("grid --images " + (kRoot / "g1.png").string() + "," +
                (kRoot / "g4.png").string() + " --out " + out.string()),
            0);
}

TEST_F(CliTest, UsageExitCodes) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("bogus"), 1);
  EXPECT_EQ(run("infer --input x.png"), 1);
  EXPECT_EQ(run("--help"), 0);
}

TEST(CliParsing, Levels) {
  EXPECT_EQ(cli::parse_levels("10X,40X"), (std::vector<MagLevel>{MagLevel::k10X, MagLevel::k40X}));
  EXPECT_THROW(cli::parse_levels("5X"), pathosr::UsageError);
  EXPECT_THROW(cli::parse_levels("30X"), pathosr::UsageError);
}
