#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <c10/util/Exception.h>

#include "commands.hpp"
#include "pathosr/errors.hpp"

namespace {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

// PATHOSR_SEED, when set, wins over --seed.
bool seed_from_env(std::uint64_t& seed) {
  const char* env = std::getenv("PATHOSR_SEED");
  if (env == nullptr || *env == '\0') return false;
  try {
    seed = std::stoull(env);
  } catch (const std::exception&) {
    throw pathosr::UsageError("PATHOSR_SEED is not an unsigned integer");
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = pathosr::cli;
  CLI::App app{"pathosr: multi-scale super-resolution of low-magnification pathology scans"};
  app.require_subcommand(1);

  cli::PrepareOptions prepare;
  auto* prepare_cmd = app.add_subcommand("prepare", "Tile source images and build 40X-5X pyramids");
  prepare_cmd->add_option("--input-dir", prepare.input_dir, "Directory of source images")->required();
  prepare_cmd->add_option("--output-dir", prepare.output_dir, "Dataset root")->required();
  prepare_cmd->add_option("--tile-size", prepare.tile_size, "40X tile edge in pixels")
      ->capture_default_str();
  prepare_cmd->add_option("--splits", prepare.splits, "Per-source split fractions")
      ->capture_default_str();
  prepare_cmd->add_option("--seed", prepare.seed, "Split assignment seed")->capture_default_str();
  prepare_cmd->add_option("--workers", prepare.workers, "Parallel source workers")
      ->capture_default_str();

  cli::TrainOptions train;
  std::uint64_t train_seed = 0;
  auto* train_cmd = app.add_subcommand("train", "Train the generator and discriminator");
  train_cmd->add_option("--config", train.config, "key = value hyperparameter file")->required();
  train_cmd->add_option("--manifest", train.manifest, "Dataset manifest (JSON lines)")->required();
  train_cmd->add_option("--out", train.out, "Output root for checkpoints and logs")->required();
  train_cmd->add_option("--resume", train.resume, "Checkpoint directory to continue from");
  auto* train_seed_opt = train_cmd->add_option("--seed", train_seed, "Overrides the config seed");

  cli::InferOptions infer;
  std::string infer_levels = "10X,20X,40X";
  auto* infer_cmd = app.add_subcommand("infer", "Super-resolve a 5X image");
  infer_cmd->add_option("--ckpt", infer.ckpt, "Checkpoint directory")->required();
  infer_cmd->add_option("--input", infer.input, "5X input image")->required();
  infer_cmd->add_option("--levels", infer_levels, "Comma-separated target levels")
      ->capture_default_str();
  infer_cmd->add_option("--out", infer.out, "Output root")->required();
  infer_cmd->add_option("--workers", infer.workers, "Parallel tile workers")->capture_default_str();

  cli::EvaluateOptions evaluate;
  std::string eval_split = "test";
  auto* eval_cmd = app.add_subcommand("evaluate", "PSNR/SSIM of a checkpoint against real levels");
  eval_cmd->add_option("--ckpt", evaluate.ckpt, "Checkpoint directory")->required();
  eval_cmd->add_option("--manifest", evaluate.manifest, "Dataset manifest")->required();
  eval_cmd->add_option("--split", eval_split, "train, val or test")->capture_default_str();
  eval_cmd->add_option("--report", evaluate.report, "JSON report path")->required();

  cli::GridOptions grid;
  auto* grid_cmd = app.add_subcommand("grid", "Side-by-side comparison panel");
  grid_cmd->add_option("--images", grid.images, "Images to place left to right")
      ->required()
      ->delimiter(',');
  grid_cmd->add_option("--labels", grid.labels, "One caption per image")->delimiter(',');
  grid_cmd->add_option("--out", grid.out, "Output PNG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*prepare_cmd) {
      seed_from_env(prepare.seed);
      const auto manifest = cli::cmd_prepare(prepare);
      std::cout << "wrote " << manifest.size() << " tiles to "
                << (prepare.output_dir / "manifest.jsonl").string() << '\n';
    } else if (*train_cmd) {
      std::uint64_t env_seed = 0;
      if (seed_from_env(env_seed)) {
        train.seed_override = env_seed;
        train.has_seed_override = true;
      } else if (*train_seed_opt) {
        train.seed_override = train_seed;
        train.has_seed_override = true;
      }
      const auto last = cli::cmd_train(train);
      std::cout << "final checkpoint: " << last.string() << '\n';
    } else if (*infer_cmd) {
      infer.levels = cli::parse_levels(infer_levels);
      for (const auto& p : cli::cmd_infer(infer)) std::cout << p.string() << '\n';
    } else if (*eval_cmd) {
      evaluate.split = pathosr::parse_split(eval_split);
      const auto report = cli::cmd_evaluate(evaluate);
      std::cout << report.at("metrics").dump(2) << '\n';
    } else if (*grid_cmd) {
      cli::cmd_grid(grid);
      std::cout << grid.out.string() << '\n';
    }
  } catch (const pathosr::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const pathosr::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const c10::Error& e) {
    std::cerr << "error: " << e.what_without_backtrace() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}
