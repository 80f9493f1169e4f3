#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pathosr/dataset.hpp"
#include "pathosr/image.hpp"

namespace pathosr::cli {

inline constexpr int kReportSchema = 1;

struct PrepareOptions {
  std::filesystem::path input_dir;
  std::filesystem::path output_dir;
  int tile_size = 1024;
  std::string splits = "train:0.8,test:0.2";
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Tiles every image in input_dir, builds the pyramids, writes
/// <out>/<split>/<level>/<tile_id>.png and <out>/manifest.jsonl.
std::vector<TileRecord> cmd_prepare(const PrepareOptions& options);

struct TrainOptions {
  std::filesystem::path config;
  std::filesystem::path manifest;
  std::filesystem::path out;
  std::filesystem::path resume;  // checkpoint directory, optional
  std::uint64_t seed_override = 0;
  bool has_seed_override = false;
};

/// Returns the last checkpoint directory written.
std::filesystem::path cmd_train(const TrainOptions& options);

struct InferOptions {
  std::filesystem::path ckpt;
  std::filesystem::path input;
  std::vector<MagLevel> levels{MagLevel::k10X, MagLevel::k20X, MagLevel::k40X};
  std::filesystem::path out;
  int workers = 1;
};

/// Writes <out>/<level>/<input stem>.png per requested level.
std::vector<std::filesystem::path> cmd_infer(const InferOptions& options);

struct EvaluateOptions {
  std::filesystem::path ckpt;
  std::filesystem::path manifest;
  Split split = Split::kTest;
  std::filesystem::path report;
};

nlohmann::json cmd_evaluate(const EvaluateOptions& options);

struct GridOptions {
  std::vector<std::filesystem::path> images;
  std::vector<std::string> labels;
  std::filesystem::path out;
};

inline constexpr int kGridGutter = 8;
inline constexpr int kGridLabelHeight = 28;

/// Side-by-side panel of equally sized images, each with a caption strip.
/// Width is the sum of the image widths plus one gutter between neighbours.
Image cmd_grid(const GridOptions& options);

std::vector<MagLevel> parse_levels(const std::string& text);

/// Reference means reported for the full-scale model; annotations only.
nlohmann::json paper_reference();

}  // namespace pathosr::cli
