#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pathosr/dataset.hpp"
#include "pathosr/generator.hpp"
#include "pathosr/imaging.hpp"

namespace pathosr {

struct TileMetricRow {
  std::string tile_id;
  MagLevel level = MagLevel::k10X;
  double psnr = 0.0;  // kPsnrIdentical when the quantized images match
  double ssim = 0.0;
};

struct Evaluation {
  MetricReport report;
  std::vector<TileMetricRow> rows;
};

/// Runs the generator on each tile's 5X image and scores 10X/20X/40X against
/// the real levels.
Evaluation evaluate_generator(Generator& generator, std::span<const TilePyramid> tiles);

/// Same scoring for plain bicubic upsampling of the 5X image.
Evaluation evaluate_bicubic(std::span<const TilePyramid> tiles);

/// Per-level means of the rows; infinite PSNRs are counted, not averaged.
MetricReport summarize(std::span<const TileMetricRow> rows);

/// [{level, mean_psnr, mean_ssim, n, n_infinite_psnr}, ...]; an infinite
/// PSNR is written as null.
void to_json(nlohmann::json& j, const MetricReport& report);
void to_json(nlohmann::json& j, const TileMetricRow& row);

}  // namespace pathosr
