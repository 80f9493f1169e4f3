#include "pathosr/evaluation.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "pathosr/errors.hpp"

namespace pathosr {

namespace {

void check_levels(const TilePyramid& tile) {
  for (auto level : kAllLevels) {
    if (tile.at(level).empty()) {
      throw DataError("tile " + tile.tile_id + " lacks level " + std::string(to_string(level)));
    }
  }
}

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

Evaluation evaluate_generator(Generator& generator, std::span<const TilePyramid> tiles) {
  Evaluation ev;
  for (const auto& tile : tiles) {
    check_levels(tile);
    const auto out = generator->generate(tile.at(MagLevel::k5X));
    for (auto level : kGeneratedLevels) {
      const auto& real = tile.at(level);
      const auto& fake = out.at(level);
      ev.rows.push_back({tile.tile_id, level, psnr(fake, real), ssim(fake, real)});
    }
  }
  ev.report = summarize(ev.rows);
  return ev;
}

Evaluation evaluate_bicubic(std::span<const TilePyramid> tiles) {
  Evaluation ev;
  for (const auto& tile : tiles) {
    check_levels(tile);
    const auto& lr = tile.at(MagLevel::k5X);
    for (auto level : kGeneratedLevels) {
      const int s = scale_from_5x(level);
      const auto up = bicubic_resize(lr, lr.height() * s, lr.width() * s);
      const auto& real = tile.at(level);
      ev.rows.push_back({tile.tile_id, level, psnr(up, real), ssim(up, real)});
    }
  }
  ev.report = summarize(ev.rows);
  return ev;
}

MetricReport summarize(std::span<const TileMetricRow> rows) {
  std::map<MagLevel, MetricAccumulator> acc;
  for (const auto& row : rows) acc[row.level].add(row.psnr, row.ssim);
  MetricReport report;
  for (const auto& [level, a] : acc) report.per_level[level] = a.result();
  return report;
}

void to_json(nlohmann::json& j, const MetricReport& report) {
  j = nlohmann::json::array();
  for (const auto& [level, m] : report.per_level) {
    j.push_back({{"level", std::string(to_string(level))},
                 {"mean_psnr", number_or_null(m.mean_psnr)},
                 {"mean_ssim", m.mean_ssim},
                 {"n", m.n},
                 {"n_infinite_psnr", m.n_infinite_psnr}});
  }
}

void to_json(nlohmann::json& j, const TileMetricRow& row) {
  j = {{"tile_id", row.tile_id},
       {"level", std::string(to_string(row.level))},
       {"psnr", number_or_null(row.psnr)},
       {"ssim", row.ssim}};
}

}  // namespace pathosr
