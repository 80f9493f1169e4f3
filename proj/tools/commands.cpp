#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <opencv2/imgproc.hpp>

#include "pathosr/checkpoint.hpp"
#include "pathosr/config_file.hpp"
#include "pathosr/errors.hpp"
#include "pathosr/evaluation.hpp"
#include "pathosr/image_io.hpp"
#include "pathosr/inference.hpp"
#include "pathosr/trainer.hpp"

namespace pathosr::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::pair<Split, double>> parse_splits(const std::string& text) {
  std::vector<std::pair<Split, double>> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw UsageError("--splits expects name:fraction pairs");
    double fraction = 0.0;
    try {
      fraction = std::stod(item.substr(colon + 1));
    } catch (const std::exception&) {
      throw UsageError("--splits: bad fraction in '" + item + "'");
    }
    out.emplace_back(parse_split(item.substr(0, colon)), fraction);
  }
  return out;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::vector<TilePyramid> load_split(const std::vector<TileRecord>& records, Split split,
                                    const fs::path& base) {
  std::vector<TilePyramid> out;
  for (const auto& r : records) {
    if (r.split == split) out.push_back(load_pyramid(r, base));
  }
  return out;
}

}  // namespace

std::vector<MagLevel> parse_levels(const std::string& text) {
  std::vector<MagLevel> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    auto level = parse_mag_level(item);
    if (!level || *level == MagLevel::k5X) {
      throw UsageError("--levels: '" + item + "' is not one of 10X, 20X, 40X");
    }
    if (std::find(out.begin(), out.end(), *level) == out.end()) out.push_back(*level);
  }
  if (out.empty()) throw UsageError("--levels is empty");
  return out;
}

json paper_reference() {
  return {{"note",
           "means reported for the full-scale model on 20,000 test tiles; a desk-scale model is "
           "not expected to reach them"},
          {"psnr", {{"10X", 24.167}, {"20X", 22.272}, {"40X", 20.436}}},
          {"ssim", {{"10X", 0.845}, {"20X", 0.680}, {"40X", 0.512}}}};
}

std::vector<TileRecord> cmd_prepare(const PrepareOptions& options) {
  if (!fs::is_directory(options.input_dir)) {
    throw DataError("input directory not found: " + options.input_dir.string());
  }
  std::vector<fs::path> sources;
  for (const auto& entry : fs::directory_iterator(options.input_dir)) {
    if (entry.is_regular_file() && entry.path().filename().string().front() != '.') {
      sources.push_back(entry.path());
    }
  }
  std::sort(sources.begin(), sources.end());
  if (sources.empty()) throw DataError("no images in " + options.input_dir.string());
  std::set<std::string> stems;
  for (const auto& s : sources) {
    if (!stems.insert(s.stem().string()).second) {
      throw DataError("two sources share the name '" + s.stem().string() + "'");
    }
  }

  const auto labels = assign_splits(sources.size(), parse_splits(options.splits), options.seed);

  std::vector<std::vector<TileRecord>> per_source(sources.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < sources.size(); i = next++) {
      try {
        const Image source = read_image(sources[i]);
        const std::string id = sources[i].stem().string();
        auto records = tile_image(source, id, options.tile_size);
        for (auto& rec : records) {
          rec.source_image = sources[i];
          rec.split = labels[i];
          const auto pyramid = build_pyramid(
              source.crop(rec.origin.row, rec.origin.col, options.tile_size, options.tile_size),
              options.tile_size);
          for (auto level : kAllLevels) {
            const fs::path rel = fs::path(std::string(to_string(rec.split))) /
                                 std::string(to_string(level)) / (rec.tile_id + ".png");
            write_png(options.output_dir / rel, pyramid.at(level));
            rec.paths[level] = rel;
          }
        }
        per_source[i] = std::move(records);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < options.workers; ++w) pool.emplace_back(work);
    work();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<TileRecord> manifest;
  for (auto& recs : per_source) {
    for (auto& r : recs) manifest.push_back(std::move(r));
  }
  write_manifest(options.output_dir / "manifest.jsonl", manifest);
  return manifest;
}

fs::path cmd_train(const TrainOptions& options) {
  TrainConfig cfg = load_train_config(options.config);
  if (options.has_seed_override) cfg.seed = options.seed_override;

  const auto records = read_manifest(options.manifest);
  const auto base = options.manifest.parent_path();
  auto [train_tiles, val_tiles] =
      split_validation(load_split(records, Split::kTrain, base), cfg.val_fraction);
  for (auto& t : load_split(records, Split::kVal, base)) val_tiles.push_back(std::move(t));
  if (train_tiles.empty()) throw DataError("manifest has no training tiles");

  std::error_code ec;
  fs::create_directories(options.out, ec);
  std::ofstream echo(options.out / "effective_config.txt");
  if (ec || !echo) throw DataError("cannot write to " + options.out.string());
  echo << format_train_config(cfg);
  echo.close();

  Trainer trainer(cfg);
  if (!options.resume.empty()) trainer.restore(options.resume);
  pathosr::TrainOptions run;
  run.out_dir = options.out;
  trainer.train(train_tiles, val_tiles, run);

  std::ostringstream name;
  name << "epoch_" << std::setw(4) << std::setfill('0') << trainer.completed_epochs();
  return options.out / "checkpoints" / name.str();
}

std::vector<fs::path> cmd_infer(const InferOptions& options) {
  Generator generator = load_generator(options.ckpt);
  const Image input = read_image(options.input);
  StitchPlan plan;
  const int shorter = std::min(input.height(), input.width());
  const bool single_tile = input.height() <= plan.tile && input.width() <= plan.tile;
  if (!single_tile && shorter < plan.tile) {
    plan.tile = shorter;
    plan.overlap = std::min(plan.overlap, plan.tile / 4);
  }

  std::vector<fs::path> written;
  for (auto level : options.levels) {
    const Image out = single_tile
                          ? super_resolve_tile(input, level, generator)
                          : super_resolve_image(input, level, generator, plan, options.workers);
    const fs::path path =
        options.out / std::string(to_string(level)) / (options.input.stem().string() + ".png");
    write_png(path, out);
    written.push_back(path);
  }
  return written;
}

json cmd_evaluate(const EvaluateOptions& options) {
  const auto meta = read_checkpoint_meta(options.ckpt);
  Generator generator = load_generator(options.ckpt);
  const auto records = read_manifest(options.manifest);
  const auto tiles = load_split(records, options.split, options.manifest.parent_path());
  if (tiles.empty()) {
    throw DataError("split '" + std::string(to_string(options.split)) + "' has no tiles");
  }
  const auto model = evaluate_generator(generator, tiles);
  const auto baseline = evaluate_bicubic(tiles);

  const std::string config_text =
      meta.at("generator_config").dump() + meta.value("train_config", std::string());
  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << fnv1a(config_text);

  json report = {
      {"schema", kReportSchema},
      {"checkpoint",
       {{"path", options.ckpt.generic_string()},
        {"epoch", meta.value("epoch", 0)},
        {"step", meta.value("step", 0)}}},
      {"config_hash", hash.str()},
      {"split", std::string(to_string(options.split))},
      {"metrics", model.report},
      {"tiles", model.rows},
      {"baseline", {{"method", "bicubic"}, {"metrics", baseline.report}, {"tiles", baseline.rows}}},
      {"paper_reference", paper_reference()}};

  if (!options.report.empty()) {
    if (options.report.has_parent_path()) fs::create_directories(options.report.parent_path());
    std::ofstream out(options.report);
    if (!out) throw DataError("cannot write " + options.report.string());
    out << report.dump(2) << '\n';
  }
  return report;
}

Image cmd_grid(const GridOptions& options) {
  if (options.images.size() < 2) throw UsageError("grid needs at least two images");
  if (!options.labels.empty() && options.labels.size() != options.images.size()) {
    throw UsageError("grid: " + std::to_string(options.labels.size()) + " labels for " +
                     std::to_string(options.images.size()) + " images");
  }
  std::vector<Image> images;
  for (const auto& p : options.images) images.push_back(read_image(p));
  for (const auto& img : images) {
    if (!img.same_shape(images.front())) throw DataError("grid: images differ in size");
  }

  const int h = images.front().height();
  const int w = images.front().width();
  const int n = static_cast<int>(images.size());
  const int panel_w = n * w + (n - 1) * kGridGutter;
  Image panel(h + kGridLabelHeight, panel_w, 1.0f);
  for (int i = 0; i < n; ++i) panel.paste(images[i], kGridLabelHeight, i * (w + kGridGutter));

  if (!options.labels.empty()) {
    cv::Mat strip(kGridLabelHeight, panel_w, CV_8UC1, cv::Scalar(255));
    for (int i = 0; i < n; ++i) {
      cv::putText(strip, options.labels[i], cv::Point(i * (w + kGridGutter) + 4, 20),
                  cv::FONT_HERSHEY_SIMPLEX, 0.55, cv::Scalar(0), 1, cv::LINE_AA);
    }
    for (int y = 0; y < kGridLabelHeight; ++y) {
      for (int x = 0; x < panel_w; ++x) {
        const float v = strip.at<unsigned char>(y, x) / 255.0f;
        for (int c = 0; c < 3; ++c) panel.at(y, x, c) = v;
      }
    }
  }
  if (!options.out.empty()) write_png(options.out, panel);
  return panel;
}

}  // namespace pathosr::cli
