#include "pathosr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "pathosr/errors.hpp"
#include "pathosr/image_io.hpp"
#include "pathosr/imaging.hpp"

namespace pathosr {

using nlohmann::json;

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "val") return Split::kVal;
  if (text == "test") return Split::kTest;
  throw UsageError("unknown split '" + std::string(text) + "'");
}

double flatness_value(int epoch, const FlatnessSchedule& schedule) {
  if (epoch < 0) throw UsageError("flatness_value: negative epoch");
  const int steps = epoch / schedule.period_epochs;
  return std::min(schedule.max, schedule.start + schedule.increment * steps);
}

std::vector<PixelOrigin> tile_origins(int height, int width, int tile_size) {
  std::vector<PixelOrigin> origins;
  for (int r = 0; r + tile_size <= height; r += tile_size) {
    for (int c = 0; c + tile_size <= width; c += tile_size) origins.push_back({r, c});
  }
  return origins;
}

std::vector<TileRecord> tile_image(const Image& source, const std::string& source_id,
                                   int tile_size) {
  if (tile_size < 128) throw UsageError("tile_size must be at least 128");
  if (source.height() < tile_size || source.width() < tile_size) {
    throw DataError("source " + source_id + " (" + std::to_string(source.height()) + "x" +
                    std::to_string(source.width()) + ") is smaller than one " +
                    std::to_string(tile_size) + "px tile");
  }
  std::vector<TileRecord> records;
  for (const auto& o : tile_origins(source.height(), source.width(), tile_size)) {
    TileRecord rec;
    rec.tile_id = source_id + "_r" + std::to_string(o.row) + "_c" + std::to_string(o.col);
    rec.origin = o;
    records.push_back(std::move(rec));
  }
  return records;
}

TilePyramid build_pyramid(const Image& tile40x, int tile_size) {
  if (tile_size % 8 != 0) throw UsageError("tile_size must be divisible by 8");
  if (tile40x.height() != tile_size || tile40x.width() != tile_size) {
    throw UsageError("build_pyramid expects a " + std::to_string(tile_size) + "x" +
                     std::to_string(tile_size) + " tile, got " +
                     std::to_string(tile40x.height()) + "x" + std::to_string(tile40x.width()));
  }
  TilePyramid p;
  p.at(MagLevel::k40X) = tile40x;
  for (int i = 2; i >= 0; --i) {
    const Image& parent = p.levels[i + 1];
    p.levels[i] = bicubic_resize(parent, parent.height() / 2, parent.width() / 2);
  }
  return p;
}

double patch_stddev(const Image& patch) {
  const auto v = patch.values();
  if (v.empty()) return 0.0;
  double mean = 0.0;
  for (float x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (float x : v) var += (x - mean) * (x - mean);
  return std::sqrt(var / static_cast<double>(v.size()));
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

PatchPair make_pair(const TilePyramid& tile, PixelOrigin o, int size) {
  PatchPair pair;
  pair.lr = tile.at(MagLevel::k5X).crop(o.row, o.col, size, size);
  for (auto level : kGeneratedLevels) {
    const int s = scale_from_5x(level);
    pair.hr[level_index(level) - 1] = tile.at(level).crop(o.row * s, o.col * s, size * s, size * s);
  }
  pair.source_tile = tile.tile_id;
  pair.lr_origin = o;
  return pair;
}

}  // namespace

std::uint64_t patch_seed(const std::string& tile_id, int epoch, std::uint64_t seed,
                         std::uint64_t draw) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ fnv1a(tile_id));
  h = splitmix64(h ^ static_cast<std::uint64_t>(epoch));
  return splitmix64(h ^ draw);
}

std::vector<PatchPair> sample_patches(const TilePyramid& tile, const SampleOptions& options) {
  for (auto level : kAllLevels) {
    if (tile.at(level).empty()) {
      throw DataError("tile " + tile.tile_id + " is missing pyramid level " +
                      std::string(to_string(level)));
    }
  }
  const Image& lr = tile.at(MagLevel::k5X);
  if (options.size < 1 || options.size > lr.height() || options.size > lr.width()) {
    throw UsageError("patch size does not fit the 5X tile");
  }
  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<int> pick_row(0, lr.height() - options.size);
  std::uniform_int_distribution<int> pick_col(0, lr.width() - options.size);

  struct Candidate {
    double stddev;
    PixelOrigin origin;
  };
  std::vector<PatchPair> accepted;
  std::vector<Candidate> rejected;
  const int max_attempts = 20 * options.count;
  for (int attempt = 0; attempt < max_attempts && static_cast<int>(accepted.size()) < options.count;
       ++attempt) {
    const PixelOrigin o{pick_row(rng), pick_col(rng)};
    const double sd = patch_stddev(lr.crop(o.row, o.col, options.size, options.size));
    if (sd > options.flatness) {
      auto pair = make_pair(tile, o, options.size);
      pair.stddev = sd;
      accepted.push_back(std::move(pair));
    } else {
      rejected.push_back({sd, o});
    }
  }

  const auto shortfall = static_cast<std::size_t>(options.count) - accepted.size();
  if (shortfall > 0) {
    std::stable_sort(rejected.begin(), rejected.end(),
                     [](const Candidate& a, const Candidate& b) { return a.stddev > b.stddev; });
    for (std::size_t i = 0; i < shortfall && i < rejected.size(); ++i) {
      auto pair = make_pair(tile, rejected[i].origin, options.size);
      pair.stddev = rejected[i].stddev;
      pair.flagged = true;
      accepted.push_back(std::move(pair));
    }
  }
  return accepted;
}

void write_manifest(const std::filesystem::path& path, const std::vector<TileRecord>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write manifest " + path.string());
  for (const auto& r : records) {
    json paths = json::object();
    for (const auto& [level, p] : r.paths) paths[std::string(to_string(level))] = p.generic_string();
    json j = {{"schema", kManifestSchema},
              {"tile_id", r.tile_id},
              {"source_image", r.source_image.generic_string()},
              {"origin", {r.origin.row, r.origin.col}},
              {"paths", paths},
              {"split", std::string(to_string(r.split))}};
    out << j.dump() << '\n';
  }
}

std::vector<TileRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read manifest " + path.string());
  std::vector<TileRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (j.value("schema", 0) != kManifestSchema) {
        throw DataError("unsupported manifest schema");
      }
      TileRecord r;
      r.tile_id = j.at("tile_id").get<std::string>();
      r.source_image = j.at("source_image").get<std::string>();
      r.origin = {j.at("origin").at(0).get<int>(), j.at("origin").at(1).get<int>()};
      for (const auto& [key, value] : j.at("paths").items()) {
        auto level = parse_mag_level(key);
        if (!level) throw DataError("unknown level '" + key + "'");
        r.paths[*level] = value.get<std::string>();
      }
      r.split = parse_split(j.at("split").get<std::string>());
      records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const UsageError& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

TilePyramid load_pyramid(const TileRecord& record, const std::filesystem::path& base_dir) {
  TilePyramid p;
  p.tile_id = record.tile_id;
  for (auto level : kAllLevels) {
    auto it = record.paths.find(level);
    if (it == record.paths.end()) {
      throw DataError("tile " + record.tile_id + " has no " + std::string(to_string(level)) +
                      " image");
    }
    const auto path = it->second.is_absolute() ? it->second : base_dir / it->second;
    p.at(level) = read_image(path);
  }
  for (auto level : kAllLevels) {
    const int expected = p.at(MagLevel::k40X).height() / (8 / scale_from_5x(level));
    if (p.at(level).height() != expected || p.at(level).width() != expected) {
      throw DataError("tile " + record.tile_id + ": level " + std::string(to_string(level)) +
                      " has the wrong size");
    }
  }
  return p;
}

std::vector<Split> assign_splits(std::size_t n_sources,
                                 const std::vector<std::pair<Split, double>>& fractions,
                                 std::uint64_t seed) {
  if (fractions.empty()) throw UsageError("no splits given");
  double total = 0.0;
  for (const auto& [split, f] : fractions) {
    if (f < 0.0) throw UsageError("negative split fraction");
    total += f;
  }
  if (total <= 0.0) throw UsageError("split fractions sum to zero");

  // Largest-remainder apportionment.
  const std::size_t k = fractions.size();
  std::vector<std::size_t> counts(k);
  std::vector<double> remainder(k);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double exact = fractions[i].second / total * static_cast<double>(n_sources);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    remainder[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < n_sources; ++i, ++assigned) ++counts[order[i % k]];

  // Give each positive split at least one source, taken from the largest.
  for (std::size_t i = 0; i < k; ++i) {
    if (counts[i] > 0 || fractions[i].second <= 0.0) continue;
    auto largest = std::max_element(counts.begin(), counts.end());
    if (*largest > 1) {
      --*largest;
      ++counts[i];
    }
  }

  std::vector<Split> labels;
  labels.reserve(n_sources);
  for (std::size_t i = 0; i < k; ++i) labels.insert(labels.end(), counts[i], fractions[i].first);
  std::mt19937_64 rng(seed);
  std::shuffle(labels.begin(), labels.end(), rng);
  return labels;
}

}  // namespace pathosr
