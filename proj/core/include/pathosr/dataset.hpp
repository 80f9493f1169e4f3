#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pathosr/image.hpp"

namespace pathosr {

enum class Split : std::uint8_t { kTrain, kVal, kTest };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct PixelOrigin {
  int row = 0;
  int col = 0;
  bool operator==(const PixelOrigin&) const = default;
};

/// One 40X tile of a source image plus the files of its pyramid levels.
struct TileRecord {
  std::string tile_id;
  std::filesystem::path source_image;
  PixelOrigin origin;
  std::map<MagLevel, std::filesystem::path> paths;
  Split split = Split::kTrain;

  bool operator==(const TileRecord&) const = default;
};

/// All four magnifications of one tile, indexed by level_index().
struct TilePyramid {
  std::string tile_id;
  std::array<Image, 4> levels;

  const Image& at(MagLevel level) const { return levels[level_index(level)]; }
  Image& at(MagLevel level) { return levels[level_index(level)]; }
};

/// Curriculum threshold on patch standard deviation.
struct FlatnessSchedule {
  double start = 0.0;
  double increment = 0.01;
  int period_epochs = 5;
  double max = 0.15;
};

double flatness_value(int epoch, const FlatnessSchedule& schedule = {});

/// A 5X training patch and the geometrically matching crops at 10X/20X/40X.
struct PatchPair {
  Image lr;
  std::array<Image, 3> hr;  // indexed by level_index(level) - 1
  std::string source_tile;
  PixelOrigin lr_origin;
  double stddev = 0.0;
  /// Set when the patch did not pass the flatness filter and was used to fill
  /// a shortfall.
  bool flagged = false;

  const Image& hr_at(MagLevel level) const { return hr[level_index(level) - 1]; }
};

/// Non-overlapping grid origins, row-major, partial remainders dropped.
std::vector<PixelOrigin> tile_origins(int height, int width, int tile_size);

/// Tiles `source` into a row-major grid of tile_size^2 records. Ids are
/// `<source_id>_r<row>_c<col>`; paths are left empty.
std::vector<TileRecord> tile_image(const Image& source, const std::string& source_id,
                                   int tile_size = 1024);

/// Cascaded bicubic halving: 40X -> 20X -> 10X -> 5X.
TilePyramid build_pyramid(const Image& tile40x, int tile_size = 1024);

/// Population standard deviation over all pixels and channels.
double patch_stddev(const Image& patch);

struct SampleOptions {
  int count = 50;
  int size = 64;
  double flatness = 0.0;
  std::uint64_t seed = 0;
};

/// Draws up to `count` patches whose 5X stddev is strictly above the flatness
/// threshold. After 20*count draws any shortfall is filled with the
/// highest-stddev rejected candidates, marked `flagged`.
std::vector<PatchPair> sample_patches(const TilePyramid& tile, const SampleOptions& options);

/// Stable 64-bit seed derived from a tile id, an epoch and a global seed.
std::uint64_t patch_seed(const std::string& tile_id, int epoch, std::uint64_t seed,
                         std::uint64_t draw = 0);

// Manifest: one JSON object per line.

inline constexpr int kManifestSchema = 1;

void write_manifest(const std::filesystem::path& path, const std::vector<TileRecord>& records);
std::vector<TileRecord> read_manifest(const std::filesystem::path& path);

/// Loads every level of a record. Relative paths resolve against `base_dir`.
TilePyramid load_pyramid(const TileRecord& record, const std::filesystem::path& base_dir);

/// Assigns a split to each source (not tile) so tiles of one source never
/// straddle splits. Counts follow the fractions by largest remainder, with
/// every positive-fraction split receiving at least one source when possible.
std::vector<Split> assign_splits(std::size_t n_sources,
                                 const std::vector<std::pair<Split, double>>& fractions,
                                 std::uint64_t seed);

}  // namespace pathosr
