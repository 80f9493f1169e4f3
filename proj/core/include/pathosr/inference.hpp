#pragma once

#include <functional>
#include <vector>

#include "pathosr/generator.hpp"
#include "pathosr/image.hpp"

namespace pathosr {

/// Tiling of a 5X image for inference. Sizes are in 5X pixels.
struct StitchPlan {
  int tile = 128;
  int overlap = 32;

  void validate() const;
};

/// Tile placement and blend weights along one axis, in output pixels.
struct AxisTile {
  int origin = 0;               // 5X pixels
  std::vector<double> weights;  // tile * scale entries, normalised across tiles
};

/// Origins step by (tile - overlap); the last tile is clamped to end at the
/// border. Weights ramp linearly over edges shared with a neighbour and are
/// normalised so the tiles covering any output pixel sum to one.
std::vector<AxisTile> axis_blend(int size, int scale, const StitchPlan& plan);

/// Maps a 5X tile to its upscaled counterpart (scale x larger).
using TileResolver = std::function<Image(const Image& tile5x)>;

/// Tiles `img5x` per `plan`, resolves every tile (possibly on `workers`
/// threads) and blends the results in a fixed order, so the output does not
/// depend on completion order.
Image stitch(const Image& img5x, int scale, const StitchPlan& plan, const TileResolver& resolve,
             int workers = 1);

/// Runs the generator on one tile and returns the requested level.
Image super_resolve_tile(const Image& tile5x, MagLevel target, Generator& generator);

Image super_resolve_image(const Image& img5x, MagLevel target, Generator& generator,
                          const StitchPlan& plan = {}, int workers = 1);

}  // namespace pathosr
