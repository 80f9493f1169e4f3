#include "pathosr/inference.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "pathosr/errors.hpp"

namespace pathosr {

void StitchPlan::validate() const {
  if (tile < GeneratorImpl::kMinInputSize) {
    throw UsageError("stitch tile must be at least " + std::to_string(GeneratorImpl::kMinInputSize));
  }
  if (overlap < 0 || overlap >= tile) throw UsageError("overlap must lie in [0, tile)");
}

std::vector<AxisTile> axis_blend(int size, int scale, const StitchPlan& plan) {
  plan.validate();
  if (size < plan.tile) throw UsageError("image smaller than the stitch tile");
  std::vector<int> origins;
  const int stride = plan.tile - plan.overlap;
  for (int o = 0;; o += stride) {
    if (o + plan.tile >= size) {
      origins.push_back(size - plan.tile);
      break;
    }
    origins.push_back(o);
  }

  const int extent = plan.tile * scale;
  const double ramp = std::max(1, plan.overlap * scale);
  std::vector<AxisTile> tiles(origins.size());
  std::vector<double> total(static_cast<std::size_t>(size) * scale, 0.0);
  for (std::size_t k = 0; k < origins.size(); ++k) {
    tiles[k].origin = origins[k];
    tiles[k].weights.resize(extent);
    const bool left_shared = origins[k] > 0;
    const bool right_shared = origins[k] + plan.tile < size;
    for (int u = 0; u < extent; ++u) {
      double r = 1.0;
      if (left_shared) r = std::min(r, (u + 0.5) / ramp);
      if (right_shared) r = std::min(r, (extent - u - 0.5) / ramp);
      tiles[k].weights[u] = r;
      total[origins[k] * scale + u] += r;
    }
  }
  for (auto& t : tiles) {
    for (int u = 0; u < extent; ++u) t.weights[u] /= total[t.origin * scale + u];
  }
  return tiles;
}

Image stitch(const Image& img5x, int scale, const StitchPlan& plan, const TileResolver& resolve,
             int workers) {
  if (img5x.height() < plan.tile || img5x.width() < plan.tile) {
    throw UsageError("image (" + std::to_string(img5x.height()) + "x" +
                     std::to_string(img5x.width()) + ") is smaller than the " +
                     std::to_string(plan.tile) + "px stitch tile");
  }
  const auto rows = axis_blend(img5x.height(), scale, plan);
  const auto cols = axis_blend(img5x.width(), scale, plan);

  std::vector<Image> results(rows.size() * cols.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < results.size(); i = next++) {
      const auto& ry = rows[i / cols.size()];
      const auto& rx = cols[i % cols.size()];
      results[i] = resolve(img5x.crop(ry.origin, rx.origin, plan.tile, plan.tile));
    }
  };
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }

  const int extent = plan.tile * scale;
  const int out_h = img5x.height() * scale;
  const int out_w = img5x.width() * scale;
  std::vector<double> acc(static_cast<std::size_t>(out_h) * out_w * 3, 0.0);
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& ry = rows[i / cols.size()];
    const auto& rx = cols[i % cols.size()];
    const Image& tile = results[i];
    if (tile.height() != extent || tile.width() != extent) {
      throw UsageError("tile resolver returned the wrong size");
    }
    for (int v = 0; v < extent; ++v) {
      const int y = ry.origin * scale + v;
      for (int u = 0; u < extent; ++u) {
        const int x = rx.origin * scale + u;
        const double w = ry.weights[v] * rx.weights[u];
        double* dst = acc.data() + (static_cast<std::size_t>(y) * out_w + x) * 3;
        for (int c = 0; c < 3; ++c) dst[c] += w * tile.at(v, u, c);
      }
    }
  }

  Image out(out_h, out_w);
  auto dst = out.values();
  for (std::size_t i = 0; i < acc.size(); ++i) {
    dst[i] = static_cast<float>(std::clamp(acc[i], 0.0, 1.0));
  }
  return out;
}

Image super_resolve_tile(const Image& tile5x, MagLevel target, Generator& generator) {
  if (target == MagLevel::k5X) throw UsageError("target level must be 10X, 20X or 40X");
  if (generator.is_empty()) throw UsageError("no generator loaded");
  if (tile5x.height() < GeneratorImpl::kMinInputSize ||
      tile5x.width() < GeneratorImpl::kMinInputSize) {
    throw UsageError("tile must be at least " + std::to_string(GeneratorImpl::kMinInputSize) +
                     "px");
  }
  return generator->generate(tile5x, target).at(target);
}

Image super_resolve_image(const Image& img5x, MagLevel target, Generator& generator,
                          const StitchPlan& plan, int workers) {
  if (target == MagLevel::k5X) throw UsageError("target level must be 10X, 20X or 40X");
  generator->eval();
  return stitch(
      img5x, scale_from_5x(target), plan,
      [&](const Image& tile) { return super_resolve_tile(tile, target, generator); }, workers);
}

}  // namespace pathosr
