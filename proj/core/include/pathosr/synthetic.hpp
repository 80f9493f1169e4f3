#pragma once

#include <cstdint>

#include "pathosr/image.hpp"

namespace pathosr {

/// Procedural H&E-like tissue at 40X-equivalent resolution: pink stroma with
/// fibre streaks, purple nuclei with chromatin texture, pale lumina. Used as a
/// stand-in corpus for tests, benchmarks and demos. Deterministic in `seed`.
Image synthetic_tissue(int height, int width, std::uint64_t seed);

}  // namespace pathosr
