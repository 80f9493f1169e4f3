#pragma once

#include <filesystem>

#include "pathosr/image.hpp"

namespace pathosr {

/// Decodes any format OpenCV understands (PNG, TIFF, ...) into RGB [0,1].
/// Throws DataError if the file is missing or undecodable.
Image read_image(const std::filesystem::path& path);

/// Writes a lossless 8-bit RGB PNG, creating parent directories.
void write_png(const std::filesystem::path& path, const Image& img);

}  // namespace pathosr
