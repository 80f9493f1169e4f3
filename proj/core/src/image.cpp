#include "pathosr/image.hpp"

#include <algorithm>
#include <cctype>

#include "pathosr/errors.hpp"

namespace pathosr {

std::string_view to_string(MagLevel level) {
  switch (level) {
    case MagLevel::k5X: return "5X";
    case MagLevel::k10X: return "10X";
    case MagLevel::k20X: return "20X";
    case MagLevel::k40X: return "40X";
  }
  return "?";
}

std::optional<MagLevel> parse_mag_level(std::string_view text) {
  for (auto level : kAllLevels) {
    auto name = to_string(level);
    if (text.size() == name.size() &&
        std::equal(text.begin(), text.end(), name.begin(),
                   [](char a, char b) { return std::toupper(a) == b; })) {
      return level;
    }
  }
  return std::nullopt;
}

Image::Image(int height, int width, float fill) : height_(height), width_(width) {
  if (height < 1 || width < 1) {
    throw UsageError("image dimensions must be positive, got " + std::to_string(height) + "x" +
                     std::to_string(width));
  }
  data_.assign(static_cast<std::size_t>(height) * width * kChannels, fill);
}

Image Image::crop(int y, int x, int h, int w) const {
  if (y < 0 || x < 0 || h < 1 || w < 1 || y + h > height_ || x + w > width_) {
    throw UsageError("crop rectangle leaves the image");
  }
  Image out(h, w);
  const std::size_t row = static_cast<std::size_t>(w) * kChannels;
  for (int r = 0; r < h; ++r) {
    auto src = data_.begin() + static_cast<std::ptrdiff_t>(index(y + r, x, 0));
    std::copy(src, src + static_cast<std::ptrdiff_t>(row),
              out.data_.begin() + static_cast<std::ptrdiff_t>(r * row));
  }
  return out;
}

void Image::paste(const Image& patch, int y, int x) {
  if (y < 0 || x < 0 || y + patch.height_ > height_ || x + patch.width_ > width_) {
    throw UsageError("paste rectangle leaves the image");
  }
  const std::size_t row = static_cast<std::size_t>(patch.width_) * kChannels;
  for (int r = 0; r < patch.height_; ++r) {
    auto src = patch.data_.begin() + static_cast<std::ptrdiff_t>(r * row);
    std::copy(src, src + static_cast<std::ptrdiff_t>(row),
              data_.begin() + static_cast<std::ptrdiff_t>(index(y + r, x, 0)));
  }
}

}  // namespace pathosr
