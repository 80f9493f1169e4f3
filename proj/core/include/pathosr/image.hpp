#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pathosr {

/// Magnification levels of the scan chain. Each step is a x2 linear change.
enum class MagLevel : std::uint8_t { k5X = 0, k10X = 1, k20X = 2, k40X = 3 };

inline constexpr std::array<MagLevel, 4> kAllLevels{MagLevel::k5X, MagLevel::k10X,
                                                    MagLevel::k20X, MagLevel::k40X};
/// Levels emitted by the generator, in SRB order.
inline constexpr std::array<MagLevel, 3> kGeneratedLevels{MagLevel::k10X, MagLevel::k20X,
                                                          MagLevel::k40X};

constexpr int level_index(MagLevel level) { return static_cast<int>(level); }

/// 1, 2, 4 or 8.
constexpr int scale_from_5x(MagLevel level) { return 1 << level_index(level); }

std::string_view to_string(MagLevel level);
std::optional<MagLevel> parse_mag_level(std::string_view text);

/// H x W x 3 RGB image with values in [0, 1], stored interleaved (HWC).
class Image {
 public:
  static constexpr int kChannels = 3;

  Image() = default;
  Image(int height, int width, float fill = 0.0f);

  static Image constant(int height, int width, float value) { return {height, width, value}; }

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return kChannels; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float& at(int y, int x, int c) { return data_[index(y, x, c)]; }
  float at(int y, int x, int c) const { return data_[index(y, x, c)]; }

  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }

  /// Copy of the rectangle [y, y+h) x [x, x+w). Throws if it leaves the image.
  Image crop(int y, int x, int h, int w) const;

  /// Writes `patch` with its top-left corner at (y, x).
  void paste(const Image& patch, int y, int x);

  bool same_shape(const Image& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

  bool operator==(const Image& other) const = default;

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * kChannels + c;
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

}  // namespace pathosr
