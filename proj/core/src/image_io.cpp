#include "pathosr/image_io.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "pathosr/errors.hpp"
#include "pathosr/imaging.hpp"

namespace pathosr {

Image read_image(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw DataError("image not found: " + path.string());
  }
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_ANYDEPTH | cv::IMREAD_COLOR);
  if (raw.empty()) throw DataError("cannot decode image: " + path.string());

  double scale = 1.0;
  switch (raw.depth()) {
    case CV_8U: scale = 1.0 / 255.0; break;
    case CV_16U: scale = 1.0 / 65535.0; break;
    case CV_32F:
    case CV_64F: scale = 1.0; break;
    default: throw DataError("unsupported pixel depth in " + path.string());
  }
  cv::Mat rgb;
  cv::cvtColor(raw, rgb, cv::COLOR_BGR2RGB);
  cv::Mat real;
  rgb.convertTo(real, CV_32FC3, scale);

  Image img(real.rows, real.cols);
  for (int y = 0; y < real.rows; ++y) {
    const auto* row = real.ptr<cv::Vec3f>(y);
    for (int x = 0; x < real.cols; ++x) {
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = std::clamp(row[x][c], 0.0f, 1.0f);
    }
  }
  return img;
}

void write_png(const std::filesystem::path& path, const Image& img) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  cv::Mat bgr(img.height(), img.width(), CV_8UC3);
  for (int y = 0; y < img.height(); ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        row[x][2 - c] = static_cast<unsigned char>(quantize_8bit(img.at(y, x, c)));
      }
    }
  }
  if (!cv::imwrite(path.string(), bgr)) throw DataError("cannot write " + path.string());
}

}  // namespace pathosr
