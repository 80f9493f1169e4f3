#include "pathosr/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <opencv2/imgproc.hpp>

namespace pathosr {

Image synthetic_tissue(int height, int width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double area = static_cast<double>(height) * width;

  // BGR-free: channel order here is RGB throughout.
  cv::Mat canvas(height, width, CV_32FC3, cv::Scalar(0.93, 0.78, 0.86));

  const int lumina = static_cast<int>(area / 400000.0) + 1;
  for (int i = 0; i < lumina; ++i) {
    cv::Point center(static_cast<int>(unit(rng) * width), static_cast<int>(unit(rng) * height));
    cv::Size axes(static_cast<int>(20 + unit(rng) * 120), static_cast<int>(20 + unit(rng) * 90));
    cv::ellipse(canvas, center, axes, unit(rng) * 180.0, 0, 360, cv::Scalar(0.98, 0.96, 0.97),
                cv::FILLED, cv::LINE_AA);
  }

  const int fibres = static_cast<int>(area / 3000.0);
  for (int i = 0; i < fibres; ++i) {
    cv::Point a(static_cast<int>(unit(rng) * width), static_cast<int>(unit(rng) * height));
    const double angle = unit(rng) * 6.283185307;
    const double len = 20 + unit(rng) * 80;
    cv::Point b(a.x + static_cast<int>(len * std::cos(angle)),
                a.y + static_cast<int>(len * std::sin(angle)));
    const double shade = 0.1 * unit(rng);
    cv::line(canvas, a, b, cv::Scalar(0.85 - shade, 0.55 - shade, 0.72 - shade),
             1 + static_cast<int>(unit(rng) * 2), cv::LINE_AA);
  }

  const int nuclei = static_cast<int>(area / 900.0);
  for (int i = 0; i < nuclei; ++i) {
    cv::Point center(static_cast<int>(unit(rng) * width), static_cast<int>(unit(rng) * height));
    cv::Size axes(static_cast<int>(3 + unit(rng) * 7), static_cast<int>(3 + unit(rng) * 5));
    const double d = 0.15 * unit(rng);
    cv::ellipse(canvas, center, axes, unit(rng) * 180.0, 0, 360,
                cv::Scalar(0.32 + d, 0.16 + d, 0.50 + d), cv::FILLED, cv::LINE_AA);
  }

  // Chromatin speckle and sensor noise.
  cv::Mat noise(height, width, CV_32FC3);
  cv::RNG cv_rng(seed ^ 0x9E3779B97F4A7C15ull);
  cv_rng.fill(noise, cv::RNG::NORMAL, cv::Scalar::all(0.0), cv::Scalar::all(0.035));
  canvas += noise;
  cv::GaussianBlur(canvas, canvas, cv::Size(3, 3), 0.6);

  Image img(height, width);
  for (int y = 0; y < height; ++y) {
    const auto* row = canvas.ptr<cv::Vec3f>(y);
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = std::clamp(row[x][c], 0.0f, 1.0f);
    }
  }
  return img;
}

}  // namespace pathosr
