#pragma once

#include <limits>
#include <map>
#include <string>

#include "pathosr/image.hpp"

namespace pathosr {

/// Keys cubic convolution kernel with a = -0.5 (Catmull-Rom).
double cubic_kernel(double x);

/// Resamples with the a = -0.5 cubic kernel, half-pixel centres and replicated
/// edges. When shrinking, the kernel is stretched by the inverse scale so the
/// result is antialiased (the usual imresize behaviour). Output is clamped to
/// [0, 1] and is bit-stable for identical inputs.
Image bicubic_resize(const Image& img, int out_h, int out_w);

/// Value returned by psnr() when the quantized images are identical.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// Maps [0,1] to the nearest 8-bit level: round(clamp(v) * 255).
int quantize_8bit(float v);

/// PSNR in dB between the 8-bit quantized images, MAX = 255.
double psnr(const Image& pred, const Image& ref);

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Gaussian-window SSIM on the 8-bit quantized images, averaged over every
/// valid window position and then over the three channels.
double ssim(const Image& pred, const Image& ref, const SsimParams& params = {});

struct LevelMetrics {
  double mean_psnr = 0.0;  // finite samples only
  double mean_ssim = 0.0;
  int n = 0;               // samples contributing to mean_ssim
  int n_infinite_psnr = 0; // excluded from mean_psnr
};

/// Per-level PSNR/SSIM aggregates.
struct MetricReport {
  std::map<MagLevel, LevelMetrics> per_level;
};

/// Streaming accumulator for one level.
class MetricAccumulator {
 public:
  void add(double psnr_db, double ssim_value);
  LevelMetrics result() const;

 private:
  double psnr_sum_ = 0.0;
  double ssim_sum_ = 0.0;
  int finite_ = 0;
  int infinite_ = 0;
  int n_ = 0;
};

}  // namespace pathosr
