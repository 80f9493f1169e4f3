#include "pathosr/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "pathosr/errors.hpp"

namespace pathosr {
namespace {

// Sparse resampling matrix for one axis: each output sample is a weighted
// sum of `taps` consecutive (clamped) input indices.
struct AxisWeights {
  int taps = 0;
  std::vector<int> index;      // out_size * taps
  std::vector<double> weight;  // out_size * taps
};

AxisWeights axis_weights(int in_size, int out_size) {
  const double scale = static_cast<double>(out_size) / in_size;
  const double stretch = scale < 1.0 ? scale : 1.0;
  const double support = 2.0 / stretch;
  AxisWeights w;
  w.taps = static_cast<int>(std::ceil(2.0 * support)) + 2;
  w.index.resize(static_cast<std::size_t>(out_size) * w.taps);
  w.weight.resize(w.index.size());
  for (int o = 0; o < out_size; ++o) {
    const double center = (o + 0.5) / scale - 0.5;
    const int first = static_cast<int>(std::floor(center - support));
    double total = 0.0;
    for (int t = 0; t < w.taps; ++t) {
      const int src = first + t;
      const double k = stretch * cubic_kernel((center - src) * stretch);
      w.index[o * w.taps + t] = std::clamp(src, 0, in_size - 1);
      w.weight[o * w.taps + t] = k;
      total += k;
    }
    for (int t = 0; t < w.taps; ++t) w.weight[o * w.taps + t] /= total;
  }
  return w;
}

void require_same_shape(const Image& a, const Image& b) {
  if (!a.same_shape(b)) {
    throw UsageError("image dimensions differ: " + std::to_string(a.height()) + "x" +
                     std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                     std::to_string(b.width()));
  }
}

std::vector<double> gaussian_window_1d(int size, double sigma) {
  std::vector<double> g(size);
  const double mid = (size - 1) / 2.0;
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    g[i] = std::exp(-((i - mid) * (i - mid)) / (2.0 * sigma * sigma));
    total += g[i];
  }
  for (auto& v : g) v /= total;
  return g;
}

// Valid-mode separable filter of a single-channel plane.
std::vector<double> filter_valid(const std::vector<double>& plane, int h, int w,
                                 const std::vector<double>& g) {
  const int k = static_cast<int>(g.size());
  const int oh = h - k + 1;
  const int ow = w - k + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int t = 0; t < k; ++t) acc += g[t] * plane[y * w + x + t];
      rows[y * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow, 0.0);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int t = 0; t < k; ++t) acc += g[t] * rows[(y + t) * ow + x];
      out[y * ow + x] = acc;
    }
  }
  return out;
}

}  // namespace

double cubic_kernel(double x) {
  constexpr double a = -0.5;
  const double ax = std::abs(x);
  if (ax <= 1.0) return ((a + 2.0) * ax - (a + 3.0)) * ax * ax + 1.0;
  if (ax < 2.0) return ((a * ax - 5.0 * a) * ax + 8.0 * a) * ax - 4.0 * a;
  return 0.0;
}

Image bicubic_resize(const Image& img, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) {
    throw UsageError("bicubic_resize: target dimensions must be positive");
  }
  if (img.empty()) throw UsageError("bicubic_resize: empty input");
  constexpr int C = Image::kChannels;
  const int in_h = img.height();
  const int in_w = img.width();
  const auto wx = axis_weights(in_w, out_w);
  const auto wy = axis_weights(in_h, out_h);

  // Horizontal pass into a double buffer, then vertical pass.
  std::vector<double> tmp(static_cast<std::size_t>(in_h) * out_w * C, 0.0);
  const auto src = img.values();
  for (int y = 0; y < in_h; ++y) {
    const float* row = src.data() + static_cast<std::size_t>(y) * in_w * C;
    double* dst = tmp.data() + static_cast<std::size_t>(y) * out_w * C;
    for (int x = 0; x < out_w; ++x) {
      double acc[C] = {0.0, 0.0, 0.0};
      for (int t = 0; t < wx.taps; ++t) {
        const int sx = wx.index[x * wx.taps + t];
        const double k = wx.weight[x * wx.taps + t];
        for (int c = 0; c < C; ++c) acc[c] += k * row[sx * C + c];
      }
      for (int c = 0; c < C; ++c) dst[x * C + c] = acc[c];
    }
  }

  Image out(out_h, out_w);
  auto dst = out.values();
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      double acc[C] = {0.0, 0.0, 0.0};
      for (int t = 0; t < wy.taps; ++t) {
        const int sy = wy.index[y * wy.taps + t];
        const double k = wy.weight[y * wy.taps + t];
        const double* px = tmp.data() + (static_cast<std::size_t>(sy) * out_w + x) * C;
        for (int c = 0; c < C; ++c) acc[c] += k * px[c];
      }
      for (int c = 0; c < C; ++c) {
        dst[(static_cast<std::size_t>(y) * out_w + x) * C + c] =
            static_cast<float>(std::clamp(acc[c], 0.0, 1.0));
      }
    }
  }
  return out;
}

int quantize_8bit(float v) {
  const double clamped = std::clamp(static_cast<double>(v), 0.0, 1.0);
  return static_cast<int>(std::lround(clamped * 255.0));
}

double psnr(const Image& pred, const Image& ref) {
  require_same_shape(pred, ref);
  const auto a = pred.values();
  const auto b = ref.values();
  std::uint64_t sq = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::int64_t d = quantize_8bit(a[i]) - quantize_8bit(b[i]);
    sq += static_cast<std::uint64_t>(d * d);
  }
  if (sq == 0) return kPsnrIdentical;
  const double mse = static_cast<double>(sq) / static_cast<double>(a.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double ssim(const Image& pred, const Image& ref, const SsimParams& params) {
  require_same_shape(pred, ref);
  const int h = pred.height();
  const int w = pred.width();
  if (std::min(h, w) < params.window) {
    throw UsageError("ssim: image smaller than the " + std::to_string(params.window) +
                     "px window");
  }
  const auto g = gaussian_window_1d(params.window, params.sigma);
  const double c1 = std::pow(params.k1 * params.dynamic_range, 2);
  const double c2 = std::pow(params.k2 * params.dynamic_range, 2);
  const std::size_t n = static_cast<std::size_t>(h) * w;

  double channel_sum = 0.0;
  for (int c = 0; c < Image::kChannels; ++c) {
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = quantize_8bit(pred.values()[i * 3 + c]) / 255.0;
      y[i] = quantize_8bit(ref.values()[i * 3 + c]) / 255.0;
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, h, w, g);
    const auto my = filter_valid(y, h, w, g);
    const auto sxx = filter_valid(xx, h, w, g);
    const auto syy = filter_valid(yy, h, w, g);
    const auto sxy = filter_valid(xy, h, w, g);
    double total = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i];
      const double vy = syy[i] - my[i] * my[i];
      const double cov = sxy[i] - mx[i] * my[i];
      total += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
               ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    channel_sum += total / static_cast<double>(mx.size());
  }
  return std::clamp(channel_sum / Image::kChannels, -1.0, 1.0);
}

void MetricAccumulator::add(double psnr_db, double ssim_value) {
  if (std::isinf(psnr_db)) {
    ++infinite_;
  } else {
    psnr_sum_ += psnr_db;
    ++finite_;
  }
  ssim_sum_ += ssim_value;
  ++n_;
}

LevelMetrics MetricAccumulator::result() const {
  LevelMetrics m;
  m.n = n_;
  m.n_infinite_psnr = infinite_;
  m.mean_psnr = finite_ > 0 ? psnr_sum_ / finite_ : kPsnrIdentical;
  m.mean_ssim = n_ > 0 ? ssim_sum_ / n_ : 0.0;
  return m;
}

}  // namespace pathosr
