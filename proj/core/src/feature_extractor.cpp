#include "pathosr/feature_extractor.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>

#include "pathosr/checkpoint.hpp"
#include "pathosr/errors.hpp"

namespace pathosr {
namespace nn = torch::nn;

namespace {

constexpr std::array<int, 9> kVggWidths{64, 64, 128, 128, 256, 256, 256, 256, 512};
// torchvision indices of the convolutions inside vgg19().features.
constexpr std::array<int, 9> kTorchvisionIndex{0, 2, 5, 7, 10, 12, 14, 16, 19};
// A 2x2 max pool follows these (1-based) convolutions.
constexpr std::array<int, 3> kPoolAfter{2, 4, 8};

bool pool_after(int conv_number) {
  for (int p : kPoolAfter) {
    if (p == conv_number) return true;
  }
  return false;
}

}  // namespace

FeatureExtractorImpl::FeatureExtractorImpl(FeatureExtractorConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.width_divisor < 1) throw UsageError("width_divisor must be at least 1");
  int in = 3;
  for (std::size_t i = 0; i < kVggWidths.size(); ++i) {
    const int out = std::max(1, kVggWidths[i] / cfg_.width_divisor);
    convs_.push_back(register_module("conv" + std::to_string(i + 1),
                                     nn::Conv2d(nn::Conv2dOptions(in, out, 3).padding(1))));
    in = out;
  }
  if (cfg_.backend == ExtractorBackend::kPretrainedVgg19) {
    if (cfg_.width_divisor != 1) throw UsageError("pretrained VGG19 requires width_divisor 1");
    load_pretrained(cfg_.weights);
    mean_ = register_buffer("mean", torch::tensor({0.485f, 0.456f, 0.406f}).view({1, 3, 1, 1}));
    std_ = register_buffer("std", torch::tensor({0.229f, 0.224f, 0.225f}).view({1, 3, 1, 1}));
  } else {
    init_random(cfg_.seed);
  }
  for (auto& p : parameters()) p.set_requires_grad(false);
  eval();
}

void FeatureExtractorImpl::init_random(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  torch::NoGradGuard no_grad;
  for (auto& c : convs_) {
    auto w = c->weight;
    const double fan_in = static_cast<double>(w.size(1) * w.size(2) * w.size(3));
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
    auto cpu = torch::empty(w.sizes(), torch::kFloat32);
    float* data = cpu.data_ptr<float>();
    for (int64_t i = 0; i < cpu.numel(); ++i) data[i] = static_cast<float>(normal(rng));
    w.copy_(cpu);
    c->bias.zero_();
  }
}

void FeatureExtractorImpl::load_pretrained(const std::filesystem::path& path) {
  const auto dict = read_tensor_dict(path);
  auto lookup = [&](int index, const char* kind) {
    for (const std::string prefix : {"features.", ""}) {
      const std::string key = prefix + std::to_string(index) + "." + kind;
      auto it = dict.find(key);
      if (it != dict.end()) return it->second;
    }
    throw DataError("VGG19 weights lack conv at features index " + std::to_string(index));
  };
  torch::NoGradGuard no_grad;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    auto w = lookup(kTorchvisionIndex[i], "weight");
    auto b = lookup(kTorchvisionIndex[i], "bias");
    if (w.sizes() != convs_[i]->weight.sizes() || b.sizes() != convs_[i]->bias.sizes()) {
      throw DataError("VGG19 weight shape mismatch at conv " + std::to_string(i + 1));
    }
    convs_[i]->weight.copy_(w);
    convs_[i]->bias.copy_(b);
  }
}

std::pair<torch::Tensor, torch::Tensor> FeatureExtractorImpl::forward(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != 3) {
    throw UsageError("feature extractor expects (N, 3, H, W), got " + c10::str(x.sizes()));
  }
  if (x.size(2) < kMinInputSize || x.size(3) < kMinInputSize) {
    throw UsageError("feature extractor input must be at least " +
                     std::to_string(kMinInputSize) + "px");
  }
  auto h = x;
  if (mean_.defined()) h = (h - mean_.to(h.dtype())) / std_.to(h.dtype());
  torch::Tensor mid;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    h = torch::relu(convs_[i]->forward(h));
    if (number == kMidTap) mid = h;
    if (number == kHighTap) break;
    if (pool_after(number)) h = torch::max_pool2d(h, 2);
  }
  return {mid, h};
}

}  // namespace pathosr
