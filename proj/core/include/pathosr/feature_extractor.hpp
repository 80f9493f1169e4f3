#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>

#include <torch/torch.h>

namespace pathosr {

enum class ExtractorBackend : std::uint8_t {
  kPretrainedVgg19,  // weights exported from an ImageNet VGG19
  kRandom,           // fixed-seed random weights, no download needed
};

struct FeatureExtractorConfig {
  ExtractorBackend backend = ExtractorBackend::kRandom;
  /// Divides every VGG19 width; 1 is the real network.
  int width_divisor = 1;
  std::uint64_t seed = 19;
  /// Required for kPretrainedVgg19: a torch.save()d dict of the VGG19
  /// `features` tensors (keys `features.<i>.weight` or `<i>.weight`).
  std::filesystem::path weights;
};

/// The first nine convolutions of VGG19 (through conv4_1). Exposes the
/// post-activation outputs of conv 5 and conv 9. Parameters never require grad.
class FeatureExtractorImpl : public torch::nn::Module {
 public:
  static constexpr int kMinInputSize = 8;
  static constexpr int kMidTap = 5;
  static constexpr int kHighTap = 9;

  explicit FeatureExtractorImpl(FeatureExtractorConfig cfg);

  /// Returns {phi_5(x), phi_9(x)} for an (N, 3, H, W) batch in [0, 1].
  std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& x);

  const FeatureExtractorConfig& config() const { return cfg_; }

 private:
  void load_pretrained(const std::filesystem::path& path);
  void init_random(std::uint64_t seed);

  FeatureExtractorConfig cfg_;
  std::vector<torch::nn::Conv2d> convs_;
  torch::Tensor mean_;
  torch::Tensor std_;
};
TORCH_MODULE(FeatureExtractor);

}  // namespace pathosr
