#pragma once

#include <vector>

#include <nlohmann/json_fwd.hpp>
#include <torch/torch.h>

namespace pathosr {

struct DiscriminatorConfig {
  /// One entry per convolutional module; exactly seven.
  std::vector<int> module_channels{64, 64, 128, 128, 256, 256, 512};
  int convs_per_module = 2;  // stride 1 then stride 2
  int kernel = 3;
  /// Fully connected widths; exactly two, the last one is the logit.
  std::vector<int> fc_sizes{1024, 1};
  double leaky_slope = 0.2;

  static DiscriminatorConfig paper() { return {}; }
  static DiscriminatorConfig tiny();

  void validate() const;

  bool operator==(const DiscriminatorConfig&) const = default;
};

void to_json(nlohmann::json& j, const DiscriminatorConfig& cfg);
void from_json(const nlohmann::json& j, DiscriminatorConfig& cfg);

/// 40X real/fake critic: seven conv modules that each halve the spatial extent,
/// global average pooling, two FC layers and a sigmoid.
class DiscriminatorImpl : public torch::nn::Module {
 public:
  static constexpr int kMinInputSize = 128;

  explicit DiscriminatorImpl(DiscriminatorConfig cfg);

  /// (N, 3, H, W) -> (N) probabilities in (0, 1).
  torch::Tensor forward(const torch::Tensor& img);

  /// Pre-sigmoid scores, (N).
  torch::Tensor logits(const torch::Tensor& img);

  /// Feature map after the conv modules, before pooling.
  torch::Tensor features(const torch::Tensor& img);

  const DiscriminatorConfig& config() const { return cfg_; }

 private:
  DiscriminatorConfig cfg_;
  torch::nn::Sequential body_{nullptr};
  torch::nn::Linear fc1_{nullptr};
  torch::nn::Linear fc2_{nullptr};
};
TORCH_MODULE(Discriminator);

}  // namespace pathosr
