#include "pathosr/discriminator.hpp"

#include <nlohmann/json.hpp>

#include "pathosr/errors.hpp"

namespace pathosr {
namespace nn = torch::nn;

DiscriminatorConfig DiscriminatorConfig::tiny() {
  DiscriminatorConfig cfg;
  cfg.module_channels = {8, 8, 16, 16, 32, 32, 64};
  cfg.fc_sizes = {64, 1};
  return cfg;
}

void DiscriminatorConfig::validate() const {
  if (module_channels.size() != 7) throw UsageError("discriminator needs exactly 7 conv modules");
  if (fc_sizes.size() != 2 || fc_sizes.back() != 1) {
    throw UsageError("discriminator needs exactly 2 FC layers ending in width 1");
  }
  for (int c : module_channels) {
    if (c < 1) throw UsageError("discriminator channels must be positive");
  }
  if (fc_sizes.front() < 1) throw UsageError("FC width must be positive");
  if (convs_per_module < 1) throw UsageError("convs_per_module must be at least 1");
  if (kernel < 1 || kernel % 2 == 0) throw UsageError("kernel must be odd and positive");
}

void to_json(nlohmann::json& j, const DiscriminatorConfig& cfg) {
  j = {{"module_channels", cfg.module_channels},
       {"convs_per_module", cfg.convs_per_module},
       {"kernel", cfg.kernel},
       {"fc_sizes", cfg.fc_sizes},
       {"leaky_slope", cfg.leaky_slope}};
}

void from_json(const nlohmann::json& j, DiscriminatorConfig& cfg) {
  j.at("module_channels").get_to(cfg.module_channels);
  j.at("convs_per_module").get_to(cfg.convs_per_module);
  j.at("kernel").get_to(cfg.kernel);
  j.at("fc_sizes").get_to(cfg.fc_sizes);
  j.at("leaky_slope").get_to(cfg.leaky_slope);
}

DiscriminatorImpl::DiscriminatorImpl(DiscriminatorConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  nn::Sequential body;
  int in = 3;
  bool first = true;
  for (int out : cfg_.module_channels) {
    for (int i = 0; i < cfg_.convs_per_module; ++i) {
      // The last conv of each module halves the resolution.
      const int stride = i + 1 == cfg_.convs_per_module ? 2 : 1;
      body->push_back(nn::Conv2d(
          nn::Conv2dOptions(in, out, cfg_.kernel).stride(stride).padding(cfg_.kernel / 2)));
      if (!first) body->push_back(nn::BatchNorm2d(out));
      body->push_back(nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(cfg_.leaky_slope)));
      first = false;
      in = out;
    }
  }
  body_ = register_module("body", body);
  fc1_ = register_module("fc1", nn::Linear(in, cfg_.fc_sizes[0]));
  fc2_ = register_module("fc2", nn::Linear(cfg_.fc_sizes[0], cfg_.fc_sizes[1]));
}

torch::Tensor DiscriminatorImpl::features(const torch::Tensor& img) {
  if (img.dim() != 4 || img.size(1) != 3) {
    throw UsageError("discriminator expects (N, 3, H, W), got " + c10::str(img.sizes()));
  }
  if (img.size(2) < kMinInputSize || img.size(3) < kMinInputSize) {
    throw UsageError("discriminator input must be at least " + std::to_string(kMinInputSize) +
                     "px, got " + c10::str(img.sizes()));
  }
  return body_->forward(img);
}

torch::Tensor DiscriminatorImpl::logits(const torch::Tensor& img) {
  auto pooled = features(img).mean({2, 3});
  auto hidden = torch::leaky_relu(fc1_->forward(pooled), cfg_.leaky_slope);
  return fc2_->forward(hidden).squeeze(1);
}

torch::Tensor DiscriminatorImpl::forward(const torch::Tensor& img) {
  return torch::sigmoid(logits(img));
}

}  // namespace pathosr
