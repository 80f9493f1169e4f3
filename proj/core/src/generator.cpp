#include "pathosr/generator.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "pathosr/errors.hpp"
#include "pathosr/tensor_bridge.hpp"

namespace pathosr {
namespace nn = torch::nn;

namespace {

nn::Conv2d conv(int in, int out, int kernel) {
  return nn::Conv2d(nn::Conv2dOptions(in, out, kernel).padding(kernel / 2));
}

void check_channels(const torch::Tensor& x, int expected, const char* where) {
  if (x.dim() != 4 || x.size(1) != expected) {
    throw UsageError(std::string(where) + ": expected " + std::to_string(expected) +
                     " channels, got tensor of shape " + c10::str(x.sizes()));
  }
}

}  // namespace

GeneratorConfig GeneratorConfig::tiny() {
  GeneratorConfig cfg;
  cfg.basic_blocks_per_srb = 2;
  cfg.base_channels = 16;
  cfg.growth_channels = 8;
  return cfg;
}

void GeneratorConfig::validate() const {
  if (srb_count != 3) throw UsageError("srb_count must be 3 (10X, 20X, 40X)");
  if (upscale_per_srb != 2) throw UsageError("upscale_per_srb must be 2");
  if (basic_blocks_per_srb < 1 || dense_blocks_per_basic < 1 || convs_per_dense < 1) {
    throw UsageError("block counts must be at least 1");
  }
  if (base_channels < 1 || growth_channels < 1) throw UsageError("channel counts must be positive");
  if (!(residual_scale > 0.0 && residual_scale <= 1.0)) {
    throw UsageError("residual_scale must lie in (0, 1]");
  }
  if (kernel < 1 || kernel % 2 == 0) throw UsageError("kernel must be odd and positive");
}

void to_json(nlohmann::json& j, const GeneratorConfig& cfg) {
  j = {{"srb_count", cfg.srb_count},
       {"basic_blocks_per_srb", cfg.basic_blocks_per_srb},
       {"dense_blocks_per_basic", cfg.dense_blocks_per_basic},
       {"convs_per_dense", cfg.convs_per_dense},
       {"base_channels", cfg.base_channels},
       {"growth_channels", cfg.growth_channels},
       {"residual_scale", cfg.residual_scale},
       {"kernel", cfg.kernel},
       {"upscale_per_srb", cfg.upscale_per_srb}};
}

void from_json(const nlohmann::json& j, GeneratorConfig& cfg) {
  j.at("srb_count").get_to(cfg.srb_count);
  j.at("basic_blocks_per_srb").get_to(cfg.basic_blocks_per_srb);
  j.at("dense_blocks_per_basic").get_to(cfg.dense_blocks_per_basic);
  j.at("convs_per_dense").get_to(cfg.convs_per_dense);
  j.at("base_channels").get_to(cfg.base_channels);
  j.at("growth_channels").get_to(cfg.growth_channels);
  j.at("residual_scale").get_to(cfg.residual_scale);
  j.at("kernel").get_to(cfg.kernel);
  j.at("upscale_per_srb").get_to(cfg.upscale_per_srb);
}

torch::Tensor pixel_shuffle(const torch::Tensor& x, int64_t r) {
  if (x.dim() != 4) throw UsageError("pixel_shuffle expects an (N, C, H, W) tensor");
  if (r < 1) throw UsageError("pixel_shuffle factor must be positive");
  const auto n = x.size(0), c = x.size(1), h = x.size(2), w = x.size(3);
  if (c % (r * r) != 0) {
    throw UsageError("pixel_shuffle: " + std::to_string(c) + " channels not divisible by " +
                     std::to_string(r * r));
  }
  const auto oc = c / (r * r);
  return x.reshape({n, oc, r, r, h, w}).permute({0, 1, 4, 2, 5, 3}).reshape({n, oc, h * r, w * r});
}

DenseBlockImpl::DenseBlockImpl(int channels, int growth, int convs, double residual_scale,
                               int kernel)
    : channels_(channels), residual_scale_(residual_scale) {
  for (int i = 0; i < convs; ++i) {
    const int in = channels + i * growth;
    const int out = i + 1 == convs ? channels : growth;
    auto c = register_module("conv" + std::to_string(i + 1), conv(in, out, kernel));
    // Small initial residuals keep deep residual-dense stacks stable.
    torch::NoGradGuard no_grad;
    nn::init::kaiming_normal_(c->weight, 0.0, torch::kFanIn);
    c->weight.mul_(0.1);
    c->bias.zero_();
    convs_.push_back(c);
  }
}

torch::Tensor DenseBlockImpl::forward(const torch::Tensor& x) {
  check_channels(x, channels_, "dense_block");
  std::vector<torch::Tensor> features{x};
  for (std::size_t i = 0; i + 1 < convs_.size(); ++i) {
    features.push_back(
        torch::leaky_relu(convs_[i]->forward(torch::cat(features, 1)), 0.2));
  }
  auto residual = convs_.back()->forward(features.size() == 1 ? x : torch::cat(features, 1));
  return x + residual_scale_ * residual;
}

BasicBlockImpl::BasicBlockImpl(const GeneratorConfig& cfg) : residual_scale_(cfg.residual_scale) {
  for (int i = 0; i < cfg.dense_blocks_per_basic; ++i) {
    dense_.push_back(register_module(
        "dense" + std::to_string(i + 1),
        DenseBlock(cfg.base_channels, cfg.growth_channels, cfg.convs_per_dense,
                   cfg.residual_scale, cfg.kernel)));
  }
}

torch::Tensor BasicBlockImpl::forward(const torch::Tensor& x) {
  auto y = x;
  for (auto& d : dense_) y = d->forward(y);
  return x + residual_scale_ * y;
}

SuperResolutionBlockImpl::SuperResolutionBlockImpl(const GeneratorConfig& cfg) : cfg_(cfg) {
  const int r = cfg.upscale_per_srb;
  head_ = register_module("head", conv(3, cfg.base_channels, cfg.kernel));
  for (int i = 0; i < cfg.basic_blocks_per_srb; ++i) {
    basic_.push_back(register_module("basic" + std::to_string(i + 1), BasicBlock(cfg)));
  }
  fusion_ = register_module("fusion", conv(cfg.base_channels, cfg.base_channels, cfg.kernel));
  upsample_ = register_module("upsample", conv(cfg.base_channels, 3 * r * r, cfg.kernel));
  tail_ = register_module("tail", conv(3, 3, cfg.kernel));

  // Start as a nearest-neighbour upsampler: the head passes RGB through on its first
  // three channels, every sub-pixel of upsample copies that channel (ICNR with a
  // delta kernel) and the tail is an identity. Everything else starts small.
  torch::NoGradGuard no_grad;
  const int c0 = cfg.kernel / 2;
  for (auto* m : {&head_, &fusion_, &upsample_, &tail_}) {
    (*m)->weight.mul_(0.1);
    (*m)->bias.zero_();
  }
  for (int c = 0; c < 3; ++c) {
    tail_->weight[c][c][c0][c0] += 1.0;
    if (c >= cfg.base_channels) continue;
    head_->weight[c].zero_();
    head_->weight[c][c][c0][c0] = 1.0;
    for (int k = 0; k < r * r; ++k) upsample_->weight[c * r * r + k][c][c0][c0] += 1.0;
  }
}

torch::Tensor SuperResolutionBlockImpl::forward(const torch::Tensor& lr) {
  check_channels(lr, 3, "srb");
  auto head = head_->forward(lr);
  auto trunk = head;
  for (auto& b : basic_) trunk = b->forward(trunk);
  auto merged = fusion_->forward(trunk) + head;
  return tail_->forward(pathosr::pixel_shuffle(upsample_->forward(merged), cfg_.upscale_per_srb));
}

torch::Tensor SuperResolutionBlockImpl::forward_trunk_bypassed(const torch::Tensor& lr) {
  check_channels(lr, 3, "srb");
  auto head = head_->forward(lr);
  const double gain = std::pow(1.0 + cfg_.residual_scale, cfg_.basic_blocks_per_srb);
  auto merged = fusion_->forward(head * gain) + head;
  return tail_->forward(pathosr::pixel_shuffle(upsample_->forward(merged), cfg_.upscale_per_srb));
}

GeneratorImpl::GeneratorImpl(GeneratorConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  for (int i = 0; i < cfg_.srb_count; ++i) {
    srbs_.push_back(register_module("srb" + std::to_string(i + 1), SuperResolutionBlock(cfg_)));
  }
}

std::vector<torch::Tensor> GeneratorImpl::forward(const torch::Tensor& x5) {
  if (x5.dim() != 4 || x5.size(2) < kMinInputSize || x5.size(3) < kMinInputSize) {
    throw UsageError("generator input must be (N, 3, H, W) with H, W >= " +
                     std::to_string(kMinInputSize) + ", got " + c10::str(x5.sizes()));
  }
  std::vector<torch::Tensor> outputs;
  auto x = x5;
  for (auto& srb : srbs_) {
    x = srb->forward(x);
    outputs.push_back(x);
  }
  return outputs;
}

MultiScaleOutput GeneratorImpl::generate(const Image& x5, MagLevel up_to) {
  if (up_to == MagLevel::k5X) throw UsageError("generate: target must be 10X, 20X or 40X");
  if (x5.height() < kMinInputSize || x5.width() < kMinInputSize) {
    throw UsageError("generator input must be at least " + std::to_string(kMinInputSize) + "px");
  }
  const bool was_training = is_training();
  if (was_training) eval();
  torch::NoGradGuard no_grad;
  const auto dtype = parameters().front().scalar_type();
  MultiScaleOutput out;
  auto x = to_tensor(x5).to(dtype);
  for (int i = 0; i < level_index(up_to); ++i) {
    x = srbs_[i]->forward(x);
    out.sr[i] = to_image(x);
  }
  if (was_training) train();
  return out;
}

void GeneratorImpl::zero_residual_branches() {
  torch::NoGradGuard no_grad;
  for (auto& srb : srbs_) {
    for (auto& basic : srb->basic_blocks()) {
      for (auto& dense : basic->dense_blocks()) {
        dense->final_conv()->weight.zero_();
        dense->final_conv()->bias.zero_();
      }
    }
  }
}

ParameterCount count_parameters(const GeneratorConfig& cfg) {
  cfg.validate();
  const std::int64_t k2 = static_cast<std::int64_t>(cfg.kernel) * cfg.kernel;
  auto conv_params = [&](std::int64_t in, std::int64_t out) { return in * out * k2 + out; };
  const std::int64_t c = cfg.base_channels;
  const std::int64_t g = cfg.growth_channels;
  const std::int64_t r = cfg.upscale_per_srb;

  std::int64_t dense = 0;
  for (int i = 0; i < cfg.convs_per_dense; ++i) {
    const bool last = i + 1 == cfg.convs_per_dense;
    dense += conv_params(c + i * g, last ? c : g);
  }
  const std::int64_t trunk =
      static_cast<std::int64_t>(cfg.basic_blocks_per_srb) * cfg.dense_blocks_per_basic * dense;
  const std::int64_t srb = conv_params(3, c) + trunk + conv_params(c, c) +
                           conv_params(c, 3 * r * r) + conv_params(3, 3);
  ParameterCount count;
  count.parameters = cfg.srb_count * srb;
  count.dense_conv_layers = static_cast<std::int64_t>(cfg.srb_count) * cfg.basic_blocks_per_srb *
                            cfg.dense_blocks_per_basic * cfg.convs_per_dense;
  return count;
}

}  // namespace pathosr
