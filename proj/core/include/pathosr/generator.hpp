#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <nlohmann/json_fwd.hpp>
#include <torch/torch.h>

#include "pathosr/image.hpp"

namespace pathosr {

struct GeneratorConfig {
  int srb_count = 3;
  int basic_blocks_per_srb = 10;
  int dense_blocks_per_basic = 3;
  int convs_per_dense = 5;
  int base_channels = 64;
  int growth_channels = 32;
  double residual_scale = 0.2;
  int kernel = 3;
  int upscale_per_srb = 2;

  static GeneratorConfig paper() { return {}; }
  /// Reduced width and depth for CPU tests.
  static GeneratorConfig tiny();

  /// Throws UsageError on out-of-range fields.
  void validate() const;

  bool operator==(const GeneratorConfig&) const = default;
};

void to_json(nlohmann::json& j, const GeneratorConfig& cfg);
void from_json(const nlohmann::json& j, GeneratorConfig& cfg);

/// Sub-pixel rearrangement: (N, C*r*r, H, W) -> (N, C, H*r, W*r) with
/// out[c][h][w] = in[c*r*r + (h%r)*r + (w%r)][h/r][w/r].
torch::Tensor pixel_shuffle(const torch::Tensor& x, int64_t r);

/// Five densely connected 3x3 convolutions with a scaled residual.
class DenseBlockImpl : public torch::nn::Module {
 public:
  DenseBlockImpl(int channels, int growth, int convs, double residual_scale, int kernel = 3);

  torch::Tensor forward(const torch::Tensor& x);

  /// The conv mapping back to `channels`; its output is the residual branch.
  torch::nn::Conv2d& final_conv() { return convs_.back(); }
  std::vector<torch::nn::Conv2d>& convs() { return convs_; }

 private:
  int channels_;
  double residual_scale_;
  std::vector<torch::nn::Conv2d> convs_;
};
TORCH_MODULE(DenseBlock);

/// Dense blocks in sequence with an outer scaled residual:
/// out = x + residual_scale * chain(x).
class BasicBlockImpl : public torch::nn::Module {
 public:
  BasicBlockImpl(const GeneratorConfig& cfg);

  torch::Tensor forward(const torch::Tensor& x);

  std::vector<DenseBlock>& dense_blocks() { return dense_; }

 private:
  double residual_scale_;
  std::vector<DenseBlock> dense_;
};
TORCH_MODULE(BasicBlock);

/// One x2 stage: head conv, basic-block trunk, fusion conv, skip from the
/// head features, conv to 3*r*r channels, pixel shuffle, tail conv.
class SuperResolutionBlockImpl : public torch::nn::Module {
 public:
  explicit SuperResolutionBlockImpl(const GeneratorConfig& cfg);

  torch::Tensor forward(const torch::Tensor& lr);

  /// Same graph with every basic block replaced by multiplication by
  /// (1 + residual_scale); equals forward() after zero_residual_branches().
  torch::Tensor forward_trunk_bypassed(const torch::Tensor& lr);

  std::vector<BasicBlock>& basic_blocks() { return basic_; }

 private:
  GeneratorConfig cfg_;
  torch::nn::Conv2d head_{nullptr};
  std::vector<BasicBlock> basic_;
  torch::nn::Conv2d fusion_{nullptr};
  torch::nn::Conv2d upsample_{nullptr};
  torch::nn::Conv2d tail_{nullptr};
};
TORCH_MODULE(SuperResolutionBlock);

/// Generated images for 10X, 20X and 40X.
struct MultiScaleOutput {
  std::array<Image, 3> sr;  // indexed by level_index(level) - 1
  const Image& at(MagLevel level) const { return sr[level_index(level) - 1]; }
};

/// Chained SRBs with independent weights. SRB k feeds SRB k+1 unclamped.
class GeneratorImpl : public torch::nn::Module {
 public:
  static constexpr int kMinInputSize = 32;

  explicit GeneratorImpl(GeneratorConfig cfg);

  /// Raw (unclamped) stage outputs, one per SRB. Input is (N, 3, H, W).
  std::vector<torch::Tensor> forward(const torch::Tensor& x5);

  /// Evaluation-mode inference on one 5X image; outputs clamped to [0, 1].
  /// Stages past `up_to` are skipped and their entries left empty.
  MultiScaleOutput generate(const Image& x5, MagLevel up_to = MagLevel::k40X);

  /// Zeroes weight and bias of every dense block's final conv.
  void zero_residual_branches();

  const GeneratorConfig& config() const { return cfg_; }
  std::vector<SuperResolutionBlock>& stages() { return srbs_; }

 private:
  GeneratorConfig cfg_;
  std::vector<SuperResolutionBlock> srbs_;
};
TORCH_MODULE(Generator);

struct ParameterCount {
  std::int64_t parameters = 0;
  std::int64_t dense_conv_layers = 0;
};

/// Exact trainable parameter count derived from the configuration alone.
ParameterCount count_parameters(const GeneratorConfig& cfg);

}  // namespace pathosr
