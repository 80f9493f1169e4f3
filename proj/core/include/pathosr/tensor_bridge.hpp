#pragma once

#include <span>
#include <vector>

#include <torch/torch.h>

#include "pathosr/image.hpp"

namespace pathosr {

/// Image -> float32 tensor of shape (1, 3, H, W).
torch::Tensor to_tensor(const Image& img);

/// Stacks same-size images into (N, 3, H, W).
torch::Tensor to_batch(std::span<const Image> images);

/// (3, H, W) or (1, 3, H, W) tensor -> Image, clamped to [0, 1].
Image to_image(const torch::Tensor& tensor);

}  // namespace pathosr
