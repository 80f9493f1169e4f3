#include "pathosr/tensor_bridge.hpp"

#include "pathosr/errors.hpp"

namespace pathosr {

torch::Tensor to_tensor(const Image& img) {
  auto hwc = torch::from_blob(const_cast<float*>(img.values().data()),
                              {img.height(), img.width(), 3}, torch::kFloat32);
  return hwc.permute({2, 0, 1}).unsqueeze(0).contiguous();
}

torch::Tensor to_batch(std::span<const Image> images) {
  if (images.empty()) throw UsageError("to_batch: no images");
  std::vector<torch::Tensor> parts;
  parts.reserve(images.size());
  for (const auto& img : images) {
    if (!img.same_shape(images.front())) throw UsageError("to_batch: mixed image sizes");
    parts.push_back(to_tensor(img));
  }
  return torch::cat(parts, 0);
}

Image to_image(const torch::Tensor& tensor) {
  auto t = tensor.detach();
  if (t.dim() == 4) {
    if (t.size(0) != 1) throw UsageError("to_image: batch must hold a single image");
    t = t.squeeze(0);
  }
  if (t.dim() != 3 || t.size(0) != 3) throw UsageError("to_image: expected a 3-channel image");
  auto hwc = t.to(torch::kCPU, torch::kFloat32).clamp(0.0, 1.0).permute({1, 2, 0}).contiguous();
  Image img(static_cast<int>(hwc.size(0)), static_cast<int>(hwc.size(1)));
  const float* src = hwc.data_ptr<float>();
  std::copy(src, src + img.size(), img.values().begin());
  return img;
}

}  // namespace pathosr
