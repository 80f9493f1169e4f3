#pragma once

#include <array>

#include <nlohmann/json_fwd.hpp>
#include <torch/torch.h>

#include "pathosr/feature_extractor.hpp"
#include "pathosr/image.hpp"

namespace pathosr {

/// Per-loss-type weights of the total objective.
struct LossWeights {
  double w_gl = 0.06;
  double w_pl = 0.083;
  double w_dl = 0.04;

  void validate() const;
  bool operator==(const LossWeights&) const = default;
};

inline constexpr double kProbabilityEpsilon = 1e-7;

/// Mean absolute error over every element.
torch::Tensor generator_loss(const torch::Tensor& sr, const torch::Tensor& hr);

/// MSE of the conv-5 features plus MSE of the conv-9 features.
torch::Tensor perceptual_loss(const torch::Tensor& sr, const torch::Tensor& hr,
                              FeatureExtractor& extractor);

/// -mean(log d_real) - mean(log(1 - d_fake)), probabilities clamped to
/// [eps, 1 - eps].
torch::Tensor discriminator_loss(const torch::Tensor& d_real, const torch::Tensor& d_fake);

/// Non-saturating generator counterpart: -mean(log d_fake).
torch::Tensor adversarial_generator_term(const torch::Tensor& d_fake);

/// Ingredients of the total loss, indexed by level_index(level) - 1 for the
/// 10X/20X/40X entries. Works for doubles and for autograd tensors.
template <class T>
struct LossParts {
  std::array<T, 3> gl;
  std::array<T, 3> pl;
  T adv_40x;
};

/// sum over 10X/20X/40X of (w_gl * gl + w_pl * pl) + w_dl * adv_40x.
template <class T>
T total_loss(const LossParts<T>& parts, const LossWeights& w) {
  T total = w.w_dl * parts.adv_40x;
  for (std::size_t i = 0; i < parts.gl.size(); ++i) {
    total = total + w.w_gl * parts.gl[i] + w.w_pl * parts.pl[i];
  }
  return total;
}

/// Scalar record of one training step.
struct LossBreakdown {
  std::array<double, 3> gl{};
  std::array<double, 3> pl{};
  double adv_40x = 0.0;
  double dl_40x = 0.0;
  double total = 0.0;

  bool all_finite() const;
  bool operator==(const LossBreakdown&) const = default;
};

void to_json(nlohmann::json& j, const LossBreakdown& b);

}  // namespace pathosr
