#include "pathosr/losses.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "pathosr/errors.hpp"

namespace pathosr {

namespace {

void require_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* where) {
  if (a.sizes() != b.sizes()) {
    throw UsageError(std::string(where) + ": shape mismatch " + c10::str(a.sizes()) + " vs " +
                     c10::str(b.sizes()));
  }
}

torch::Tensor clamp_probability(const torch::Tensor& p) {
  return p.clamp(kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
}

}  // namespace

void LossWeights::validate() const {
  if (!(w_gl > 0.0 && w_pl > 0.0 && w_dl > 0.0)) {
    throw UsageError("loss weights must be strictly positive");
  }
}

torch::Tensor generator_loss(const torch::Tensor& sr, const torch::Tensor& hr) {
  require_same_shape(sr, hr, "generator_loss");
  return (sr - hr).abs().mean();
}

torch::Tensor perceptual_loss(const torch::Tensor& sr, const torch::Tensor& hr,
                              FeatureExtractor& extractor) {
  require_same_shape(sr, hr, "perceptual_loss");
  auto [sr_mid, sr_high] = extractor->forward(sr);
  torch::Tensor hr_mid, hr_high;
  {
    torch::NoGradGuard no_grad;
    std::tie(hr_mid, hr_high) = extractor->forward(hr);
  }
  return (sr_mid - hr_mid).pow(2).mean() + (sr_high - hr_high).pow(2).mean();
}

torch::Tensor discriminator_loss(const torch::Tensor& d_real, const torch::Tensor& d_fake) {
  return -torch::log(clamp_probability(d_real)).mean() -
         torch::log(1.0 - clamp_probability(d_fake)).mean();
}

torch::Tensor adversarial_generator_term(const torch::Tensor& d_fake) {
  return -torch::log(clamp_probability(d_fake)).mean();
}

bool LossBreakdown::all_finite() const {
  for (std::size_t i = 0; i < 3; ++i) {
    if (!std::isfinite(gl[i]) || !std::isfinite(pl[i])) return false;
  }
  return std::isfinite(adv_40x) && std::isfinite(dl_40x) && std::isfinite(total);
}

void to_json(nlohmann::json& j, const LossBreakdown& b) {
  j = {{"gl_10x", b.gl[0]}, {"gl_20x", b.gl[1]}, {"gl_40x", b.gl[2]},
       {"pl_10x", b.pl[0]}, {"pl_20x", b.pl[1]}, {"pl_40x", b.pl[2]},
       {"adv_40x", b.adv_40x}, {"dl_40x", b.dl_40x}, {"total", b.total}};
}

}  // namespace pathosr
