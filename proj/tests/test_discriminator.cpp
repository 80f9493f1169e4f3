#include <gtest/gtest.h>

#include "pathosr/discriminator.hpp"
#include "pathosr/errors.hpp"
#include "pathosr/losses.hpp"

#include <nlohmann/json.hpp>

using namespace pathosr;

TEST(Discriminator, ProbabilityInOpenInterval) {
  torch::manual_seed(0);
  Discriminator d(DiscriminatorConfig::tiny());
  d->eval();
  torch::NoGradGuard no_grad;
  auto p = d->forward(torch::rand({3, 3, 256, 256}));
  ASSERT_EQ(p.sizes(), (std::vector<int64_t>{3}));
  EXPECT_TRUE((p > 0).all().item<bool>());
  EXPECT_TRUE((p < 1).all().item<bool>());
  auto z = d->forward(torch::zeros({1, 3, 128, 128}));
  EXPECT_TRUE(torch::isfinite(z).all().item<bool>());
  EXPECT_TRUE((z > 0).all().item<bool>() && (z < 1).all().item<bool>());
}

TEST(Discriminator, PaperProfileOn40xPatch) {
  torch::manual_seed(1);
  Discriminator d(DiscriminatorConfig::paper());
  d->eval();
  torch::NoGradGuard no_grad;
  auto x = torch::rand({1, 3, 512, 512});
  auto f = d->features(x);
  EXPECT_EQ(f.size(2), 4);
  EXPECT_EQ(f.size(3), 4);
  auto p = d->forward(x).item<double>();
  EXPECT_GT(p, 0.0);
  EXPECT_LT(p, 1.0);
}

TEST(Discriminator, DeterministicInEval) {
  torch::manual_seed(2);
  Discriminator d(DiscriminatorConfig::tiny());
  d->eval();
  torch::NoGradGuard no_grad;
  auto x = torch::rand({2, 3, 160, 144});
  EXPECT_TRUE(torch::equal(d->forward(x), d->forward(x)));
}

TEST(Discriminator, SpatialHalvingPerModule) {
  Discriminator d(DiscriminatorConfig::tiny());
  d->eval();
  torch::NoGradGuard no_grad;
  EXPECT_EQ(d->features(torch::rand({1, 3, 256, 256})).size(2), 2);
  EXPECT_EQ(d->features(torch::rand({1, 3, 128, 128})).size(2), 1);
}

TEST(Discriminator, RejectsSmallInput) {
  Discriminator d(DiscriminatorConfig::tiny());
  EXPECT_THROW(d->forward(torch::rand({1, 3, 127, 200})), UsageError);
}

TEST(Discriminator, ConfigValidation) {
  auto cfg = DiscriminatorConfig::paper();
  EXPECT_NO_THROW(cfg.validate());
  cfg.module_channels.pop_back();
  EXPECT_THROW(cfg.validate(), UsageError);
  cfg = DiscriminatorConfig::paper();
  cfg.fc_sizes = {1024, 512, 1};
  EXPECT_THROW(cfg.validate(), UsageError);
  nlohmann::json j = DiscriminatorConfig::tiny();
  EXPECT_EQ(j.get<DiscriminatorConfig>(), DiscriminatorConfig::tiny());
}

TEST(Discriminator, EveryParameterReceivesGradient) {
  torch::manual_seed(3);
  Discriminator d(DiscriminatorConfig::tiny());
  auto real = torch::rand({2, 3, 128, 128});
  auto fake = torch::rand({2, 3, 128, 128});
  discriminator_loss(d->forward(real), d->forward(fake)).backward();
  for (const auto& item : d->named_parameters()) {
    const auto& name = item.key();
    const auto& p = item.value();
    ASSERT_TRUE(p.grad().defined()) << name;
    EXPECT_GT(p.grad().abs().sum().item<double>(), 0.0) << name;
  }
}
