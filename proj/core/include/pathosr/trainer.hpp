#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "pathosr/dataset.hpp"
#include "pathosr/discriminator.hpp"
#include "pathosr/feature_extractor.hpp"
#include "pathosr/generator.hpp"
#include "pathosr/imaging.hpp"
#include "pathosr/losses.hpp"

namespace pathosr {

enum class Profile : std::uint8_t { kPaper, kTiny };

std::string_view to_string(Profile profile);

struct TrainConfig {
  int epochs = 120;
  int steps_per_epoch = 500;
  int batch_size = 2;
  double learning_rate = 0.0004;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double decay_factor = 0.5;
  int decay_every_epochs = 30;
  int patches_per_image = 50;
  int patch_size = 64;
  FlatnessSchedule flatness;
  double val_fraction = 0.10;
  std::uint64_t seed = 0;
  LossWeights weights;
  Profile profile = Profile::kPaper;
  ExtractorBackend extractor = ExtractorBackend::kRandom;
  std::filesystem::path vgg19_weights;
  /// Data-loading workers. Only single-worker loading is deterministic and
  /// it is the only mode implemented.
  int workers = 1;
  bool validate_each_epoch = true;

  /// Paper hyperparameters with the reduced network widths and 32px patches.
  static TrainConfig tiny();

  GeneratorConfig generator_config() const;
  DiscriminatorConfig discriminator_config() const;
  FeatureExtractorConfig extractor_config() const;

  void validate() const;
};

/// lr0 * decay_factor ^ floor(epoch / decay_every_epochs).
double learning_rate(int epoch, const TrainConfig& cfg);

/// Patch batch as tensors: 5X input and 10X/20X/40X targets.
struct PatchBatch {
  torch::Tensor lr;
  std::array<torch::Tensor, 3> hr;
};

PatchBatch make_batch(std::span<const PatchPair> pairs, torch::Dtype dtype = torch::kFloat32);

/// Per-epoch patch source: picks train tiles uniformly, samples
/// `patches_per_image` patches at the epoch's flatness and hands them out in
/// order. Fully determined by (tiles, seed, epoch).
class PatchStream {
 public:
  PatchStream(std::span<const TilePyramid> tiles, const TrainConfig& cfg, int epoch);

  std::vector<PatchPair> next(int count);
  double flatness() const { return flatness_; }

 private:
  std::span<const TilePyramid> tiles_;
  const TrainConfig& cfg_;
  int epoch_;
  double flatness_;
  std::mt19937_64 rng_;
  std::uint64_t draws_ = 0;
  std::deque<PatchPair> pool_;
};

/// Splits off the last `fraction` of tiles (sorted by tile_id) as validation.
std::pair<std::vector<TilePyramid>, std::vector<TilePyramid>> split_validation(
    std::vector<TilePyramid> tiles, double fraction);

struct TrainOptions {
  /// Checkpoints go to <out_dir>/checkpoints/epoch_NNNN, the log to
  /// <out_dir>/train_log.jsonl. Empty: nothing is written.
  std::filesystem::path out_dir;
  /// Called after every step with (epoch, step, breakdown).
  std::function<void(int, std::int64_t, const LossBreakdown&)> on_step;
};

/// Owns the generator, discriminator, frozen extractor and both Adam
/// optimizers. One logical thread drives it.
class Trainer {
 public:
  explicit Trainer(TrainConfig cfg, torch::Dtype dtype = torch::kFloat32);

  /// One alternating update: discriminator on (real, detached fake), then
  /// generator on the weighted total loss. Throws NumericalError on NaN/Inf.
  LossBreakdown train_step(const PatchBatch& batch, int epoch);

  /// The two halves of train_step, exposed for inspection.
  double discriminator_phase(const PatchBatch& batch, const torch::Tensor& fake_40x);
  LossBreakdown generator_phase(const PatchBatch& batch,
                                const std::vector<torch::Tensor>& outputs);

  /// Differentiable total loss and its parts for a batch (no optimizer step).
  std::pair<torch::Tensor, LossParts<torch::Tensor>> total_objective(
      const PatchBatch& batch, const std::vector<torch::Tensor>& outputs);

  /// Runs the remaining epochs, checkpointing after each.
  void train(std::span<const TilePyramid> train_tiles, std::span<const TilePyramid> val_tiles,
             const TrainOptions& options = {});

  MetricReport validate(std::span<const TilePyramid> val_tiles);

  void save(const std::filesystem::path& dir) const;
  /// Restores weights, optimizer state and counters from a checkpoint
  /// written with a compatible configuration.
  void restore(const std::filesystem::path& dir);

  const TrainConfig& config() const { return cfg_; }
  int completed_epochs() const { return completed_epochs_; }
  std::int64_t global_step() const { return step_; }

  Generator& generator() { return generator_; }
  Discriminator& discriminator() { return discriminator_; }
  FeatureExtractor& extractor() { return extractor_; }

 private:
  void set_learning_rate(double lr);

  TrainConfig cfg_;
  torch::Dtype dtype_;
  Generator generator_{nullptr};
  Discriminator discriminator_{nullptr};
  FeatureExtractor extractor_{nullptr};
  std::unique_ptr<torch::optim::Adam> opt_g_;
  std::unique_ptr<torch::optim::Adam> opt_d_;
  int completed_epochs_ = 0;
  std::int64_t step_ = 0;
  std::optional<MetricReport> last_validation_;
};

}  // namespace pathosr
