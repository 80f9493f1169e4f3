#include "pathosr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pathosr/checkpoint.hpp"
#include "pathosr/config_file.hpp"
#include "pathosr/errors.hpp"
#include "pathosr/evaluation.hpp"
#include "pathosr/tensor_bridge.hpp"

namespace pathosr {

using nlohmann::json;

std::string_view to_string(Profile profile) {
  return profile == Profile::kTiny ? "tiny" : "paper";
}

TrainConfig TrainConfig::tiny() {
  TrainConfig cfg;
  cfg.profile = Profile::kTiny;
  cfg.patch_size = 32;
  return cfg;
}

GeneratorConfig TrainConfig::generator_config() const {
  return profile == Profile::kTiny ? GeneratorConfig::tiny() : GeneratorConfig::paper();
}

DiscriminatorConfig TrainConfig::discriminator_config() const {
  return profile == Profile::kTiny ? DiscriminatorConfig::tiny() : DiscriminatorConfig::paper();
}

FeatureExtractorConfig TrainConfig::extractor_config() const {
  FeatureExtractorConfig fx;
  fx.backend = extractor;
  fx.weights = vgg19_weights;
  fx.width_divisor =
      (extractor == ExtractorBackend::kRandom && profile == Profile::kTiny) ? 8 : 1;
  return fx;
}

void TrainConfig::validate() const {
  if (epochs < 1 || steps_per_epoch < 1 || batch_size < 1) {
    throw UsageError("epochs, steps_per_epoch and batch_size must be positive");
  }
  if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be positive");
  if (!(decay_factor > 0.0 && decay_factor <= 1.0)) {
    throw UsageError("decay_factor must lie in (0, 1]");
  }
  if (decay_every_epochs < 1) throw UsageError("decay_frequency must be positive");
  if (patches_per_image < 1) throw UsageError("patches_per_image must be positive");
  if (patch_size * 8 < DiscriminatorImpl::kMinInputSize ||
      patch_size < GeneratorImpl::kMinInputSize) {
    throw UsageError("patch_size must be at least " +
                     std::to_string(GeneratorImpl::kMinInputSize));
  }
  if (!(val_fraction >= 0.0 && val_fraction <= 0.5)) {
    throw UsageError("validation_fraction must lie in [0, 0.5]");
  }
  if (flatness.period_epochs < 1 || flatness.increment < 0.0 || flatness.start < 0.0 ||
      flatness.max > 0.15 || flatness.max < flatness.start) {
    throw UsageError("flatness schedule must stay within [0, 0.15]");
  }
  if (workers != 1) throw UsageError("only single-worker data loading is supported");
  if (extractor == ExtractorBackend::kPretrainedVgg19 && vgg19_weights.empty()) {
    throw UsageError("extractor = vgg19 needs vgg19_weights");
  }
  weights.validate();
}

double learning_rate(int epoch, const TrainConfig& cfg) {
  if (epoch < 0) throw UsageError("learning_rate: negative epoch");
  return cfg.learning_rate * std::pow(cfg.decay_factor, epoch / cfg.decay_every_epochs);
}

PatchBatch make_batch(std::span<const PatchPair> pairs, torch::Dtype dtype) {
  if (pairs.empty()) throw UsageError("empty patch batch");
  std::vector<Image> lr;
  std::array<std::vector<Image>, 3> hr;
  for (const auto& p : pairs) {
    lr.push_back(p.lr);
    for (std::size_t i = 0; i < 3; ++i) hr[i].push_back(p.hr[i]);
  }
  PatchBatch batch;
  batch.lr = to_batch(lr).to(dtype);
  for (std::size_t i = 0; i < 3; ++i) batch.hr[i] = to_batch(hr[i]).to(dtype);
  return batch;
}

PatchStream::PatchStream(std::span<const TilePyramid> tiles, const TrainConfig& cfg, int epoch)
    : tiles_(tiles),
      cfg_(cfg),
      epoch_(epoch),
      flatness_(flatness_value(epoch, cfg.flatness)),
      rng_(patch_seed("", epoch, cfg.seed)) {
  if (tiles_.empty()) throw DataError("no training tiles");
}

std::vector<PatchPair> PatchStream::next(int count) {
  std::uniform_int_distribution<std::size_t> pick(0, tiles_.size() - 1);
  while (static_cast<int>(pool_.size()) < count) {
    const auto& tile = tiles_[pick(rng_)];
    SampleOptions opts;
    opts.count = cfg_.patches_per_image;
    opts.size = cfg_.patch_size;
    opts.flatness = flatness_;
    opts.seed = patch_seed(tile.tile_id, epoch_, cfg_.seed, draws_++);
    for (auto& p : sample_patches(tile, opts)) pool_.push_back(std::move(p));
  }
  std::vector<PatchPair> out;
  for (int i = 0; i < count; ++i) {
    out.push_back(std::move(pool_.front()));
    pool_.pop_front();
  }
  return out;
}

std::pair<std::vector<TilePyramid>, std::vector<TilePyramid>> split_validation(
    std::vector<TilePyramid> tiles, double fraction) {
  std::sort(tiles.begin(), tiles.end(),
            [](const TilePyramid& a, const TilePyramid& b) { return a.tile_id < b.tile_id; });
  const auto n_val = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(tiles.size())));
  std::vector<TilePyramid> val(std::make_move_iterator(tiles.end() - static_cast<std::ptrdiff_t>(n_val)),
                               std::make_move_iterator(tiles.end()));
  tiles.resize(tiles.size() - n_val);
  return {std::move(tiles), std::move(val)};
}

Trainer::Trainer(TrainConfig cfg, torch::Dtype dtype) : cfg_(std::move(cfg)), dtype_(dtype) {
  cfg_.validate();
  torch::manual_seed(cfg_.seed);
  generator_ = Generator(cfg_.generator_config());
  discriminator_ = Discriminator(cfg_.discriminator_config());
  extractor_ = FeatureExtractor(cfg_.extractor_config());
  generator_->to(dtype_);
  discriminator_->to(dtype_);
  extractor_->to(dtype_);

  auto adam = [&] {
    return torch::optim::AdamOptions(cfg_.learning_rate)
        .betas({cfg_.adam_beta1, cfg_.adam_beta2});
  };
  opt_g_ = std::make_unique<torch::optim::Adam>(generator_->parameters(), adam());
  opt_d_ = std::make_unique<torch::optim::Adam>(discriminator_->parameters(), adam());
}

void Trainer::set_learning_rate(double lr) {
  for (auto* opt : {opt_g_.get(), opt_d_.get()}) {
    for (auto& group : opt->param_groups()) {
      static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
    }
  }
}

std::pair<torch::Tensor, LossParts<torch::Tensor>> Trainer::total_objective(
    const PatchBatch& batch, const std::vector<torch::Tensor>& outputs) {
  LossParts<torch::Tensor> parts;
  for (std::size_t i = 0; i < 3; ++i) {
    parts.gl[i] = generator_loss(outputs[i], batch.hr[i]);
    parts.pl[i] = perceptual_loss(outputs[i], batch.hr[i], extractor_);
  }
  parts.adv_40x = adversarial_generator_term(discriminator_->forward(outputs[2]));
  auto total = total_loss(parts, cfg_.weights);
  return {total, parts};
}

double Trainer::discriminator_phase(const PatchBatch& batch, const torch::Tensor& fake_40x) {
  discriminator_->train();
  opt_d_->zero_grad();
  auto d_real = discriminator_->forward(batch.hr[2]);
  auto d_fake = discriminator_->forward(fake_40x.detach());
  auto dl = discriminator_loss(d_real, d_fake);
  dl.backward();
  opt_d_->step();
  return dl.item<double>();
}

LossBreakdown Trainer::generator_phase(const PatchBatch& batch,
                                       const std::vector<torch::Tensor>& outputs) {
  for (auto& p : discriminator_->parameters()) p.set_requires_grad(false);
  opt_g_->zero_grad();
  auto [total, parts] = total_objective(batch, outputs);
  total.backward();
  opt_g_->step();
  for (auto& p : discriminator_->parameters()) p.set_requires_grad(true);

  LossBreakdown b;
  for (std::size_t i = 0; i < 3; ++i) {
    b.gl[i] = parts.gl[i].item<double>();
    b.pl[i] = parts.pl[i].item<double>();
  }
  b.adv_40x = parts.adv_40x.item<double>();
  b.total = total.item<double>();
  return b;
}

LossBreakdown Trainer::train_step(const PatchBatch& batch, int epoch) {
  set_learning_rate(learning_rate(epoch, cfg_));
  generator_->train();
  // The generator's parameters are untouched by the discriminator update, so
  // one forward serves both phases.
  auto outputs = generator_->forward(batch.lr);
  const double dl = discriminator_phase(batch, outputs[2]);
  auto b = generator_phase(batch, outputs);
  b.dl_40x = dl;
  ++step_;
  if (!b.all_finite()) {
    json dump = b;
    dump["step"] = step_;
    dump["epoch"] = epoch;
    throw NumericalError("non-finite loss at step " + std::to_string(step_) + ": " + dump.dump());
  }
  return b;
}

MetricReport Trainer::validate(std::span<const TilePyramid> val_tiles) {
  return evaluate_generator(generator_, val_tiles).report;
}

void Trainer::train(std::span<const TilePyramid> train_tiles,
                    std::span<const TilePyramid> val_tiles, const TrainOptions& options) {
  if (train_tiles.empty()) throw DataError("no training tiles");
  std::ofstream log;
  if (!options.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(options.out_dir, ec);
    log.open(options.out_dir / "train_log.jsonl", std::ios::app);
    if (ec || !log) throw DataError("cannot write to " + options.out_dir.string());
  }

  for (int epoch = completed_epochs_; epoch < cfg_.epochs; ++epoch) {
    PatchStream stream(train_tiles, cfg_, epoch);
    const double lr = learning_rate(epoch, cfg_);
    for (int s = 0; s < cfg_.steps_per_epoch; ++s) {
      const auto pairs = stream.next(cfg_.batch_size);
      const auto b = train_step(make_batch(pairs, dtype_), epoch);
      if (log.is_open()) {
        json line = b;
        line["step"] = step_;
        line["epoch"] = epoch;
        line["lr"] = lr;
        line["flatness"] = stream.flatness();
        log << line.dump() << '\n';
      }
      if (options.on_step) options.on_step(epoch, step_, b);
    }
    completed_epochs_ = epoch + 1;
    if (cfg_.validate_each_epoch && !val_tiles.empty()) last_validation_ = validate(val_tiles);
    if (!options.out_dir.empty()) {
      log.flush();
      std::ostringstream name;
      name << "epoch_" << std::setw(4) << std::setfill('0') << completed_epochs_;
      save(options.out_dir / "checkpoints" / name.str());
    }
  }
}

void Trainer::save(const std::filesystem::path& dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create checkpoint directory " + dir.string());
  save_module_tensors(*generator_, dir / "generator.pt");
  save_module_tensors(*discriminator_, dir / "discriminator.pt");
  torch::save(*opt_g_, (dir / "optimizer_g.pt").string());
  torch::save(*opt_d_, (dir / "optimizer_d.pt").string());

  json meta = {{"schema", kCheckpointSchema},
               {"epoch", completed_epochs_},
               {"step", step_},
               {"seed", cfg_.seed},
               {"dtype", std::string(c10::toString(dtype_))},
               {"generator_config", cfg_.generator_config()},
               {"discriminator_config", cfg_.discriminator_config()},
               {"train_config", format_train_config(cfg_)},
               {"rng", {{"scheme", "splitmix64(seed, tile_id, epoch, draw)"}, {"seed", cfg_.seed}}}};
  if (last_validation_) meta["validation"] = *last_validation_;
  std::ofstream out(dir / "checkpoint.json");
  if (!out) throw DataError("cannot write " + (dir / "checkpoint.json").string());
  out << meta.dump(2) << '\n';
}

void Trainer::restore(const std::filesystem::path& dir) {
  const auto meta = read_checkpoint_meta(dir);
  if (meta.at("generator_config").get<GeneratorConfig>() != cfg_.generator_config() ||
      meta.at("discriminator_config").get<DiscriminatorConfig>() !=
          cfg_.discriminator_config()) {
    throw DataError("checkpoint " + dir.string() + " was written for a different architecture");
  }
  load_module_tensors(*generator_, dir / "generator.pt");
  load_module_tensors(*discriminator_, dir / "discriminator.pt");
  try {
    torch::load(*opt_g_, (dir / "optimizer_g.pt").string());
    torch::load(*opt_d_, (dir / "optimizer_d.pt").string());
  } catch (const c10::Error& e) {
    throw DataError("cannot load optimizer state from " + dir.string() + ": " +
                    e.what_without_backtrace());
  }
  completed_epochs_ = meta.at("epoch").get<int>();
  step_ = meta.at("step").get<std::int64_t>();
}

}  // namespace pathosr
