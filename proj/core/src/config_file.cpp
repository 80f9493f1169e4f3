#include "pathosr/config_file.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include "pathosr/errors.hpp"

namespace pathosr {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw UsageError("config key '" + std::string(key) + "': invalid value '" +
                     std::string(value) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw UsageError("config key '" + std::string(key) + "': expected true/false");
}

std::string format_double(double v) {
  // Plain decimals read better in config files; scientific only for extreme values.
  char buf[512];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed);
  if (ec == std::errc() && ptr - buf <= 24) return std::string(buf, ptr);
  ptr = std::to_chars(buf, buf + sizeof(buf), v).ptr;
  return std::string(buf, ptr);
}

using Setter = std::function<void(TrainConfig&, std::string_view key, std::string_view value)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"epochs", [](auto& c, auto k, auto v) { c.epochs = parse_number<int>(k, v); }},
      {"steps_per_epoch",
       [](auto& c, auto k, auto v) { c.steps_per_epoch = parse_number<int>(k, v); }},
      {"batch_size", [](auto& c, auto k, auto v) { c.batch_size = parse_number<int>(k, v); }},
      {"learning_rate",
       [](auto& c, auto k, auto v) { c.learning_rate = parse_number<double>(k, v); }},
      {"adam_beta1", [](auto& c, auto k, auto v) { c.adam_beta1 = parse_number<double>(k, v); }},
      {"adam_beta2", [](auto& c, auto k, auto v) { c.adam_beta2 = parse_number<double>(k, v); }},
      {"decay_factor",
       [](auto& c, auto k, auto v) { c.decay_factor = parse_number<double>(k, v); }},
      {"decay_frequency",
       [](auto& c, auto k, auto v) { c.decay_every_epochs = parse_number<int>(k, v); }},
      {"patches_per_image",
       [](auto& c, auto k, auto v) { c.patches_per_image = parse_number<int>(k, v); }},
      {"patch_size", [](auto& c, auto k, auto v) { c.patch_size = parse_number<int>(k, v); }},
      {"min_flatness",
       [](auto& c, auto k, auto v) { c.flatness.start = parse_number<double>(k, v); }},
      {"max_flatness",
       [](auto& c, auto k, auto v) { c.flatness.max = parse_number<double>(k, v); }},
      {"flatness_increment",
       [](auto& c, auto k, auto v) { c.flatness.increment = parse_number<double>(k, v); }},
      {"flatness_period",
       [](auto& c, auto k, auto v) { c.flatness.period_epochs = parse_number<int>(k, v); }},
      {"validation_fraction",
       [](auto& c, auto k, auto v) { c.val_fraction = parse_number<double>(k, v); }},
      {"seed", [](auto& c, auto k, auto v) { c.seed = parse_number<std::uint64_t>(k, v); }},
      {"generator_loss_weight",
       [](auto& c, auto k, auto v) { c.weights.w_gl = parse_number<double>(k, v); }},
      {"perceptual_loss_weight",
       [](auto& c, auto k, auto v) { c.weights.w_pl = parse_number<double>(k, v); }},
      {"discriminator_loss_weight",
       [](auto& c, auto k, auto v) { c.weights.w_dl = parse_number<double>(k, v); }},
      {"extractor",
       [](auto& c, auto k, auto v) {
         if (v == "random") {
           c.extractor = ExtractorBackend::kRandom;
         } else if (v == "vgg19") {
           c.extractor = ExtractorBackend::kPretrainedVgg19;
         } else {
           throw UsageError("config key '" + std::string(k) + "': expected random or vgg19");
         }
       }},
      {"vgg19_weights", [](auto& c, auto, auto v) { c.vgg19_weights = std::string(v); }},
      {"workers", [](auto& c, auto k, auto v) { c.workers = parse_number<int>(k, v); }},
      {"validate_each_epoch",
       [](auto& c, auto k, auto v) { c.validate_each_epoch = parse_bool(k, v); }},
  };
  return table;
}

}  // namespace

TrainConfig parse_train_config(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string profile;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "profile") {
      profile = std::string(value);
      continue;
    }
    if (!setters().contains(key)) throw UsageError("unknown config key '" + std::string(key) + "'");
    pairs.emplace_back(key, value);
  }

  TrainConfig cfg;
  if (profile == "tiny") {
    cfg = TrainConfig::tiny();
  } else if (!profile.empty() && profile != "paper") {
    throw UsageError("config key 'profile': expected paper or tiny");
  }
  for (const auto& [key, value] : pairs) setters().find(key)->second(cfg, key, value);
  cfg.validate();
  return cfg;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_train_config(buf.str());
}

std::string format_train_config(const TrainConfig& c) {
  std::ostringstream out;
  out << "profile = " << to_string(c.profile) << '\n'
      << "epochs = " << c.epochs << '\n'
      << "steps_per_epoch = " << c.steps_per_epoch << '\n'
      << "batch_size = " << c.batch_size << '\n'
      << "learning_rate = " << format_double(c.learning_rate) << '\n'
      << "adam_beta1 = " << format_double(c.adam_beta1) << '\n'
      << "adam_beta2 = " << format_double(c.adam_beta2) << '\n'
      << "decay_factor = " << format_double(c.decay_factor) << '\n'
      << "decay_frequency = " << c.decay_every_epochs << '\n'
      << "patches_per_image = " << c.patches_per_image << '\n'
      << "patch_size = " << c.patch_size << '\n'
      << "min_flatness = " << format_double(c.flatness.start) << '\n'
      << "max_flatness = " << format_double(c.flatness.max) << '\n'
      << "flatness_increment = " << format_double(c.flatness.increment) << '\n'
      << "flatness_period = " << c.flatness.period_epochs << '\n'
      << "validation_fraction = " << format_double(c.val_fraction) << '\n'
      << "seed = " << c.seed << '\n'
      << "generator_loss_weight = " << format_double(c.weights.w_gl) << '\n'
      << "perceptual_loss_weight = " << format_double(c.weights.w_pl) << '\n'
      << "discriminator_loss_weight = " << format_double(c.weights.w_dl) << '\n'
      << "extractor = "
      << (c.extractor == ExtractorBackend::kRandom ? "random" : "vgg19") << '\n';
  if (!c.vgg19_weights.empty()) out << "vgg19_weights = " << c.vgg19_weights.string() << '\n';
  out << "workers = " << c.workers << '\n'
      << "validate_each_epoch = " << (c.validate_each_epoch ? "true" : "false") << '\n';
  return out.str();
}

}  // namespace pathosr
