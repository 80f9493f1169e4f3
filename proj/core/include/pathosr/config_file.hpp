#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "pathosr/trainer.hpp"

namespace pathosr {

// Flat `key = value` documents, one pair per line, `#` starts a comment.
// Keys follow the hyperparameter table names, e.g.
//
//   profile = tiny
//   epochs = 120
//   learning_rate = 0.0004
//   decay_frequency = 30
//   max_flatness = 0.15
//
// `profile` is applied first and supplies the defaults; any other key
// overrides it. Unknown keys raise UsageError naming the key.

TrainConfig parse_train_config(std::string_view text);
TrainConfig load_train_config(const std::filesystem::path& path);

/// Every key with its effective value; parse_train_config() round-trips it.
std::string format_train_config(const TrainConfig& cfg);

}  // namespace pathosr
