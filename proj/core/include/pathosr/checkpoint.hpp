#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "pathosr/generator.hpp"

namespace pathosr {

inline constexpr int kCheckpointSchema = 1;

// Checkpoint directory layout:
//   checkpoint.json     configs, epoch, step, seed, validation metrics
//   generator.pt        named tensors of the generator
//   discriminator.pt    named tensors of the discriminator
//   optimizer_g.pt, optimizer_d.pt   Adam state

/// Reads a torch.save()d / pickle_save()d dict of name -> tensor.
std::map<std::string, torch::Tensor> read_tensor_dict(const std::filesystem::path& path);

/// Writes every parameter and buffer of `module` as a name -> tensor dict.
void save_module_tensors(const torch::nn::Module& module, const std::filesystem::path& path);

/// Reads a file written by save_module_tensors into `module`, rejecting
/// missing names and shape disagreements with DataError.
void load_module_tensors(torch::nn::Module& module, const std::filesystem::path& path);

nlohmann::json read_checkpoint_meta(const std::filesystem::path& dir);

/// Builds a generator from the checkpoint's config and loads its weights.
Generator load_generator(const std::filesystem::path& dir);

}  // namespace pathosr
