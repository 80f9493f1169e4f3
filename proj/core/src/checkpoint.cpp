#include "pathosr/checkpoint.hpp"

#include <fstream>
#include <iterator>

#include "pathosr/errors.hpp"

namespace pathosr {

namespace {

std::vector<std::pair<std::string, torch::Tensor>> named_tensors(const torch::nn::Module& module) {
  std::vector<std::pair<std::string, torch::Tensor>> out;
  for (const auto& item : module.named_parameters(/*recurse=*/true)) {
    out.emplace_back(item.key(), item.value());
  }
  for (const auto& item : module.named_buffers(/*recurse=*/true)) {
    out.emplace_back(item.key(), item.value());
  }
  return out;
}

}  // namespace

void save_module_tensors(const torch::nn::Module& module, const std::filesystem::path& path) {
  c10::Dict<std::string, torch::Tensor> dict;
  for (const auto& [name, tensor] : named_tensors(module)) {
    dict.insert(name, tensor.detach().clone());
  }
  const auto bytes = torch::pickle_save(c10::IValue(dict));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("cannot write " + path.string());
}

std::map<std::string, torch::Tensor> read_tensor_dict(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::map<std::string, torch::Tensor> out;
  try {
    const auto value = torch::pickle_load(bytes);
    for (const auto& item : value.toGenericDict()) {
      out.emplace(item.key().toStringRef(), item.value().toTensor());
    }
  } catch (const c10::Error& e) {
    throw DataError("cannot parse tensor file " + path.string() + ": " +
                    e.what_without_backtrace());
  }
  return out;
}

void load_module_tensors(torch::nn::Module& module, const std::filesystem::path& path) {
  const auto dict = read_tensor_dict(path);
  const auto targets = named_tensors(module);
  if (dict.size() != targets.size()) {
    throw DataError(path.string() + ": holds " + std::to_string(dict.size()) +
                    " tensors, model expects " + std::to_string(targets.size()));
  }
  torch::NoGradGuard no_grad;
  for (const auto& [name, target] : targets) {
    auto it = dict.find(name);
    if (it == dict.end()) throw DataError(path.string() + ": missing tensor '" + name + "'");
    const auto& source = it->second;
    if (source.sizes() != target.sizes()) {
      throw DataError(path.string() + ": tensor '" + name + "' has shape " +
                      c10::str(source.sizes()) + ", model expects " + c10::str(target.sizes()));
    }
    target.copy_(source);
  }
}

nlohmann::json read_checkpoint_meta(const std::filesystem::path& dir) {
  const auto path = dir / "checkpoint.json";
  std::ifstream in(path);
  if (!in) throw DataError("no checkpoint at " + dir.string());
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (meta.value("schema", 0) != kCheckpointSchema) {
    throw DataError(path.string() + ": unsupported checkpoint schema");
  }
  return meta;
}

Generator load_generator(const std::filesystem::path& dir) {
  const auto meta = read_checkpoint_meta(dir);
  GeneratorConfig cfg;
  try {
    cfg = meta.at("generator_config").get<GeneratorConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(dir.string() + ": bad generator_config: " + e.what());
  }
  Generator g(cfg);
  load_module_tensors(*g, dir / "generator.pt");
  g->eval();
  return g;
}

}  // namespace pathosr
