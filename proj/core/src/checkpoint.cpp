#include "slu/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

namespace slu {

void save_checkpoint(const std::string& path, const ParamMap& params, std::uint64_t vocab_hash) {
  nlohmann::json j;
  j["format"] = "ctislu-checkpoint-v1";
  j["vocab_hash"] = vocab_hash;
  nlohmann::json tensors;
  for (const auto& [name, p] : params) {
    tensors[name] = {{"shape", p->shape}, {"values", p->v}};
  }
  j["params"] = std::move(tensors);
  std::ofstream out(path);
  if (!out) throw ConfigError("checkpoint: cannot write " + path);
  out << j.dump() << "\n";
}

LoadedCheckpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("checkpoint: cannot read " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != std::string("ctislu-checkpoint-v1"))
    throw ConfigError("checkpoint: unrecognized format in " + path);
  LoadedCheckpoint ck;
  ck.vocab_hash = j.at("vocab_hash").get<std::uint64_t>();
  for (const auto& [name, t] : j.at("params").items())
    ck.tensors[name] = {t.at("shape").get<std::vector<int>>(),
                        t.at("values").get<std::vector<double>>()};
  return ck;
}

void load_checkpoint(const std::string& path, ParamMap& params,
                     std::uint64_t expected_vocab_hash) {
  auto ck = read_checkpoint(path);
  if (ck.vocab_hash != expected_vocab_hash)
    throw VocabMismatchError("checkpoint " + path +
                             ": vocabulary hash mismatch (shared-vocabulary contract violated)");
  for (auto& [name, p] : params) {
    auto it = ck.tensors.find(name);
    if (it == ck.tensors.end())
      throw ConfigError("checkpoint " + path + ": missing parameter '" + name + "'");
    if (it->second.first != p->shape)
      throw ShapeError("checkpoint " + path + ": shape mismatch for '" + name + "'");
    p->v = it->second.second;
  }
  for (const auto& [name, _] : ck.tensors)
    if (!params.count(name))
      throw ConfigError("checkpoint " + path + ": unexpected parameter '" + name + "'");
}

}  // namespace slu
