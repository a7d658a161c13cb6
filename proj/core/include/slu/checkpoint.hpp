#pragma once

#include <string>

#include "slu/optim.hpp"

namespace slu {

// Human-inspectable JSON checkpoint: parameter name -> { shape, values },
// plus the vocabulary fingerprint that gates checkpoint composition.
void save_checkpoint(const std::string& path, const ParamMap& params, std::uint64_t vocab_hash);

struct LoadedCheckpoint {
  std::map<std::string, std::pair<std::vector<int>, std::vector<double>>> tensors;
  std::uint64_t vocab_hash = 0;
};

LoadedCheckpoint read_checkpoint(const std::string& path);

// Copies values into an existing parameter map; shape or name mismatches are
// errors, and the vocabulary hash must match `expected_vocab_hash`.
void load_checkpoint(const std::string& path, ParamMap& params, std::uint64_t expected_vocab_hash);

}  // namespace slu
