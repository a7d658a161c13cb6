#pragma once

#include <string>
#include <vector>

#include "slu/data.hpp"
#include "slu/losses.hpp"
#include "slu/model.hpp"

namespace slu {

struct DataConfig {
  int n_examples = 2500;
  double noise_level = 0.3;
  std::vector<double> ratios = {0.8, 0.1, 0.1};
  int min_count = 1;
  AcousticConfig acoustic;
};

struct TrainSection {
  std::string regime = "e2e";  // asr_pretrain | nlu_pretrain | e2e | e2e_multitask
  int steps = 2000;
  int batch_size = 8;
  AdamConfig adam;
  double mask_prob = 0.15;
  double dropout = 0.0;
  LossWeights weights;
  // speech-full, speech-text-only, text-only; batch granularity.
  std::vector<double> mix_ratios = {0.5, 0.25, 0.25};
  std::string e2e_decode_mode = "teacher_forced";  // | greedy
  std::vector<std::string> freeze;
  int eval_interval = 200;
  int mlm_steps = 500;  // masked-reconstruction phase of NLU pretraining
};

struct Config {
  std::uint64_t seed = 1;
  DataConfig data;
  AsrConfig asr;
  NluConfig nlu;
  TrainSection train;

  void validate() const;
  std::string to_json() const;
  static Config from_json(const std::string& text);
  static Config load(const std::string& path);
  // Dotted-key overrides, e.g. "train.steps=100"; re-validated afterwards.
  void apply_overrides(const std::vector<std::string>& overrides);
};

}  // namespace slu
