#pragma once

#include <optional>
#include <string>
#include <vector>

#include "slu/common.hpp"
#include "slu/tensor.hpp"
#include "slu/vocab.hpp"

namespace slu {

struct SlotAnnotation {
  int slot_type = 0;            // index into GrammarConfig::slot_types
  std::string value;            // surface text
  int start_token = 0;          // half-open token span into the transcript
  int end_token = 0;
};

// One sample. Optional fields model the heterogeneous streams: an ASR-only
// example drops intent/slots, a text-only example drops the acoustic seed.
struct UtteranceExample {
  long id = 0;
  std::optional<std::string> transcript;
  std::optional<int> intent;
  std::optional<std::vector<SlotAnnotation>> slots;
  std::optional<std::uint64_t> acoustic_seed;
  std::optional<double> noise_level;

  bool has_speech() const { return acoustic_seed.has_value(); }
  void validate() const;
};

struct SlotLexicon {
  std::string name;
  std::vector<std::string> values;
};

struct IntentTemplates {
  std::string name;
  std::vector<std::string> templates;  // "{slot}" placeholders
};

struct GrammarConfig {
  std::vector<SlotLexicon> slot_types;
  std::vector<IntentTemplates> intents;

  int slot_type_index(const std::string& name) const;
  void validate() const;
};

// 8 intents, 6 slot types, 40+ templates, vocabulary around 150 word types.
GrammarConfig default_grammar();

struct CorpusParams {
  int n_examples = 2500;
  double noise_level = 0.3;
  std::uint64_t seed = 1;
};

std::vector<UtteranceExample> generate_corpus(const GrammarConfig& grammar,
                                              const CorpusParams& params);

// Simulated speech: every token id owns a fixed pseudo-random prototype frame
// (from the global codebook seed), repeated k times, plus i.i.d. Gaussian
// noise of std noise_level seeded by the example's acoustic seed.
struct AcousticConfig {
  int k = 4;
  int d_feat = 32;
  std::uint64_t codebook_seed = 8675309;
};

TensorPtr synthesize_features(const std::vector<int>& transcript_ids, int vocab_size,
                              std::uint64_t acoustic_seed, double noise_level,
                              const AcousticConfig& cfg);

TensorPtr token_prototype(int token_id, const AcousticConfig& cfg);

struct CorpusSplits {
  std::vector<UtteranceExample> train, dev, test;
};

// Deterministic, disjoint, exhaustive, stratified by intent.
CorpusSplits split_corpus(const std::vector<UtteranceExample>& corpus,
                          const std::vector<double>& ratios, std::uint64_t seed);

void save_jsonl(const std::vector<UtteranceExample>& corpus, const std::string& path);
std::vector<UtteranceExample> load_jsonl(const std::string& path);

// Stream views for heterogeneous multi-task training.
std::vector<UtteranceExample> asr_stream(const std::vector<UtteranceExample>& corpus);
std::vector<UtteranceExample> nlu_stream(const std::vector<UtteranceExample>& corpus);

}  // namespace slu
