#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "slu/checkpoint.hpp"
#include "slu/config.hpp"
#include "slu/metrics.hpp"

namespace slu {

// Everything a training run needs besides the models.
struct TrainContext {
  Config cfg;
  GrammarConfig grammar;
  Vocabulary vocab;
  std::vector<UtteranceExample> train;
  std::vector<UtteranceExample> dev;
  // Cap on dev examples scored at each eval interval (0 = all).
  int eval_cap = 200;
};

struct RunRecord {
  std::string config_json;
  std::vector<std::string> loss_lines;    // one JSON object per step
  std::vector<std::string> metric_lines;  // one JSON object per eval
  MetricsReport final_metrics;

  void write(const std::string& out_dir) const;
};

TagInventory tag_inventory(const GrammarConfig& grammar);

ExampleSupervision supervision_for(const UtteranceExample& ex, const Vocabulary& vocab,
                                   const TagInventory& inv);

// ASR-only training on (features, transcript); reports dev WER.
RunRecord pretrain_asr(const TrainContext& ctx, AsrModel& model);

// Masked-reconstruction phase followed by the text-task losses on gold
// transcripts; reports gold-text dev IC accuracy and slot F1.
RunRecord pretrain_nlu(const TrainContext& ctx, NluModel& model);

// Wires ASR -> CTI -> NLU and trains the enabled components of the total
// loss; with regime e2e_multitask each batch's stream is drawn from the
// configured mixing ratios.
RunRecord train_e2e(const TrainContext& ctx, AsrModel& asr, NluModel& nlu);

enum class InterfaceMode { kContinuous, kDiscrete };

// No training: greedy ASR decode -> chosen interface -> NLU, scored against
// gold intent/slots, plus WER of the hypotheses.
MetricsReport compose_inference(const TrainContext& ctx, const AsrModel& asr, const NluModel& nlu,
                                InterfaceMode mode, const std::vector<UtteranceExample>& eval_set,
                                std::vector<std::string>* per_example_dump = nullptr);

// Gold-transcript NLU evaluation (the text-input baseline row).
MetricsReport eval_nlu_gold(const TrainContext& ctx, const NluModel& nlu,
                            const std::vector<UtteranceExample>& eval_set);

// Masked-token reconstruction accuracy on held-out masks.
double mlm_masked_accuracy(const TrainContext& ctx, const NluModel& nlu,
                           const std::vector<UtteranceExample>& eval_set, double mask_prob,
                           std::uint64_t seed);

double dev_wer(const TrainContext& ctx, const AsrModel& model,
               const std::vector<UtteranceExample>& eval_set);

std::string format_double(double x);  // shortest round-trip-exact form

}  // namespace slu
