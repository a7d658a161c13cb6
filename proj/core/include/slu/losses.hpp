#pragma once

#include <optional>

#include "slu/iob.hpp"
#include "slu/model.hpp"

namespace slu {

struct LossWeights {
  double s2i = 1.0, s2k = 1.0, s2v = 1.0;
  double t2i = 1.0, t2k = 1.0, t2v = 1.0;
  double asr = 1.0;
};

// Named scalar losses; a component is absent when the batch lacks that
// supervision. total is the weighted sum of present components.
struct LossBundle {
  std::optional<TensorPtr> s2i, s2k, s2v, t2i, t2k, t2v, asr;
  LossWeights weights;
  TensorPtr total;

  double value(const std::optional<TensorPtr>& c) const { return c ? (*c)->v[0] : 0.0; }
};

struct SpeechTaskLosses {
  TensorPtr s2i, s2k, s2v;
};
struct TextTaskLosses {
  TensorPtr t2i, t2k, t2v;  // t2v null when no position was masked
};

// Gold supervision for one example, in shared-vocabulary token ids.
struct ExampleSupervision {
  std::vector<int> transcript_ids;
  int intent = -1;
  std::vector<int> tags;  // IOB over transcript positions
};

// Losses over NLU outputs computed from a continuous (teacher-forced) Z whose
// length matches the gold transcript.
SpeechTaskLosses slu_loss(Graph& g, const NluOutput& nlu_out, const ExampleSupervision& gold,
                          const CrfParams& crf);

// Gold one-hot input with tokens independently replaced by MASK with
// probability mask_prob; t2v is cross-entropy at masked positions only.
TextTaskLosses nlu_task_loss(Graph& g, const NluModel& model, const ExampleSupervision& gold,
                             double mask_prob, Rng& rng);

// Token-level cross-entropy of teacher-forced logits against gold + EOS.
TensorPtr asr_loss(Graph& g, const TensorPtr& logits, const std::vector<int>& gold_ids);

struct BundleInputs {
  std::optional<TensorPtr> s2i, s2k, s2v, t2i, t2k, t2v, asr;
};

LossBundle total_loss(Graph& g, const BundleInputs& inputs, const LossWeights& weights);

}  // namespace slu
