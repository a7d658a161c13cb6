#include "slu/losses.hpp"

#include "slu/vocab.hpp"

namespace slu {

SpeechTaskLosses slu_loss(Graph& g, const NluOutput& nlu_out, const ExampleSupervision& gold,
                          const CrfParams& crf) {
  if (gold.intent < 0) throw StreamError("slu_loss: example has no intent label");
  const int t = static_cast<int>(gold.transcript_ids.size());
  if (nlu_out.slot_emissions->shape[0] != t ||
      static_cast<int>(gold.tags.size()) != t)
    throw AlignmentError(
        "slu_loss: Z length " + std::to_string(nlu_out.slot_emissions->shape[0]) +
        " does not match gold length " + std::to_string(t) +
        " (teacher-forced decoding is required for the SLU losses)");
  SpeechTaskLosses out;
  out.s2i = cross_entropy(g, nlu_out.intent_logits, {gold.intent});
  out.s2k = scale(g, crf_log_likelihood(g, nlu_out.slot_emissions, gold.tags, crf), -1.0);
  // All transcript positions contribute, not just slot values.
  out.s2v = cross_entropy(g, nlu_out.slot_value_logits, gold.transcript_ids);
  return out;
}

TextTaskLosses nlu_task_loss(Graph& g, const NluModel& model, const ExampleSupervision& gold,
                             double mask_prob, Rng& rng) {
  if (mask_prob < 0.0 || mask_prob > 1.0) throw ConfigError("nlu_task_loss: mask_prob outside [0,1]");
  const int t = static_cast<int>(gold.transcript_ids.size());
  std::vector<int> input_ids = gold.transcript_ids;
  std::vector<int> mlm_targets(t, -1);
  for (int i = 0; i < t; ++i) {
    if (input_ids[i] < Vocabulary::kNumSpecials) continue;
    if (rng.uniform() < mask_prob) {
      mlm_targets[i] = input_ids[i];
      input_ids[i] = Vocabulary::kMask;
    }
  }
  auto z = gold_interface(input_ids, model.vocab_size());
  auto nlu_out = model.forward(g, z);

  TextTaskLosses out;
  out.t2i = cross_entropy(g, nlu_out.intent_logits, {gold.intent});
  out.t2k = scale(g, crf_log_likelihood(g, nlu_out.slot_emissions, gold.tags, model.crf()), -1.0);
  bool any_masked = false;
  for (int m : mlm_targets)
    if (m >= 0) any_masked = true;
  if (any_masked) out.t2v = cross_entropy(g, nlu_out.slot_value_logits, mlm_targets, -1);
  return out;
}

TensorPtr asr_loss(Graph& g, const TensorPtr& logits, const std::vector<int>& gold_ids) {
  std::vector<int> targets = gold_ids;
  targets.push_back(Vocabulary::kEos);
  if (logits->shape[0] != static_cast<int>(targets.size()))
    throw AlignmentError("asr_loss: " + std::to_string(logits->shape[0]) + " logit rows for " +
                         std::to_string(targets.size()) + " targets");
  return cross_entropy(g, logits, targets, Vocabulary::kPad);
}

LossBundle total_loss(Graph& g, const BundleInputs& in, const LossWeights& w) {
  LossBundle b;
  b.weights = w;
  b.s2i = in.s2i;
  b.s2k = in.s2k;
  b.s2v = in.s2v;
  b.t2i = in.t2i;
  b.t2k = in.t2k;
  b.t2v = in.t2v;
  b.asr = in.asr;
  TensorPtr total;
  auto acc = [&](const std::optional<TensorPtr>& c, double weight) {
    if (!c) return;
    auto term = scale(g, *c, weight);
    total = total ? add(g, total, term) : term;
  };
  acc(in.s2i, w.s2i);
  acc(in.s2k, w.s2k);
  acc(in.s2v, w.s2v);
  acc(in.t2i, w.t2i);
  acc(in.t2k, w.t2k);
  acc(in.t2v, w.t2v);
  acc(in.asr, w.asr);
  if (!total) throw StreamError("total_loss: no loss components present in batch");
  b.total = total;
  return b;
}

}  // namespace slu
