#include "slu/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "slu/cti.hpp"
#include "slu/ops.hpp"

namespace slu {

namespace {

using nlohmann::json;

std::vector<int> sample_batch(Rng& rng, std::size_t n, int batch_size) {
  std::vector<int> idx(batch_size);
  for (int i = 0; i < batch_size; ++i) idx[i] = rng.uniform_int(static_cast<int>(n));
  return idx;
}

TensorPtr features_for(const TrainContext& ctx, const UtteranceExample& ex,
                       const std::vector<int>& ids) {
  if (!ex.acoustic_seed || !ex.noise_level)
    throw StreamError("example " + std::to_string(ex.id) + " has no acoustic stream");
  return synthesize_features(ids, ctx.vocab.size(), *ex.acoustic_seed, *ex.noise_level,
                             ctx.cfg.data.acoustic);
}

// Mean of per-example scalar losses, as a graph node.
TensorPtr mean_of(Graph& g, const std::vector<TensorPtr>& xs) {
  TensorPtr acc;
  for (const auto& x : xs) acc = acc ? add(g, acc, x) : x;
  return scale(g, acc, 1.0 / static_cast<double>(xs.size()));
}

json loss_line(int step, const LossBundle& b) {
  json j;
  j["step"] = step;
  auto put = [&](const char* name, const std::optional<TensorPtr>& c) {
    if (c) j[name] = (*c)->v[0];
  };
  put("s2i", b.s2i);
  put("s2k", b.s2k);
  put("s2v", b.s2v);
  put("t2i", b.t2i);
  put("t2k", b.t2k);
  put("t2v", b.t2v);
  put("asr", b.asr);
  j["total"] = b.total->v[0];
  return j;
}

std::vector<UtteranceExample> capped(const std::vector<UtteranceExample>& set, int cap) {
  if (cap <= 0 || static_cast<int>(set.size()) <= cap) return set;
  return {set.begin(), set.begin() + cap};
}

ParamMap merged_params(AsrModel& asr, NluModel& nlu) {
  ParamMap all = asr.params();
  for (const auto& [name, p] : nlu.params()) all.emplace(name, p);
  return all;
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

TagInventory tag_inventory(const GrammarConfig& grammar) {
  return TagInventory{static_cast<int>(grammar.slot_types.size())};
}

ExampleSupervision supervision_for(const UtteranceExample& ex, const Vocabulary& vocab,
                                   const TagInventory& inv) {
  if (!ex.transcript) throw StreamError("example " + std::to_string(ex.id) + " has no transcript");
  ExampleSupervision s;
  s.transcript_ids = vocab.encode(*ex.transcript);
  s.intent = ex.intent.value_or(-1);
  if (ex.slots)
    s.tags = spans_to_tags(static_cast<int>(s.transcript_ids.size()),
                           annotation_spans(*ex.slots), inv);
  else
    s.tags.assign(s.transcript_ids.size(), TagInventory::kOutside);
  return s;
}

void RunRecord::write(const std::string& out_dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::ofstream cfg(out_dir + "/config.json");
  cfg << config_json << "\n";
  std::ofstream losses(out_dir + "/losses.jsonl");
  for (const auto& l : loss_lines) losses << l << "\n";
  std::ofstream metrics(out_dir + "/metrics.jsonl");
  for (const auto& l : metric_lines) metrics << l << "\n";
}

double dev_wer(const TrainContext& ctx, const AsrModel& model,
               const std::vector<UtteranceExample>& eval_set) {
  long total_edits = 0, total_len = 0;
  for (const auto& ex : eval_set) {
    const auto ids = ctx.vocab.encode(*ex.transcript);
    auto feats = features_for(ctx, ex, ids);
    Graph g;
    auto enc = model.encode(g, feats);
    auto res = model.decode_greedy(enc, model.config().max_decode_len);
    const double rate = wer(ids, res.ids);
    total_edits += static_cast<long>(std::lround(rate * ids.size()));
    total_len += static_cast<long>(ids.size());
  }
  return total_len > 0 ? static_cast<double>(total_edits) / total_len : 0.0;
}

RunRecord pretrain_asr(const TrainContext& ctx, AsrModel& model) {
  const auto& tc = ctx.cfg.train;
  auto stream = asr_stream(ctx.train);
  if (stream.empty()) throw StreamError("pretrain_asr: corpus has no (speech, transcript) pairs");
  RunRecord rec;
  rec.config_json = ctx.cfg.to_json();
  Adam opt(tc.adam);
  Rng rng(child_seed(ctx.cfg.seed, "train.asr"));
  const auto dev = capped(ctx.dev, ctx.eval_cap);
  for (int step = 1; step <= tc.steps; ++step) {
    Graph g;
    std::vector<TensorPtr> losses;
    for (int idx : sample_batch(rng, stream.size(), tc.batch_size)) {
      const auto& ex = stream[idx];
      const auto ids = ctx.vocab.encode(*ex.transcript);
      auto enc = model.encode(g, features_for(ctx, ex, ids));
      auto logits = model.decode_teacher_forced(g, enc, ids);
      losses.push_back(asr_loss(g, logits, ids));
    }
    BundleInputs in;
    in.asr = mean_of(g, losses);
    auto bundle = total_loss(g, in, tc.weights);
    g.backward(bundle.total);
    opt.step(model.params(), tc.freeze);
    rec.loss_lines.push_back(loss_line(step, bundle).dump());
    if (step % tc.eval_interval == 0 || step == tc.steps) {
      const double w = dev_wer(ctx, model, dev);
      rec.metric_lines.push_back(json{{"step", step}, {"wer", w}}.dump());
      rec.final_metrics.wer = w;
    }
  }
  return rec;
}

MetricsReport eval_nlu_gold(const TrainContext& ctx, const NluModel& nlu,
                            const std::vector<UtteranceExample>& eval_set) {
  const auto inv = tag_inventory(ctx.grammar);
  MetricsReport rep;
  SlotF1Accumulator span(F1Variant::kSpan), word(F1Variant::kWord), chars(F1Variant::kChar);
  std::vector<int> gold_intents, pred_intents;
  for (const auto& ex : eval_set) {
    const auto sup = supervision_for(ex, ctx.vocab, inv);
    Graph g;
    auto out = nlu.forward(g, gold_interface(sup.transcript_ids, ctx.vocab.size()));
    int arg = 0;
    for (int j = 1; j < nlu.n_intents(); ++j)
      if (out.intent_logits->v[j] > out.intent_logits->v[arg]) arg = j;
    gold_intents.push_back(sup.intent);
    pred_intents.push_back(arg);
    ++rep.intent_confusion[std::to_string(sup.intent) + "->" + std::to_string(arg)];

    std::vector<GoldSlot> gold_slots;
    if (ex.slots)
      for (const auto& s : *ex.slots) gold_slots.push_back({s.slot_type, s.value});
    std::vector<PredictedSlot> pred_slots;
    if (!sup.transcript_ids.empty()) {
      auto [tags, score] = crf_viterbi(out.slot_emissions, nlu.crf());
      for (const auto& sp : tags_to_spans(tags, inv)) {
        std::vector<int> value_ids;
        for (int t = sp.start; t < sp.end; ++t) {
          int a = 0;
          for (int j = 1; j < ctx.vocab.size(); ++j)
            if (out.slot_value_logits->at(t, j) > out.slot_value_logits->at(t, a)) a = j;
          value_ids.push_back(a);
        }
        pred_slots.push_back({sp.slot_type, ctx.vocab.decode(value_ids), sp.start, sp.end});
      }
    }
    span.add_example(gold_slots, pred_slots);
    word.add_example(gold_slots, pred_slots);
    chars.add_example(gold_slots, pred_slots);
  }
  rep.ic_accuracy = ic_accuracy(gold_intents, pred_intents);
  rep.span_f1 = span.result().f1;
  rep.word_f1 = word.result().f1;
  rep.char_f1 = chars.result().f1;
  rep.slu_f1 = (rep.span_f1 + rep.word_f1 + rep.char_f1) / 3.0;
  rep.example_count = static_cast<long>(eval_set.size());
  return rep;
}

double mlm_masked_accuracy(const TrainContext& ctx, const NluModel& nlu,
                           const std::vector<UtteranceExample>& eval_set, double mask_prob,
                           std::uint64_t seed) {
  Rng rng(child_seed(seed, "mlm.eval"));
  long correct = 0, total = 0;
  for (const auto& ex : eval_set) {
    auto ids = ctx.vocab.encode(*ex.transcript);
    std::vector<int> masked = ids, targets(ids.size(), -1);
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (rng.uniform() < mask_prob) {
        targets[i] = ids[i];
        masked[i] = Vocabulary::kMask;
      }
    Graph g;
    auto out = nlu.forward(g, gold_interface(masked, ctx.vocab.size()));
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (targets[i] < 0) continue;
      int a = 0;
      for (int j = 1; j < ctx.vocab.size(); ++j)
        if (out.slot_value_logits->at(static_cast<int>(i), j) >
            out.slot_value_logits->at(static_cast<int>(i), a))
          a = j;
      ++total;
      if (a == targets[i]) ++correct;
    }
  }
  return total > 0 ? static_cast<double>(correct) / total : 0.0;
}

RunRecord pretrain_nlu(const TrainContext& ctx, NluModel& model) {
  const auto& tc = ctx.cfg.train;
  auto stream = nlu_stream(ctx.train);
  std::erase_if(stream, [](const UtteranceExample& e) { return !e.slots; });
  if (stream.empty()) throw StreamError("pretrain_nlu: corpus has no (text, intent, slot) triples");
  const auto inv = tag_inventory(ctx.grammar);
  RunRecord rec;
  rec.config_json = ctx.cfg.to_json();
  Adam opt(tc.adam);
  Rng rng(child_seed(ctx.cfg.seed, "train.nlu"));
  const auto dev = capped(ctx.dev, ctx.eval_cap);

  // Phase 1: masked-token reconstruction through the slot-value head.
  for (int step = 1; step <= tc.mlm_steps; ++step) {
    Graph g;
    std::vector<TensorPtr> losses;
    for (int idx : sample_batch(rng, stream.size(), tc.batch_size)) {
      const auto sup = supervision_for(stream[idx], ctx.vocab, inv);
      std::vector<int> masked = sup.transcript_ids, targets(masked.size(), -1);
      bool any = false;
      for (std::size_t i = 0; i < masked.size(); ++i)
        if (rng.uniform() < tc.mask_prob) {
          targets[i] = masked[i];
          masked[i] = Vocabulary::kMask;
          any = true;
        }
      auto out = model.forward(g, gold_interface(masked, ctx.vocab.size()));
      if (any) losses.push_back(cross_entropy(g, out.slot_value_logits, targets, -1));
    }
    BundleInputs in;
    if (!losses.empty()) in.t2v = mean_of(g, losses);
    if (!in.t2v) {
      rec.loss_lines.push_back(json{{"step", step}, {"phase", "mlm"}, {"total", 0.0}}.dump());
      continue;  // no masked positions anywhere in the batch
    }
    auto bundle = total_loss(g, in, tc.weights);
    g.backward(bundle.total);
    opt.step(model.params(), tc.freeze);
    auto j = loss_line(step, bundle);
    j["phase"] = "mlm";
    rec.loss_lines.push_back(j.dump());
  }

  // Phase 2: the three text-task losses.
  for (int step = 1; step <= tc.steps; ++step) {
    Graph g;
    std::vector<TensorPtr> t2i, t2k, t2v;
    Rng mask_rng = rng.child("mask");
    for (int idx : sample_batch(rng, stream.size(), tc.batch_size)) {
      const auto sup = supervision_for(stream[idx], ctx.vocab, inv);
      auto l = nlu_task_loss(g, model, sup, tc.mask_prob, mask_rng);
      t2i.push_back(l.t2i);
      t2k.push_back(l.t2k);
      if (l.t2v) t2v.push_back(l.t2v);
    }
    BundleInputs in;
    in.t2i = mean_of(g, t2i);
    in.t2k = mean_of(g, t2k);
    if (!t2v.empty()) in.t2v = mean_of(g, t2v);
    auto bundle = total_loss(g, in, tc.weights);
    g.backward(bundle.total);
    opt.step(model.params(), tc.freeze);
    auto j = loss_line(step, bundle);
    j["phase"] = "nlu";
    rec.loss_lines.push_back(j.dump());
    if (step % tc.eval_interval == 0 || step == tc.steps) {
      auto rep = eval_nlu_gold(ctx, model, dev);
      rec.metric_lines.push_back(json{{"step", step},
                                      {"ic_accuracy", rep.ic_accuracy},
                                      {"span_f1", rep.span_f1}}
                                     .dump());
      rec.final_metrics = rep;
    }
  }
  return rec;
}

MetricsReport compose_inference(const TrainContext& ctx, const AsrModel& asr, const NluModel& nlu,
                                InterfaceMode mode, const std::vector<UtteranceExample>& eval_set,
                                std::vector<std::string>* per_example_dump) {
  if (asr.vocab_size() != nlu.vocab_size())
    throw VocabMismatchError("compose_inference: ASR and NLU vocabulary sizes differ");
  const auto inv = tag_inventory(ctx.grammar);
  MetricsReport rep;
  SlotF1Accumulator span(F1Variant::kSpan), word(F1Variant::kWord), chars(F1Variant::kChar);
  std::vector<int> gold_intents, pred_intents;
  long total_edits = 0, total_len = 0;
  for (const auto& ex : eval_set) {
    const auto sup = supervision_for(ex, ctx.vocab, inv);
    auto feats = features_for(ctx, ex, sup.transcript_ids);
    Graph g;
    auto enc = asr.encode(g, feats);
    auto res = asr.decode_greedy(enc, asr.config().max_decode_len);
    {
      const double rate = wer(sup.transcript_ids, res.ids);
      total_edits += static_cast<long>(std::lround(rate * sup.transcript_ids.size()));
      total_len += static_cast<long>(sup.transcript_ids.size());
    }
    TokenDistSeq z = mode == InterfaceMode::kContinuous ? continuous_interface(g, res.logits)
                                                        : discrete_interface(res.logits);
    auto out = nlu.forward(g, z);
    int arg = 0;
    for (int j = 1; j < nlu.n_intents(); ++j)
      if (out.intent_logits->v[j] > out.intent_logits->v[arg]) arg = j;
    gold_intents.push_back(sup.intent);
    pred_intents.push_back(arg);
    ++rep.intent_confusion[std::to_string(sup.intent) + "->" + std::to_string(arg)];

    std::vector<GoldSlot> gold_slots;
    if (ex.slots)
      for (const auto& s : *ex.slots) gold_slots.push_back({s.slot_type, s.value});
    std::vector<PredictedSlot> pred_slots;
    if (z.length() > 0) {
      auto [tags, score] = crf_viterbi(out.slot_emissions, nlu.crf());
      for (const auto& sp : tags_to_spans(tags, inv)) {
        std::vector<int> value_ids;
        for (int t = sp.start; t < sp.end; ++t) {
          int a = 0;
          for (int j = 1; j < ctx.vocab.size(); ++j)
            if (out.slot_value_logits->at(t, j) > out.slot_value_logits->at(t, a)) a = j;
          value_ids.push_back(a);
        }
        pred_slots.push_back({sp.slot_type, ctx.vocab.decode(value_ids), sp.start, sp.end});
      }
    }
    span.add_example(gold_slots, pred_slots);
    word.add_example(gold_slots, pred_slots);
    chars.add_example(gold_slots, pred_slots);
    if (per_example_dump) {
      json j;
      j["id"] = ex.id;
      j["gold_intent"] = sup.intent;
      j["pred_intent"] = arg;
      j["gold_transcript"] = *ex.transcript;
      j["hypothesis"] = ctx.vocab.decode(res.ids);
      per_example_dump->push_back(j.dump());
    }
  }
  rep.wer = total_len > 0 ? static_cast<double>(total_edits) / total_len : 0.0;
  rep.ic_accuracy = ic_accuracy(gold_intents, pred_intents);
  rep.span_f1 = span.result().f1;
  rep.word_f1 = word.result().f1;
  rep.char_f1 = chars.result().f1;
  rep.slu_f1 = (rep.span_f1 + rep.word_f1 + rep.char_f1) / 3.0;
  rep.example_count = static_cast<long>(eval_set.size());
  return rep;
}

RunRecord train_e2e(const TrainContext& ctx, AsrModel& asr, NluModel& nlu) {
  const auto& tc = ctx.cfg.train;
  if (asr.vocab_size() != nlu.vocab_size())
    throw VocabMismatchError("train_e2e: ASR and NLU vocabulary sizes differ");
  const auto inv = tag_inventory(ctx.grammar);
  auto speech_full = ctx.train;
  std::erase_if(speech_full, [](const UtteranceExample& e) {
    return !e.transcript || !e.intent || !e.slots || !e.acoustic_seed;
  });
  auto speech_text = asr_stream(ctx.train);
  auto text_only = nlu_stream(ctx.train);
  std::erase_if(text_only, [](const UtteranceExample& e) { return !e.slots; });
  const bool multitask = tc.regime == "e2e_multitask";
  if (speech_full.empty()) throw StreamError("train_e2e: no fully annotated speech examples");

  RunRecord rec;
  rec.config_json = ctx.cfg.to_json();
  auto all_params = merged_params(asr, nlu);
  Adam opt(tc.adam);
  Rng rng(child_seed(ctx.cfg.seed, "train.e2e"));
  const auto dev = capped(ctx.dev, ctx.eval_cap);
  for (int step = 1; step <= tc.steps; ++step) {
    int stream = 0;
    if (multitask) {
      const double r = rng.uniform();
      stream = r < tc.mix_ratios[0] ? 0 : (r < tc.mix_ratios[0] + tc.mix_ratios[1] ? 1 : 2);
    }
    Graph g;
    BundleInputs in;
    Rng mask_rng = rng.child("mask");
    if (stream == 0) {
      std::vector<TensorPtr> s2i, s2k, s2v, asr_l;
      for (int idx : sample_batch(rng, speech_full.size(), tc.batch_size)) {
        const auto& ex = speech_full[idx];
        const auto sup = supervision_for(ex, ctx.vocab, inv);
        auto enc = asr.encode(g, features_for(ctx, ex, sup.transcript_ids));
        auto logits = asr.decode_teacher_forced(g, enc, sup.transcript_ids);
        asr_l.push_back(asr_loss(g, logits, sup.transcript_ids));
        TokenDistSeq z;
        if (tc.e2e_decode_mode == "teacher_forced") {
          z = continuous_interface(
              g, slice_rows(g, logits, 0, static_cast<int>(sup.transcript_ids.size())));
        } else {
          auto res = asr.decode_greedy(enc, asr.config().max_decode_len);
          if (res.ids.size() != sup.transcript_ids.size()) continue;  // misaligned hypothesis
          z = continuous_interface(g, res.logits);
        }
        auto nlu_out = nlu.forward(g, z);
        auto l = slu_loss(g, nlu_out, sup, nlu.crf());
        s2i.push_back(l.s2i);
        s2k.push_back(l.s2k);
        s2v.push_back(l.s2v);
      }
      in.asr = mean_of(g, asr_l);
      if (!s2i.empty()) {
        in.s2i = mean_of(g, s2i);
        in.s2k = mean_of(g, s2k);
        in.s2v = mean_of(g, s2v);
      }
    } else if (stream == 1) {
      if (speech_text.empty()) throw StreamError("train_e2e: speech-text stream is empty");
      std::vector<TensorPtr> asr_l;
      for (int idx : sample_batch(rng, speech_text.size(), tc.batch_size)) {
        const auto& ex = speech_text[idx];
        const auto ids = ctx.vocab.encode(*ex.transcript);
        auto enc = asr.encode(g, features_for(ctx, ex, ids));
        asr_l.push_back(asr_loss(g, asr.decode_teacher_forced(g, enc, ids), ids));
      }
      in.asr = mean_of(g, asr_l);
    } else {
      if (text_only.empty()) throw StreamError("train_e2e: text-only stream is empty");
      std::vector<TensorPtr> t2i, t2k, t2v;
      for (int idx : sample_batch(rng, text_only.size(), tc.batch_size)) {
        const auto sup = supervision_for(text_only[idx], ctx.vocab, inv);
        auto l = nlu_task_loss(g, nlu, sup, tc.mask_prob, mask_rng);
        t2i.push_back(l.t2i);
        t2k.push_back(l.t2k);
        if (l.t2v) t2v.push_back(l.t2v);
      }
      in.t2i = mean_of(g, t2i);
      in.t2k = mean_of(g, t2k);
      if (!t2v.empty()) in.t2v = mean_of(g, t2v);
    }
    auto bundle = total_loss(g, in, tc.weights);
    g.backward(bundle.total);
    opt.step(all_params, tc.freeze);
    auto j = loss_line(step, bundle);
    j["stream"] = stream;
    rec.loss_lines.push_back(j.dump());
    if (step % tc.eval_interval == 0 || step == tc.steps) {
      auto rep = compose_inference(ctx, asr, nlu, InterfaceMode::kContinuous, dev);
      rec.metric_lines.push_back(json{{"step", step},
                                      {"ic_accuracy", rep.ic_accuracy},
                                      {"span_f1", rep.span_f1},
                                      {"wer", rep.wer}}
                                     .dump());
      rec.final_metrics = rep;
    }
  }
  return rec;
}

}  // namespace slu
