#include <doctest.h>

#include <cmath>
#include <json.hpp>

#include "slu/trainer.hpp"

using namespace slu;
using nlohmann::json;

namespace {

TrainContext tiny_ctx(int n_examples, double noise, std::uint64_t seed) {
  TrainContext ctx;
  Config cfg;
  cfg.seed = seed;
  cfg.data.n_examples = n_examples;
  cfg.data.noise_level = noise;
  cfg.data.acoustic.k = 2;
  cfg.data.acoustic.d_feat = 8;
  cfg.asr.d_feat = 8;
  cfg.asr.d = 32;
  cfg.asr.n_enc = 1;
  cfg.asr.n_dec = 1;
  cfg.asr.heads = 2;
  cfg.asr.max_decode_len = 24;
  cfg.nlu.d = 32;
  cfg.nlu.n_layers = 1;
  cfg.nlu.heads = 2;
  cfg.train.batch_size = 4;
  cfg.validate();
  ctx.cfg = cfg;
  ctx.grammar = default_grammar();
  CorpusParams cp;
  cp.n_examples = n_examples;
  cp.noise_level = noise;
  cp.seed = child_seed(seed, "data");
  auto corpus = generate_corpus(ctx.grammar, cp);
  std::vector<std::string> transcripts;
  for (const auto& ex : corpus) transcripts.push_back(*ex.transcript);
  ctx.vocab = Vocabulary::build(transcripts, 1);
  auto splits = split_corpus(corpus, cfg.data.ratios, child_seed(seed, "split"));
  ctx.train = std::move(splits.train);
  ctx.dev = std::move(splits.dev);
  ctx.eval_cap = 40;
  return ctx;
}

AsrModel make_asr(const TrainContext& ctx) {
  return AsrModel(ctx.cfg.asr, ctx.vocab.size(), child_seed(ctx.cfg.seed, "model.asr"));
}

NluModel make_nlu(const TrainContext& ctx) {
  const auto inv = tag_inventory(ctx.grammar);
  return NluModel(ctx.cfg.nlu, ctx.vocab.size(), static_cast<int>(ctx.grammar.intents.size()),
                  inv.size(), child_seed(ctx.cfg.seed, "model.nlu"));
}

double mean_field(const std::vector<std::string>& lines, const char* key, std::size_t from,
                  std::size_t to) {
  double acc = 0;
  int n = 0;
  for (std::size_t i = from; i < to && i < lines.size(); ++i) {
    auto j = json::parse(lines[i]);
    if (j.contains(key)) {
      acc += j[key].get<double>();
      ++n;
    }
  }
  REQUIRE(n > 0);
  return acc / n;
}

}  // namespace

TEST_CASE("pretrain_asr is bit-deterministic across runs") {
  auto ctx = tiny_ctx(120, 0.2, 5);
  ctx.cfg.train.steps = 25;
  ctx.cfg.train.eval_interval = 25;
  auto m1 = make_asr(ctx);
  auto m2 = make_asr(ctx);
  auto r1 = pretrain_asr(ctx, m1);
  auto r2 = pretrain_asr(ctx, m2);
  CHECK(r1.loss_lines == r2.loss_lines);
  CHECK(r1.metric_lines == r2.metric_lines);
}

TEST_CASE("asr smoke: cross-entropy halves and decoding becomes usable") {
  auto ctx = tiny_ctx(60, 0.0, 7);
  ctx.cfg.train.steps = 300;
  ctx.cfg.train.eval_interval = 300;
  auto model = make_asr(ctx);
  const double untrained = dev_wer(ctx, model, ctx.dev);
  auto rec = pretrain_asr(ctx, model);
  const double early = mean_field(rec.loss_lines, "asr", 0, 10);
  const double late = mean_field(rec.loss_lines, "asr", rec.loss_lines.size() - 10,
                                 rec.loss_lines.size());
  CHECK(late < 0.5 * early);
  CHECK(rec.final_metrics.wer < 0.8 * untrained);
  CHECK(std::isfinite(rec.final_metrics.wer));
}

TEST_CASE("nlu pretraining: MLM loss drops and masked accuracy beats uniform") {
  auto ctx = tiny_ctx(200, 0.0, 9);
  ctx.cfg.train.mlm_steps = 300;
  ctx.cfg.train.steps = 400;
  ctx.cfg.train.eval_interval = 400;
  auto model = make_nlu(ctx);
  auto rec = pretrain_nlu(ctx, model);
  // Phase 1 lines carry phase:"mlm" and the t2v component.
  std::vector<std::string> mlm;
  for (const auto& l : rec.loss_lines)
    if (json::parse(l).value("phase", "") == "mlm") mlm.push_back(l);
  REQUIRE(mlm.size() == 300);
  const double early = mean_field(mlm, "t2v", 0, 10);
  const double late = mean_field(mlm, "t2v", mlm.size() - 10, mlm.size());
  // Masked slot fillers are intrinsically unpredictable, so the attainable
  // drop is modest; require a clear decrease rather than a large one.
  CHECK(late < 0.92 * early);

  const double acc = mlm_masked_accuracy(ctx, model, ctx.dev, 0.15, 99);
  CHECK(acc > 1.0 / ctx.vocab.size());
  CHECK(rec.final_metrics.ic_accuracy > 0.4);  // far above the 1/8 chance rate
}

TEST_CASE("mask_prob 0 removes t2v from the text-task logs") {
  auto ctx = tiny_ctx(80, 0.0, 10);
  ctx.cfg.train.mask_prob = 0.0;
  ctx.cfg.train.mlm_steps = 0;
  ctx.cfg.train.steps = 15;
  ctx.cfg.train.eval_interval = 15;
  auto model = make_nlu(ctx);
  auto rec = pretrain_nlu(ctx, model);
  for (const auto& l : rec.loss_lines) {
    auto j = json::parse(l);
    CHECK_FALSE(j.contains("t2v"));
    CHECK(j.contains("t2i"));
    CHECK(j.contains("t2k"));
  }
}

TEST_CASE("label-shuffled corpus trains to chance-level intent accuracy") {
  auto ctx = tiny_ctx(160, 0.0, 12);
  Rng rng(13);
  const int n_intents = static_cast<int>(ctx.grammar.intents.size());
  for (auto& ex : ctx.train)
    if (ex.intent) ex.intent = rng.uniform_int(n_intents);
  for (auto& ex : ctx.dev)
    if (ex.intent) ex.intent = rng.uniform_int(n_intents);
  ctx.cfg.train.mlm_steps = 0;
  ctx.cfg.train.steps = 200;
  ctx.cfg.train.eval_interval = 200;
  auto model = make_nlu(ctx);
  auto rec = pretrain_nlu(ctx, model);
  // Chance is 1/8; allow slack for memorization of the small dev set.
  CHECK(rec.final_metrics.ic_accuracy < 0.45);
}

TEST_CASE("e2e_multitask: stream mixing, loss decomposition, component population") {
  auto ctx = tiny_ctx(200, 0.3, 11);
  ctx.cfg.train.regime = "e2e_multitask";
  ctx.cfg.train.steps = 300;
  ctx.cfg.train.eval_interval = 300;
  ctx.cfg.train.mix_ratios = {0.5, 0.25, 0.25};
  auto asr = make_asr(ctx);
  auto nlu = make_nlu(ctx);
  auto rec = train_e2e(ctx, asr, nlu);
  REQUIRE(rec.loss_lines.size() == 300);

  const LossWeights w;  // defaults match the run's config
  int counts[3] = {0, 0, 0};
  for (const auto& l : rec.loss_lines) {
    auto j = json::parse(l);
    const int stream = j.at("stream").get<int>();
    REQUIRE(stream >= 0);
    REQUIRE(stream <= 2);
    ++counts[stream];

    // Exact decomposition: total == weighted sum of the present components.
    double sum = 0;
    sum += w.s2i * j.value("s2i", 0.0) + w.s2k * j.value("s2k", 0.0) + w.s2v * j.value("s2v", 0.0);
    sum += w.t2i * j.value("t2i", 0.0) + w.t2k * j.value("t2k", 0.0) + w.t2v * j.value("t2v", 0.0);
    sum += w.asr * j.value("asr", 0.0);
    CHECK(std::abs(j.at("total").get<double>() - sum) <= 1e-12);

    // Each stream populates exactly the components its supervision permits.
    if (stream == 0) {
      CHECK(j.contains("asr"));
      CHECK(j.contains("s2i"));
      CHECK_FALSE(j.contains("t2i"));
    } else if (stream == 1) {
      CHECK(j.contains("asr"));
      CHECK_FALSE(j.contains("s2i"));
      CHECK_FALSE(j.contains("t2i"));
    } else {
      CHECK(j.contains("t2i"));
      CHECK(j.contains("t2k"));
      CHECK_FALSE(j.contains("asr"));
      CHECK_FALSE(j.contains("s2i"));
    }
  }
  // Multinomial 3-sigma bands around 150/75/75 draws.
  CHECK(std::abs(counts[0] - 150) <= 3 * std::sqrt(300 * 0.5 * 0.5));
  CHECK(std::abs(counts[1] - 75) <= 3 * std::sqrt(300 * 0.25 * 0.75));
  CHECK(std::abs(counts[2] - 75) <= 3 * std::sqrt(300 * 0.25 * 0.75));
}

TEST_CASE("e2e training updates the ASR encoder through the interface") {
  auto ctx = tiny_ctx(80, 0.1, 14);
  ctx.cfg.train.regime = "e2e";
  ctx.cfg.train.steps = 3;
  ctx.cfg.train.eval_interval = 3;
  auto asr = make_asr(ctx);
  auto nlu = make_nlu(ctx);
  const auto before = asr.params().at("asr.enc.l0.attn.wq")->v;
  train_e2e(ctx, asr, nlu);
  CHECK(asr.params().at("asr.enc.l0.attn.wq")->v != before);
}

TEST_CASE("frozen prefixes are left untouched by e2e training") {
  auto ctx = tiny_ctx(80, 0.1, 15);
  ctx.cfg.train.regime = "e2e";
  ctx.cfg.train.steps = 3;
  ctx.cfg.train.eval_interval = 3;
  ctx.cfg.train.freeze = {"asr."};
  auto asr = make_asr(ctx);
  auto nlu = make_nlu(ctx);
  const auto asr_before = asr.params().at("asr.enc.l0.attn.wq")->v;
  const auto nlu_before = nlu.params().at("nlu.enc.l0.attn.wq")->v;
  train_e2e(ctx, asr, nlu);
  CHECK(asr.params().at("asr.enc.l0.attn.wq")->v == asr_before);
  CHECK(nlu.params().at("nlu.enc.l0.attn.wq")->v != nlu_before);
}

TEST_CASE("compose_inference runs in both interface modes") {
  auto ctx = tiny_ctx(80, 0.2, 16);
  auto asr = make_asr(ctx);
  auto nlu = make_nlu(ctx);
  std::vector<UtteranceExample> few(ctx.dev.begin(), ctx.dev.begin() + 5);
  auto cont = compose_inference(ctx, asr, nlu, InterfaceMode::kContinuous, few);
  auto disc = compose_inference(ctx, asr, nlu, InterfaceMode::kDiscrete, few);
  CHECK(cont.example_count == 5);
  CHECK(disc.example_count == 5);
  // Untrained models share identical hypotheses, so WER agrees across modes.
  CHECK(cont.wer == disc.wer);
}
